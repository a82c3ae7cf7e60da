"""Cyclic Jacobi eigendecomposition for the small band-covariance matrices used by PCA."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a real symmetric matrix.

    Returns ``(values, vectors)`` with eigenvalues sorted in descending order
    and eigenvectors as columns.  Meant for n <= 16; cost is O(n^3) per sweep.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-300):
        raise ParameterError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.abs(a).max(initial=0.0)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale or scale == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation angle from the symmetric Schur decomposition of the (p, q) block
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vp, vq
    else:
        raise ArithmeticError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]
