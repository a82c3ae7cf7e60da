"""Pansharpening methods.

Every ``fuse_*`` function takes the multispectral image already resampled to
the panchromatic grid and returns a float image on that grid.  Negative or
out-of-range values are kept; clipping happens only when saving.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .atrous import atrous_decompose, detail_sum
from .errors import DegenerateInputError, ParameterError, StructuralError
from .linalg import jacobi_eigh
from .raster import MultiBandImage, RasterBand, boxcar_filter, histogram_match


class FusionMethod(enum.Enum):
    BROVEY = "brovey"
    IHS = "ihs"
    PCA = "pca"
    HPM_BOXCAR = "hpm"
    ATROUS_ADDITIVE = "awl"
    WAVELET_HPM = "whpm"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "FusionMethod":
        key = name.strip().lower()
        for m in cls:
            if key in (m.value, m.name.lower(), m.label.lower()):
                return m
        raise ParameterError(f"unknown fusion method {name!r}; choose from {', '.join(m.value for m in cls)}")


_LABELS = {
    FusionMethod.BROVEY: "Brovey",
    FusionMethod.IHS: "IHS",
    FusionMethod.PCA: "PCA",
    FusionMethod.HPM_BOXCAR: "HpmBoxcar",
    FusionMethod.ATROUS_ADDITIVE: "AtrousAdditive",
    FusionMethod.WAVELET_HPM: "WaveletHpm",
}

# column order of the published comparison table: proposed, HPM, wavelet, Brovey, PCA, IHS
TABLE_ORDER = (
    FusionMethod.WAVELET_HPM,
    FusionMethod.HPM_BOXCAR,
    FusionMethod.ATROUS_ADDITIVE,
    FusionMethod.BROVEY,
    FusionMethod.PCA,
    FusionMethod.IHS,
)


@dataclass(frozen=True)
class FusionParams:
    """Tunable parameters shared by all methods.

    ``boxcar_window`` defaults to ``2 * ratio + 1`` and ``epsilon`` to
    ``1e-6 * mean(PAN)`` when left as None.
    """

    levels: int = 2
    boxcar_window: Optional[int] = None
    epsilon: Optional[float] = None
    ratio: int = 4

    def __post_init__(self):
        if not isinstance(self.ratio, (int, np.integer)) or self.ratio < 1:
            raise ParameterError(f"ratio must be an integer >= 1, got {self.ratio!r}")
        if not isinstance(self.levels, (int, np.integer)) or self.levels < 1:
            raise ParameterError(f"levels must be an integer >= 1, got {self.levels!r}")
        w = self.window
        if not isinstance(w, (int, np.integer)) or w < 3 or w % 2 == 0:
            raise ParameterError(f"boxcar window must be an odd integer >= 3, got {w!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")

    @property
    def window(self) -> int:
        return 2 * self.ratio + 1 if self.boxcar_window is None else self.boxcar_window

    def epsilon_for(self, pan: RasterBand) -> float:
        if self.epsilon is not None:
            return float(self.epsilon)
        eps = 1e-6 * float(pan.data.mean())
        if not eps > 0:
            raise ParameterError("default epsilon needs a positive PAN mean; pass epsilon explicitly")
        return eps

    def with_(self, **changes) -> "FusionParams":
        return replace(self, **changes)


DEFAULT_PARAMS = FusionParams()


def _check_inputs(ms: MultiBandImage, pan: RasterBand):
    if not isinstance(ms, MultiBandImage):
        raise StructuralError(f"ms must be a MultiBandImage, got {type(ms).__name__}")
    if not isinstance(pan, RasterBand):
        raise StructuralError(f"pan must be a RasterBand, got {type(pan).__name__}")
    if ms.shape != pan.shape:
        raise StructuralError(
            f"MS grid {ms.height}x{ms.width} differs from PAN grid {pan.height}x{pan.width}; "
            "upsample MS to the PAN grid first")


def _modulate(ms: MultiBandImage, detail: np.ndarray, lowpass: np.ndarray, eps: float) -> MultiBandImage:
    """F_i = MS_i + detail * MS_i / max(lowpass, eps)."""
    denom = np.maximum(lowpass, eps)
    return MultiBandImage(b.data + detail * b.data / denom for b in ms)


def fuse_hpm_boxcar(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    """High-pass modulation with a boxcar lowpass of the PAN image."""
    _check_inputs(ms, pan)
    eps = params.epsilon_for(pan)
    pan_low = boxcar_filter(pan, params.window).data
    return _modulate(ms, pan.data - pan_low, pan_low, eps)


def fuse_atrous_additive(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    """Adds the summed a trous detail planes of PAN to every band."""
    _check_inputs(ms, pan)
    detail = detail_sum(atrous_decompose(pan, params.levels)).data
    return MultiBandImage(b.data + detail for b in ms)


def fuse_wavelet_hpm(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    """High-pass modulation whose detail and lowpass come from the a trous transform.

    F_i = MS_i + D * MS_i / max(PAN - D, eps), D = sum of the detail planes of PAN.
    """
    _check_inputs(ms, pan)
    eps = params.epsilon_for(pan)
    decomp = atrous_decompose(pan, params.levels)
    detail = detail_sum(decomp).data
    lowpass = pan.data - detail
    drift = np.abs(lowpass - decomp.residual.data).max()
    if drift > 1e-9 * max(1.0, np.abs(pan.data).max()):
        raise ArithmeticError(f"PAN minus detail differs from the wavelet residual by {drift:.3g}")
    return _modulate(ms, detail, lowpass, eps)


def fuse_brovey(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    _check_inputs(ms, pan)
    eps = params.epsilon_for(pan)
    intensity = ms.stack().mean(axis=0)
    gain = pan.data / np.maximum(intensity, eps)
    return MultiBandImage(b.data * gain for b in ms)


def _match_to(pan: RasterBand, reference: np.ndarray) -> np.ndarray:
    """Histogram-matched PAN; a flat PAN is only shifted to the reference mean."""
    if pan.data.std() == 0.0:
        return pan.data - pan.data.mean() + reference.mean()
    return histogram_match(pan, RasterBand(reference)).data


def fuse_ihs(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    """Fast linear IHS: add (matched PAN - intensity) to each of the three bands."""
    _check_inputs(ms, pan)
    if ms.band_count != 3:
        raise ParameterError(f"IHS fusion needs exactly 3 bands, got {ms.band_count}")
    intensity = ms.stack().mean(axis=0)
    delta = _match_to(pan, intensity) - intensity
    return MultiBandImage(b.data + delta for b in ms)


@dataclass(frozen=True)
class PcaBasis:
    means: np.ndarray        # (bands,)
    eigenvalues: np.ndarray  # descending
    vectors: np.ndarray      # (bands, bands), columns are loadings, PC1 first


def pca_basis(ms: MultiBandImage, condition: float = 1e-12) -> PcaBasis:
    """Principal axes of the band covariance, PC1 loading oriented to a positive sum."""
    if ms.band_count < 2:
        raise ParameterError(f"PCA fusion needs at least 2 bands, got {ms.band_count}")
    x = ms.stack().reshape(ms.band_count, -1)
    means = x.mean(axis=1)
    xc = x - means[:, None]
    cov = xc @ xc.T / xc.shape[1]
    values, vectors = jacobi_eigh(cov)
    if not values[0] > 0 or values[-1] <= condition * values[0]:
        raise DegenerateInputError(
            f"band covariance is singular or ill-conditioned (eigenvalues {values[-1]:.3g} .. {values[0]:.3g})")
    # deterministic orientation: positive loading sum, ties broken by the largest entry
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        s = col.sum()
        if s < 0 or (s == 0 and col[np.argmax(np.abs(col))] < 0):
            vectors[:, k] = -col
    return PcaBasis(means, values, vectors)


def pca_forward(ms: MultiBandImage, basis: PcaBasis) -> np.ndarray:
    """Principal component images, shape (bands, height, width)."""
    x = ms.stack().reshape(ms.band_count, -1) - basis.means[:, None]
    return (basis.vectors.T @ x).reshape(ms.band_count, ms.height, ms.width)


def pca_inverse(components: np.ndarray, basis: PcaBasis) -> MultiBandImage:
    n, h, w = components.shape
    x = basis.vectors @ components.reshape(n, -1) + basis.means[:, None]
    return MultiBandImage.from_array(x.reshape(n, h, w))


def fuse_pca(ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    """Replace the first principal component with PAN matched to it."""
    _check_inputs(ms, pan)
    basis = pca_basis(ms)
    pcs = pca_forward(ms, basis)
    pcs[0] = _match_to(pan, pcs[0])
    return pca_inverse(pcs, basis)


_DISPATCH = {
    FusionMethod.BROVEY: fuse_brovey,
    FusionMethod.IHS: fuse_ihs,
    FusionMethod.PCA: fuse_pca,
    FusionMethod.HPM_BOXCAR: fuse_hpm_boxcar,
    FusionMethod.ATROUS_ADDITIVE: fuse_atrous_additive,
    FusionMethod.WAVELET_HPM: fuse_wavelet_hpm,
}


def fuse(method, ms: MultiBandImage, pan: RasterBand, params: FusionParams = DEFAULT_PARAMS) -> MultiBandImage:
    if not isinstance(method, FusionMethod):
        method = FusionMethod.parse(str(method))
    return _DISPATCH[method](ms, pan, params)
