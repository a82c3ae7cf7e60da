"""Fusion quality metrics: correlation, mutual information, Q-index and QNR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, ParameterError, StructuralError
from .raster import MultiBandImage, RasterBand, check_same_shape, downsample


def _arr(x) -> np.ndarray:
    return x.data if isinstance(x, RasterBand) else np.asarray(x, dtype=np.float64)


def correlation(a: RasterBand, b: RasterBand) -> float:
    """Pearson correlation coefficient of two equally sized bands."""
    x, y = _arr(a), _arr(b)
    if x.shape != y.shape:
        raise StructuralError(f"correlation of mismatched shapes {x.shape} and {y.shape}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = np.sum(dx * dx), np.sum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("correlation undefined for a band with zero variance")
    r = np.sum(dx * dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def avg_correlation(fused: MultiBandImage, ms_up: MultiBandImage, pan: RasterBand) -> float:
    """Half the sum of mean CC(F_i, PAN) and mean CC(F_i, MS_i)."""
    _check_triplet(fused, ms_up, pan)
    cc_pan = np.mean([correlation(f, pan) for f in fused])
    cc_ms = np.mean([correlation(f, m) for f, m in zip(fused, ms_up)])
    return float(0.5 * (cc_pan + cc_ms))


@dataclass(frozen=True)
class JointHistogram:
    bins: int
    counts: np.ndarray  # (bins, bins), rows index the first band

    @property
    def marginal_a(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def marginal_b(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def bin_indices(x: np.ndarray, bins: int) -> np.ndarray:
    """Linear bins over [min, max] of ``x``; the maximum falls in the top bin."""
    x = np.asarray(x, dtype=np.float64).ravel()
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros(x.size, dtype=np.int64)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def joint_histogram(a: RasterBand, b: RasterBand, bins: int = 64) -> JointHistogram:
    if not isinstance(bins, (int, np.integer)) or bins < 2:
        raise ParameterError(f"bin count must be an integer >= 2, got {bins!r}")
    x, y = _arr(a), _arr(b)
    if x.shape != y.shape:
        raise StructuralError(f"joint histogram of mismatched shapes {x.shape} and {y.shape}")
    flat = bin_indices(x, bins) * bins + bin_indices(y, bins)
    counts = np.bincount(flat, minlength=bins * bins).reshape(bins, bins)
    return JointHistogram(int(bins), counts)


def _plogp_ratio(p_ab: np.ndarray, p_a: np.ndarray, p_b: np.ndarray) -> float:
    nz = p_ab > 0
    outer = np.outer(p_a, p_b)
    return float(np.sum(p_ab[nz] * np.log(p_ab[nz] / outer[nz])))


def mutual_information(a: RasterBand, b: RasterBand, bins: int = 64) -> float:
    """Mutual information in nats from a ``bins`` x ``bins`` joint histogram."""
    hist = joint_histogram(a, b, bins)
    p = hist.counts / hist.total
    return _plogp_ratio(p, p.sum(axis=1), p.sum(axis=0))


def entropy(a: RasterBand, bins: int = 64) -> float:
    """Shannon entropy in nats of the band's ``bins``-level histogram."""
    counts = np.bincount(bin_indices(_arr(a), bins), minlength=bins)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def avg_mutual_information(fused: MultiBandImage, ms_up: MultiBandImage, pan: RasterBand, bins: int = 64) -> float:
    _check_triplet(fused, ms_up, pan)
    mi_pan = np.mean([mutual_information(f, pan, bins) for f in fused])
    mi_ms = np.mean([mutual_information(f, m, bins) for f, m in zip(fused, ms_up)])
    return float(0.5 * (mi_pan + mi_ms))


def q_index(a: RasterBand, b: RasterBand, window: int = 8) -> float:
    """Universal image quality index averaged over non-overlapping blocks.

    Pixels beyond the last full block are ignored. Blocks whose denominator
    vanishes (flat in both bands, or zero mean in both) are skipped.
    """
    x, y = _arr(a), _arr(b)
    if x.shape != y.shape:
        raise StructuralError(f"Q-index of mismatched shapes {x.shape} and {y.shape}")
    if not isinstance(window, (int, np.integer)) or window < 2:
        raise ParameterError(f"Q-index window must be an integer >= 2, got {window!r}")
    h, w = x.shape
    nh, nw = h // window, w // window
    if nh == 0 or nw == 0:
        raise ParameterError(f"Q-index window {window} larger than band {h}x{w}")

    def blocks(z):
        z = z[:nh * window, :nw * window].reshape(nh, window, nw, window)
        return z.transpose(0, 2, 1, 3).reshape(nh * nw, window * window)

    bx, by = blocks(x), blocks(y)
    mx, my = bx.mean(axis=1), by.mean(axis=1)
    dx, dy = bx - mx[:, None], by - my[:, None]
    vx, vy = (dx * dx).mean(axis=1), (dy * dy).mean(axis=1)
    cxy = (dx * dy).mean(axis=1)
    num = 4.0 * cxy * mx * my
    den = (vx + vy) * (mx * mx + my * my)
    ok = den > 0
    if not ok.any():
        raise DegenerateInputError("Q-index undefined: every block is degenerate")
    return float(np.mean(num[ok] / den[ok]))


def qnr(fused: MultiBandImage, ms_orig: MultiBandImage, pan: RasterBand, ratio: int = 4,
        q_window: int = 8, alpha: float = 1.0, beta: float = 1.0) -> tuple[float, float, float]:
    """No-reference quality: returns ``(d_lambda, d_s, qnr)``.

    ``ms_orig`` is the multispectral image at its native resolution; ``fused``
    and ``pan`` live on the grid ``ratio`` times finer.
    """
    n = fused.band_count
    if ms_orig.band_count != n:
        raise StructuralError(f"fused has {n} bands, original MS has {ms_orig.band_count}")
    if fused.shape != pan.shape:
        raise StructuralError(f"fused grid {fused.shape} differs from PAN grid {pan.shape}")
    if (ms_orig.height * ratio, ms_orig.width * ratio) != pan.shape:
        raise StructuralError(
            f"MS grid {ms_orig.shape} times ratio {ratio} does not match PAN grid {pan.shape}")

    d_lambda = 0.0
    if n > 1:
        total = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    total += abs(q_index(fused[i], fused[j], q_window) - q_index(ms_orig[i], ms_orig[j], q_window))
        d_lambda = total / (n * (n - 1))

    pan_low = downsample(pan, ratio)
    d_s = float(np.mean([
        abs(q_index(fused[i], pan, q_window) - q_index(ms_orig[i], pan_low, q_window)) for i in range(n)
    ]))
    return d_lambda, d_s, (1.0 - d_lambda) ** alpha * (1.0 - d_s) ** beta


def _check_triplet(fused: MultiBandImage, ms: MultiBandImage, pan: RasterBand):
    if fused.band_count != ms.band_count:
        raise StructuralError(f"fused has {fused.band_count} bands, MS has {ms.band_count}")
    check_same_shape(fused[0], ms[0], pan, what="fused, MS and PAN")


@dataclass(frozen=True)
class MetricsReport:
    """One row of the method comparison table."""

    method: object
    cc_avg: float = math.nan
    mi_avg: float = math.nan
    d_lambda: float = math.nan
    d_s: float = math.nan
    qnr: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def violations(self, alpha: float = 1.0, beta: float = 1.0) -> list[str]:
        """Broken invariants of a successful row (empty when valid)."""
        if not self.ok:
            return []
        bad = []
        if not -1.0 <= self.cc_avg <= 1.0:
            bad.append(f"cc_avg {self.cc_avg} outside [-1, 1]")
        if not self.mi_avg >= -1e-12:
            bad.append(f"mi_avg {self.mi_avg} negative")
        for name in ("d_lambda", "d_s", "qnr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                bad.append(f"{name} {v} outside [0, 1]")
        expected = (1.0 - self.d_lambda) ** alpha * (1.0 - self.d_s) ** beta
        if not abs(self.qnr - expected) <= 1e-12:
            bad.append(f"qnr {self.qnr} != (1 - d_lambda)(1 - d_s) = {expected}")
        return bad
