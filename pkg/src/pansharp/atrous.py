"""Undecimated "a trous" wavelet transform with the B3 cubic-spline scaling kernel.

Level j smooths the previous approximation with the 5-tap kernel
[1, 4, 6, 4, 1] / 16 dilated by 2**(j-1) (holes between the taps), applied
along rows and then columns.  The detail plane is the difference of
consecutive approximations, so the source is the residual plus the sum of
all planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StructuralError
from .raster import BORDER_MODE, RasterBand, check_same_shape

B3_TAPS = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

_BOUNDARIES = {"mirror": BORDER_MODE, "periodic": "wrap"}


@dataclass(frozen=True)
class WaveletDecomposition:
    planes: tuple[RasterBand, ...]
    residual: RasterBand

    def __post_init__(self):
        if not self.planes:
            raise StructuralError("a decomposition needs at least one detail plane")
        check_same_shape(self.residual, *self.planes, what="wavelet planes and residual")

    @property
    def levels(self) -> int:
        return len(self.planes)

    @property
    def shape(self) -> tuple[int, int]:
        return self.residual.shape


def footprint(levels: int) -> int:
    """Width in pixels of the dilated kernel at the deepest level."""
    return 4 * 2 ** (levels - 1) + 1


def max_levels(height: int, width: int) -> int:
    n = 0
    while footprint(n + 1) <= min(height, width):
        n += 1
    return n


def _smooth_axis(arr: np.ndarray, step: int, axis: int, mode: str) -> np.ndarray:
    reach = 2 * step
    pad = [(0, 0), (0, 0)]
    pad[axis] = (reach, reach)
    ext = np.pad(arr, pad, mode=mode)
    n = arr.shape[axis]
    out = np.zeros_like(arr)
    for k, tap in enumerate(B3_TAPS):
        start = k * step
        sl = [slice(None), slice(None)]
        sl[axis] = slice(start, start + n)
        out += tap * ext[tuple(sl)]
    return out


def b3_smooth(arr: np.ndarray, step: int = 1, boundary: str = "mirror") -> np.ndarray:
    """Separable B3 lowpass with ``step - 1`` zeros between taps."""
    mode = _BOUNDARIES[boundary]
    return _smooth_axis(_smooth_axis(arr, step, 1, mode), step, 0, mode)


def atrous_decompose(band: RasterBand, levels: int = 2, boundary: str = "mirror") -> WaveletDecomposition:
    """Split ``band`` into ``levels`` detail planes and a lowpass residual.

    ``boundary`` is "mirror" (default) or "periodic"; the latter makes the
    transform exactly covariant under circular shifts.
    """
    band = band if isinstance(band, RasterBand) else RasterBand(band)
    if not isinstance(levels, (int, np.integer)) or levels < 1:
        raise ParameterError(f"level count must be a positive integer, got {levels!r}")
    if boundary not in _BOUNDARIES:
        raise ParameterError(f"unknown boundary {boundary!r}; use 'mirror' or 'periodic'")
    if footprint(levels) > min(band.shape):
        raise ParameterError(
            f"band {band.height}x{band.width} too small for {levels} levels "
            f"(dilated kernel spans {footprint(levels)} px); "
            f"at most {max_levels(*band.shape)} levels are feasible")

    c_prev = band.data
    planes = []
    for j in range(levels):
        c_next = b3_smooth(c_prev, 2 ** j, boundary)
        planes.append(RasterBand(c_prev - c_next))
        c_prev = c_next
    return WaveletDecomposition(tuple(planes), RasterBand(c_prev))


def detail_sum(decomp: WaveletDecomposition) -> RasterBand:
    total = np.zeros(decomp.shape)
    for plane in decomp.planes:
        total += plane.data
    return RasterBand(total)


def atrous_reconstruct(decomp: WaveletDecomposition) -> RasterBand:
    check_same_shape(decomp.residual, *decomp.planes, what="wavelet planes and residual")
    return RasterBand(decomp.residual.data + detail_sum(decomp).data)
