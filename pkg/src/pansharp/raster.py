"""Raster containers and the resampling / filtering primitives shared by all methods.

Bands are stored as read-only float64 arrays of shape (height, width).
Every convolution extends borders by half-sample symmetric reflection
(``d c b a | a b c d | d c b a``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import DegenerateInputError, ParameterError, StructuralError

BORDER_MODE = "symmetric"  # numpy.pad name for the reflect extension


class RasterBand:
    """Single band of real-valued samples, immutable after construction."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise StructuralError(f"a band must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise StructuralError(f"a band needs at least one pixel, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("band samples must be finite")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def constant(cls, height: int, width: int, value: float) -> "RasterBand":
        return cls(np.full((height, width), value, dtype=np.float64))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def samples(self) -> np.ndarray:
        """Row-major flat view of the samples."""
        return self._data.ravel()

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, RasterBand):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    __hash__ = None

    def __repr__(self):
        return f"RasterBand({self.height}x{self.width})"


class MultiBandImage:
    """Ordered, co-registered bands of identical dimensions."""

    __slots__ = ("_bands",)

    def __init__(self, bands: Iterable):
        bands = tuple(b if isinstance(b, RasterBand) else RasterBand(b) for b in bands)
        if not bands:
            raise StructuralError("an image needs at least one band")
        shape = bands[0].shape
        for i, b in enumerate(bands[1:], start=1):
            if b.shape != shape:
                raise StructuralError(f"band {i} has shape {b.shape}, band 0 has {shape}")
        self._bands = bands

    @classmethod
    def from_array(cls, cube) -> "MultiBandImage":
        """Build from an array of shape (bands, height, width)."""
        cube = np.asarray(cube, dtype=np.float64)
        if cube.ndim != 3:
            raise StructuralError(f"expected (bands, height, width), got shape {cube.shape}")
        return cls(cube[i] for i in range(cube.shape[0]))

    @property
    def bands(self) -> tuple[RasterBand, ...]:
        return self._bands

    @property
    def band_count(self) -> int:
        return len(self._bands)

    @property
    def width(self) -> int:
        return self._bands[0].width

    @property
    def height(self) -> int:
        return self._bands[0].height

    @property
    def shape(self) -> tuple[int, int]:
        return self._bands[0].shape

    def stack(self) -> np.ndarray:
        """Copy of the samples as a (bands, height, width) array."""
        return np.stack([b.data for b in self._bands])

    def map(self, fn) -> "MultiBandImage":
        return MultiBandImage(fn(b) for b in self._bands)

    def __len__(self):
        return len(self._bands)

    def __iter__(self):
        return iter(self._bands)

    def __getitem__(self, i) -> RasterBand:
        return self._bands[i]

    def __eq__(self, other):
        if not isinstance(other, MultiBandImage):
            return NotImplemented
        return self._bands == other._bands

    __hash__ = None

    def __repr__(self):
        return f"MultiBandImage({self.band_count} bands, {self.height}x{self.width})"


@dataclass(frozen=True)
class Kernel2D:
    """Normalized, point-symmetric square lowpass kernel."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise ParameterError(f"kernel must be square with odd size, got shape {w.shape}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ParameterError(f"kernel weights sum to {w.sum()!r}, expected 1")
        if not np.allclose(w, w[::-1, ::-1], rtol=0, atol=1e-15):
            raise ParameterError("kernel must be symmetric under 180 degree rotation")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def boxcar(cls, window: int) -> "Kernel2D":
        return cls(np.full((window, window), 1.0 / (window * window)))

    @classmethod
    def separable(cls, taps: Sequence[float]) -> "Kernel2D":
        t = np.asarray(taps, dtype=np.float64)
        return cls(np.outer(t, t))


def _as_band(band) -> RasterBand:
    return band if isinstance(band, RasterBand) else RasterBand(band)


def check_same_shape(*bands, what="inputs"):
    shapes = {b.shape for b in bands}
    if len(shapes) > 1:
        raise StructuralError(f"{what} have mismatched dimensions: {sorted(shapes)}")


def boxcar_filter(band: RasterBand, window: int) -> RasterBand:
    """Moving-average lowpass over a ``window`` x ``window`` neighbourhood."""
    band = _as_band(band)
    if not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise ParameterError(f"boxcar window must be a positive odd integer, got {window!r}")
    if window > min(band.shape):
        raise ParameterError(f"boxcar window {window} exceeds band size {band.height}x{band.width}")
    if window == 1:
        return band
    # scipy's "reflect" is the same half-sample symmetric extension as BORDER_MODE
    return RasterBand(uniform_filter(band.data, size=window, mode="reflect"))


def _keys_weights(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Cubic convolution weights for taps at offsets -1, 0, 1, 2 from floor(x)."""
    d = np.stack([1.0 + t, t, 1.0 - t, 2.0 - t])
    d2, d3 = d * d, d * d * d
    near = (a + 2.0) * d3 - (a + 3.0) * d2 + 1.0
    far = a * d3 - 5.0 * a * d2 + 8.0 * a * d - 4.0 * a
    return np.where(d <= 1.0, near, far)


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


def _upsample_axis(arr: np.ndarray, factor: int, axis: int) -> np.ndarray:
    n = arr.shape[axis]
    # pixel-centre alignment: output k sits at input coordinate (k + 0.5) / factor - 0.5
    x = (np.arange(n * factor) + 0.5) / factor - 0.5
    base = np.floor(x)
    w = _keys_weights(x - base)
    base = base.astype(np.int64)
    out = None
    for k, off in enumerate((-1, 0, 1, 2)):
        idx = _reflect_index(base + off, n)
        shape = [1] * arr.ndim
        shape[axis] = -1
        term = np.take(arr, idx, axis=axis) * w[k].reshape(shape)
        out = term if out is None else out + term
    return out


def upsample(band: RasterBand, factor: int) -> RasterBand:
    """Bicubic (Keys, a = -0.5) interpolation onto a grid ``factor`` times finer."""
    band = _as_band(band)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ParameterError(f"upsampling factor must be a positive integer, got {factor!r}")
    if factor == 1:
        return band
    out = _upsample_axis(band.data, factor, axis=0)
    out = _upsample_axis(out, factor, axis=1)
    return RasterBand(out)


def downsample(band: RasterBand, factor: int) -> RasterBand:
    """Boxcar prefilter of size ``factor`` followed by decimation, i.e. block means."""
    band = _as_band(band)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ParameterError(f"downsampling factor must be a positive integer, got {factor!r}")
    h, w = band.shape
    if h % factor or w % factor:
        raise ParameterError(f"band size {h}x{w} is not divisible by factor {factor}")
    if factor == 1:
        return band
    blocks = band.data.reshape(h // factor, factor, w // factor, factor)
    return RasterBand(blocks.mean(axis=(1, 3)))


def histogram_match(source: RasterBand, reference: RasterBand) -> RasterBand:
    """Affine match of ``source`` to the mean and standard deviation of ``reference``."""
    source, reference = _as_band(source), _as_band(reference)
    s_mean, s_std = source.data.mean(), source.data.std()
    if s_std == 0.0:
        raise DegenerateInputError("cannot match a source band with zero standard deviation")
    r_mean, r_std = reference.data.mean(), reference.data.std()
    return RasterBand((source.data - s_mean) * (r_std / s_std) + r_mean)


def upsample_image(image: MultiBandImage, factor: int) -> MultiBandImage:
    return image.map(lambda b: upsample(b, factor))


def downsample_image(image: MultiBandImage, factor: int) -> MultiBandImage:
    return image.map(lambda b: downsample(b, factor))
