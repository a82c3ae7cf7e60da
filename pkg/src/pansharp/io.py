"""Binary PGM bands, text manifests for multi-band images, and raw f32 debug dumps.

Manifest format, one entry per line, paths relative to the manifest::

    # optional comment
    band=ms_b0.pgm
    band=ms_b1.pgm
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import ParameterError, RasterIOError
from .raster import MultiBandImage, RasterBand

_WS = b" \t\r\n\v\f"


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise RasterIOError(f"cannot read file ({exc.strerror or exc})", path) from exc


def _write_bytes(path: Path, payload: bytes):
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise RasterIOError(f"cannot write file ({exc.strerror or exc})", path) from exc


def _pgm_header(data: bytes, path: Path) -> tuple[int, int, int, int]:
    """Parse the P5 header; returns (width, height, maxval, offset of pixel data)."""
    if data[:2] != b"P5":
        raise RasterIOError("not a binary PGM file (magic P5 expected)", path)
    pos, fields = 2, []
    while len(fields) < 3:
        while pos < len(data) and data[pos] in _WS:
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in _WS and data[pos:pos + 1] != b"#":
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise RasterIOError(f"malformed header field {token[:16]!r}", path)
        fields.append(int(token))
    if pos >= len(data) or data[pos] not in _WS:
        raise RasterIOError("missing whitespace after maxval", path)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise RasterIOError(f"invalid dimensions {width}x{height}", path)
    if not 1 <= maxval <= 65535:
        raise RasterIOError(f"maxval {maxval} outside 1..65535", path)
    return width, height, maxval, pos + 1


def load_band(path) -> RasterBand:
    """Read a binary (P5) PGM file into a float64 band."""
    path = Path(path)
    data = _read_bytes(path)
    width, height, maxval, offset = _pgm_header(data, path)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    pixels = data[offset:offset + expected]
    if len(pixels) != expected:
        raise RasterIOError(f"truncated pixel data: {len(pixels)} of {expected} bytes", path)
    arr = np.frombuffer(pixels, dtype=dtype).reshape(height, width)
    if arr.max(initial=0) > maxval:
        raise RasterIOError(f"sample value exceeds maxval {maxval}", path)
    return RasterBand(arr.astype(np.float64))


def quantize(band: RasterBand, maxval: int) -> np.ndarray:
    """Round and clip samples to the integer range [0, maxval]."""
    return np.clip(np.rint(band.data), 0, maxval)


def save_band(band: RasterBand, path, maxval: int = 65535):
    """Write ``band`` as P5 PGM; values are rounded and clipped to [0, maxval].

    maxval <= 255 stores one byte per sample, larger values two bytes big-endian.
    """
    if not 1 <= maxval <= 65535:
        raise ParameterError(f"maxval must be in 1..65535, got {maxval}")
    band = band if isinstance(band, RasterBand) else RasterBand(band)
    dtype = ">u2" if maxval > 255 else "u1"
    pixels = quantize(band, maxval).astype(dtype).tobytes()
    header = f"P5\n{band.width} {band.height}\n{maxval}\n".encode("ascii")
    _write_bytes(Path(path), header + pixels)


_ENTRY = re.compile(r"^\s*band\s*=\s*(.+?)\s*$")


def read_manifest(path) -> list[Path]:
    """Band file paths listed in a manifest, resolved against its directory."""
    path = Path(path)
    text = _read_bytes(path).decode("utf-8", errors="replace")
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _ENTRY.match(stripped)
        if m is None:
            raise RasterIOError(f"line {lineno}: expected 'band=<path>', got {stripped!r}", path)
        entries.append(path.parent / m.group(1))
    if not entries:
        raise RasterIOError("manifest lists no bands", path)
    return entries


def load_multiband(manifest_path) -> MultiBandImage:
    """Load every band listed in a manifest; all must share dimensions."""
    paths = read_manifest(manifest_path)
    bands = []
    for p in paths:
        band = load_band(p)
        if bands and band.shape != bands[0].shape:
            raise RasterIOError(
                f"dimensions {band.width}x{band.height} differ from first band "
                f"{bands[0].width}x{bands[0].height}", p)
        bands.append(band)
    return MultiBandImage(bands)


def save_multiband(image: MultiBandImage, manifest_path, maxval: int = 65535) -> list[Path]:
    """Write each band as ``<stem>_b<i>.pgm`` beside the manifest, then the manifest."""
    manifest_path = Path(manifest_path)
    try:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RasterIOError(f"cannot create directory ({exc.strerror or exc})", manifest_path.parent) from exc
    stem = manifest_path.stem
    written = []
    lines = [f"# {image.band_count} bands, {image.width}x{image.height}"]
    for i, band in enumerate(image):
        name = f"{stem}_b{i}.pgm"
        save_band(band, manifest_path.parent / name, maxval=maxval)
        lines.append(f"band={name}")
        written.append(manifest_path.parent / name)
    _write_bytes(manifest_path, ("\n".join(lines) + "\n").encode("utf-8"))
    return written


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".hdr")


def save_raw_f32(band: RasterBand, path):
    """Dump float samples as little-endian f32 with a ``<path>.hdr`` text sidecar."""
    path = Path(path)
    band = band if isinstance(band, RasterBand) else RasterBand(band)
    _write_bytes(path, band.data.astype("<f4").tobytes())
    _write_bytes(_sidecar(path), f"width={band.width} height={band.height} dtype=f32\n".encode("ascii"))


def load_raw_f32(path) -> RasterBand:
    path = Path(path)
    header = _read_bytes(_sidecar(path)).decode("ascii", errors="replace").split()
    try:
        fields = dict(item.split("=", 1) for item in header)
        width, height = int(fields["width"]), int(fields["height"])
    except (ValueError, KeyError) as exc:
        raise RasterIOError("malformed raw header", _sidecar(path)) from exc
    if fields.get("dtype") != "f32":
        raise RasterIOError(f"unsupported dtype {fields.get('dtype')!r}", _sidecar(path))
    data = _read_bytes(path)
    if len(data) != width * height * 4:
        raise RasterIOError(f"expected {width * height * 4} bytes, found {len(data)}", path)
    return RasterBand(np.frombuffer(data, dtype="<f4").reshape(height, width).astype(np.float64))

