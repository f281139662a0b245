"""Multiband raster data model, normalization, and bit-exact file I/O.

On-disk format is deliberately plain: a UTF-8 text header sidecar
(`key value` lines for width/height/bands/dtype, order-insensitive,
``#`` comments allowed) next to a raw data file laid out band 0
row-major, then band 1, and so on. u16 and f32 samples are
little-endian. Label rasters are written as binary PGM (P5) with
maxval 65535 and big-endian samples, per the PGM standard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SizeError

_DTYPES = {
    "u8": np.dtype("u1"),
    "u16": np.dtype("<u2"),
    "f32le": np.dtype("<f4"),
}


@dataclass
class RasterHeader:
    width: int
    height: int
    bands: int
    dtype: str
    band_names: list[str] | None = None

    def __post_init__(self):
        for name in ("width", "height", "bands"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ParseError(f"header {name} must be a positive integer, got {v!r}")
        if self.dtype not in _DTYPES:
            raise ParseError(f"unknown dtype {self.dtype!r}, expected one of {sorted(_DTYPES)}")

    @property
    def sample_bytes(self) -> int:
        return _DTYPES[self.dtype].itemsize

    @property
    def data_bytes(self) -> int:
        return self.width * self.height * self.bands * self.sample_bytes


@dataclass
class MultiBandRaster:
    """width x height x bands grid; data indexed [band, y, x], float64."""

    width: int
    height: int
    bands: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.width <= 0 or self.height <= 0 or self.bands <= 0:
            raise ValueError("raster dimensions must be positive")
        if self.data.shape != (self.bands, self.height, self.width):
            raise ValueError(
                f"data shape {self.data.shape} != (bands, height, width) "
                f"({self.bands}, {self.height}, {self.width})"
            )
        if not np.isfinite(self.data).all():
            raise ValueError("raster contains non-finite values")

    def band(self, index: int) -> "Band":
        if not 0 <= index < self.bands:
            raise ValueError(f"band index {index} out of range 0..{self.bands - 1}")
        return Band(self.width, self.height, self.data[index].copy())


@dataclass
class Band:
    """Single-channel 2D grid; data indexed [y, x], float64."""

    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"band shape {self.data.shape} != (height, width) ({self.height}, {self.width})"
            )
        if not np.isfinite(self.data).all():
            raise ValueError("band contains non-finite values")


@dataclass
class LabelRaster:
    """Per-pixel non-negative integer labels; 0 is the reserved null label."""

    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if not np.issubdtype(self.data.dtype, np.integer):
            raise ValueError("label data must be integer")
        self.data = self.data.astype(np.int32)
        if self.data.shape != (self.height, self.width):
            raise ValueError("label shape disagrees with declared dimensions")
        if (self.data < 0).any():
            raise ValueError("labels must be non-negative")


def parse_header(path) -> RasterHeader:
    """Parse the text header sidecar. Lines are `key value`; `#` comments."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: header is not UTF-8 text: {exc}") from exc
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected `key value`, got {raw!r}")
        key, value = parts
        if key in fields:
            raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
        fields[key] = value
    missing = {"width", "height", "bands", "dtype"} - fields.keys()
    if missing:
        raise ParseError(f"{path}: missing header keys: {sorted(missing)}")
    unknown = fields.keys() - {"width", "height", "bands", "dtype"}
    if unknown:
        raise ParseError(f"{path}: unknown header keys: {sorted(unknown)}")
    try:
        width = int(fields["width"])
        height = int(fields["height"])
        bands = int(fields["bands"])
    except ValueError as exc:
        raise ParseError(f"{path}: non-integer dimension: {exc}") from exc
    return RasterHeader(width, height, bands, fields["dtype"])


def load_raster(header_path, data_path) -> MultiBandRaster:
    """Load a raster; integer samples are widened to float without rescaling."""
    header = parse_header(header_path)
    with open(data_path, "rb") as fh:
        raw = fh.read()
    if len(raw) != header.data_bytes:
        raise SizeError(
            f"{data_path}: expected {header.data_bytes} bytes for "
            f"{header.width}x{header.height}x{header.bands} {header.dtype}, got {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype=_DTYPES[header.dtype])
    data = flat.reshape(header.bands, header.height, header.width).astype(np.float64)
    if header.dtype == "f32le" and not np.isfinite(data).all():
        raise ValueError(f"{data_path}: f32 data contains NaN or Inf samples")
    return MultiBandRaster(header.width, header.height, header.bands, data)


def save_raster(r: MultiBandRaster, header_path, data_path, dtype: str = "f32le") -> None:
    """Write the header sidecar and raw band-sequential data file."""
    if dtype not in _DTYPES:
        raise ValueError(f"unknown dtype {dtype!r}")
    if dtype == "u8":
        if (r.data < 0).any() or (r.data > 255).any():
            raise ValueError("u8 output requires values in [0, 255]")
        out = r.data.astype("u1")
    elif dtype == "u16":
        if (r.data < 0).any() or (r.data > 65535).any():
            raise ValueError("u16 output requires values in [0, 65535]")
        out = r.data.astype("<u2")
    else:
        out = r.data.astype("<f4")
    with open(header_path, "w", encoding="utf-8") as fh:
        fh.write(f"width {r.width}\nheight {r.height}\nbands {r.bands}\ndtype {dtype}\n")
    with open(data_path, "wb") as fh:
        fh.write(out.tobytes())


def normalize_bands(r: MultiBandRaster) -> MultiBandRaster:
    """Min-max scale each band independently to [0, 1].

    A constant band maps to all zeros: it carries no discriminative
    information and the degenerate rule avoids dividing by zero.
    """
    out = np.zeros_like(r.data)
    for b in range(r.bands):
        band = r.data[b]
        lo = band.min()
        hi = band.max()
        if hi > lo:
            out[b] = (band - lo) / (hi - lo)
    return MultiBandRaster(r.width, r.height, r.bands, out)


def band_ranges(r: MultiBandRaster) -> tuple[np.ndarray, np.ndarray]:
    """Per-band (min, max) over the whole image."""
    mins = r.data.min(axis=(1, 2))
    maxs = r.data.max(axis=(1, 2))
    return mins, maxs


# ---------------------------------------------------------------------------
# NetPBM I/O (PGM P5 for labels and masks, PPM P6 for overlays)
# ---------------------------------------------------------------------------


def _read_pnm_tokens(raw: bytes, magic: bytes, path) -> tuple[list[int], int]:
    """Read the 3 integer header tokens after `magic`; returns (ints, offset)."""
    if not raw.startswith(magic):
        raise ParseError(f"{path}: not a {magic.decode()} file")
    pos = len(magic)
    ints: list[int] = []
    while len(ints) < 3:
        if pos >= len(raw):
            raise ParseError(f"{path}: truncated header")
        c = raw[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = raw.find(b"\n", pos)
            pos = len(raw) if nl < 0 else nl + 1
        elif c.isdigit():
            end = pos
            while end < len(raw) and raw[end : end + 1].isdigit():
                end += 1
            ints.append(int(raw[pos:end]))
            pos = end
        else:
            raise ParseError(f"{path}: unexpected byte {c!r} in header")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(raw) or not raw[pos : pos + 1].isspace():
        raise ParseError(f"{path}: missing whitespace after maxval")
    return ints, pos + 1


def save_label_raster(labels: LabelRaster, path) -> None:
    """Write labels as binary PGM P5, maxval 65535, big-endian samples."""
    if labels.data.max(initial=0) > 65535:
        raise ValueError("label values exceed 65535, not representable in 16-bit PGM")
    header = f"P5\n{labels.width} {labels.height}\n65535\n".encode("ascii")
    body = labels.data.astype(">u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + body)


def load_label_raster(path) -> LabelRaster:
    """Read a binary PGM P5 file back into a LabelRaster."""
    with open(path, "rb") as fh:
        raw = fh.read()
    (width, height, maxval), offset = _read_pnm_tokens(raw, b"P5", path)
    if maxval <= 0 or maxval > 65535:
        raise ParseError(f"{path}: maxval {maxval} out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    body = raw[offset:]
    if len(body) != expected:
        raise SizeError(f"{path}: expected {expected} raster bytes, got {len(body)}")
    data = np.frombuffer(body, dtype=dtype).reshape(height, width).astype(np.int32)
    return LabelRaster(width, height, data)


def save_mask_pgm(mask: np.ndarray, path) -> None:
    """Write a boolean 2D array as an 8-bit PGM (False=0, True=255)."""
    mask = np.asarray(mask, dtype=bool)
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + (mask.astype("u1") * np.uint8(255)).tobytes())


def save_ppm(rgb: np.ndarray, path) -> None:
    """Write an (H, W, 3) uint8 array as binary PPM P6."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("PPM output requires an (H, W, 3) uint8 array")
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + rgb.tobytes())


def load_ppm(path) -> np.ndarray:
    """Read a binary PPM P6 file into an (H, W, 3) uint8 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    (width, height, maxval), offset = _read_pnm_tokens(raw, b"P6", path)
    if maxval != 255:
        raise ParseError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    expected = width * height * 3
    body = raw[offset:]
    if len(body) != expected:
        raise SizeError(f"{path}: expected {expected} raster bytes, got {len(body)}")
    return np.frombuffer(body, dtype="u1").reshape(height, width, 3).copy()
