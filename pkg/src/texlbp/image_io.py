"""Image loading, grayscale conversion and class-per-directory datasets.

Netpbm graymaps (P2/P5) and pixmaps (P3/P6) with maxval 255 are decoded
natively. Anything else is handed to Pillow when it is installed, which is
how the UC Merced ``.tif`` files get in.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_WHITESPACE = b" \t\n\r\v\f"


class ImageFormatError(ValueError):
    """Raised when a file cannot be decoded as a supported image."""


class DatasetError(ValueError):
    """Raised when a dataset directory tree is unusable."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image stored as a read-only ``(height, width)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D pixel grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("intensities must be integers")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> GrayImage:
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"{values.size} pixels given for a {width}x{height} image")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"GrayImage(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class LabeledImage:
    image: GrayImage
    label: str
    source: str


def _luma(r, g, b) -> np.ndarray:
    wr, wg, wb = LUMA_WEIGHTS
    y = wr * np.asarray(r, dtype=np.float64) + wg * np.asarray(g, dtype=np.float64) \
        + wb * np.asarray(b, dtype=np.float64)
    # inputs are non-negative, so floor(y + 0.5) rounds half away from zero
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def to_grayscale(r: int, g: int, b: int) -> int:
    """Rec. 601 luma of one RGB triple, rounded half away from zero."""
    for c in (r, g, b):
        if not 0 <= c <= 255:
            raise ValueError(f"channel value {c} outside [0, 255]")
    return int(_luma(r, g, b))


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Vectorised ``to_grayscale`` over an ``(..., 3)`` array."""
    rgb = np.asarray(rgb)
    return _luma(rgb[..., 0], rgb[..., 1], rgb[..., 2])


def _read_header(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` integer header fields after the magic number.

    Returns the fields and the offset just past the single whitespace byte
    that terminates the last field.
    """
    fields = []
    pos = 2
    n = len(data)
    while len(fields) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        token = data[start:pos]
        if not token:
            raise ImageFormatError("truncated header")
        if not token.isdigit():
            raise ImageFormatError(f"invalid header field {token!r}")
        fields.append(int(token))
    if pos >= n:
        # no raster at all; the caller reports it as truncated
        return fields, pos
    if data[pos] not in _WHITESPACE:
        raise ImageFormatError("header not terminated by whitespace")
    return fields, pos + 1


def decode_netpbm(data: bytes) -> GrayImage:
    """Decode P2/P3/P5/P6 bytes into a :class:`GrayImage`."""
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ImageFormatError(f"unrecognized magic number {magic!r}")
    (width, height, maxval), offset = _read_header(data, 3)
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (only 255 is accepted)")
    channels = 3 if magic in (b"P3", b"P6") else 1
    expected = width * height * channels

    if magic in (b"P5", b"P6"):
        raster = data[offset:offset + expected]
        if len(raster) < expected:
            raise ImageFormatError(
                f"truncated pixel data: expected {expected} bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = data[offset:]
        # comments may also appear between ASCII samples
        text = b"\n".join(line.split(b"#", 1)[0] for line in body.splitlines())
        tokens = text.split()
        if len(tokens) < expected:
            raise ImageFormatError(
                f"truncated pixel data: expected {expected} samples, found {len(tokens)}")
        try:
            values = np.array([int(t) for t in tokens[:expected]], dtype=np.int64)
        except ValueError as exc:
            raise ImageFormatError(f"non-integer sample: {exc}") from None
        if values.min() < 0 or values.max() > maxval:
            raise ImageFormatError("sample value exceeds maxval")

    if channels == 3:
        gray = rgb_to_gray(values.reshape(height, width, 3))
    else:
        gray = values.reshape(height, width)
    return GrayImage(gray)


def _decode_with_pillow(path: Path) -> GrayImage:
    try:
        from PIL import Image, UnidentifiedImageError
    except ImportError:  # pragma: no cover - Pillow is a declared dependency
        raise ImageFormatError(f"unrecognized magic number in {path}") from None
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return GrayImage(np.asarray(im))
            if im.mode not in ("RGB", "RGBA", "P", "LA", "1"):
                raise ImageFormatError(f"unsupported image mode {im.mode!r} in {path}")
            return GrayImage(rgb_to_gray(np.asarray(im.convert("RGB"))))
    except UnidentifiedImageError:
        raise ImageFormatError(f"unrecognized magic number in {path}") from None
    except OSError as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from None


def load_image(path) -> GrayImage:
    """Load an image file as 8-bit grayscale.

    Raises ``FileNotFoundError`` for missing files and
    :class:`ImageFormatError` for anything that cannot be decoded.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:1] == b"P":
        return decode_netpbm(data)
    return _decode_with_pillow(path)


def encode_pgm(image: GrayImage) -> bytes:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def write_pgm(image: GrayImage, path) -> None:
    Path(path).write_bytes(encode_pgm(image))


def _try_load(path: Path):
    try:
        return load_image(path)
    except (ImageFormatError, OSError) as exc:
        return exc


def load_dataset(root_dir, threads: int = 1) -> list[LabeledImage]:
    """Load every decodable image under ``root_dir/<class>/``.

    Samples come back sorted by label, then by filename. Undecodable files
    are skipped with a warning; a class directory with nothing decodable is
    an error.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    class_dirs = sorted(
        (p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")),
        key=lambda p: p.name,
    )
    if not class_dirs:
        raise DatasetError(f"dataset root {root} has no class subdirectories")

    files: list[tuple[str, Path]] = []
    for d in class_dirs:
        entries = sorted(
            (p for p in d.iterdir() if p.is_file() and not p.name.startswith(".")),
            key=lambda p: p.name,
        )
        files.extend((d.name, p) for p in entries)

    paths = [p for _, p in files]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            decoded = list(pool.map(_try_load, paths))
    else:
        decoded = [_try_load(p) for p in paths]

    samples = []
    per_class = {d.name: 0 for d in class_dirs}
    for (label, path), result in zip(files, decoded):
        if isinstance(result, Exception):
            log.warning("skipping %s: %s", path, result)
            continue
        samples.append(LabeledImage(result, label, str(path)))
        per_class[label] += 1

    empty = [name for name, count in per_class.items() if count == 0]
    if empty:
        raise DatasetError(f"no decodable images in class directories: {', '.join(empty)}")
    return samples
