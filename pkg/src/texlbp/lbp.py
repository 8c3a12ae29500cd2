"""Circular-neighborhood local binary patterns.

Neighbor ``k`` of ``P`` sits at angle ``2*pi*k/P`` counterclockwise from
east, i.e. at ``(cx + R*cos(theta), cy - R*sin(theta))`` with rows growing
downward. Off-grid samples are bilinearly interpolated; a neighbor whose
value is >= the center sets bit ``k`` (weight ``2**k``).

Two histogram mappings are supported:

``u2``
    every uniform code (at most two circular 0/1 transitions) gets its own
    bin, in ascending raw-code order, plus one shared non-uniform bin.
``riu2``
    uniform codes are binned by their number of set bits (0..P), plus one
    non-uniform bin, giving ``P + 2`` bins.

Only centers whose whole circle lies inside the image are coded; the
margin is ``ceil(R)`` on every side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .image_io import GrayImage

VARIANTS = ("u2", "riu2")
MAX_POINTS = 32
SNAP_TOL = 1e-6
# Interpolated samples that equal the center in exact arithmetic land within
# ~1e-13 of it in floats; genuine differences are orders of magnitude larger.
TIE_TOL = 1e-9

#: (points, radius) pairs of the standard multi-scale neighborhoods
STANDARD_PAIRS = ((8, 1), (16, 2), (24, 3), (32, 4), (32, 5))


class ImageTooSmallError(ValueError):
    pass


class OutOfBoundsError(ValueError):
    pass


def _format_radius(radius: float) -> str:
    return str(int(radius)) if float(radius).is_integer() else repr(float(radius))


@dataclass(frozen=True)
class LbpConfig:
    """One (points, radius, variant) neighborhood."""

    points: int
    radius: float
    variant: str = "riu2"

    def __post_init__(self):
        if isinstance(self.points, bool) or int(self.points) != self.points:
            raise ValueError(f"points must be an integer, got {self.points!r}")
        if not 4 <= self.points <= MAX_POINTS:
            raise ValueError(f"points must be in [4, {MAX_POINTS}], got {self.points}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def margin(self) -> int:
        return math.ceil(self.radius)

    @property
    def bin_count(self) -> int:
        if self.variant == "riu2":
            return self.points + 2
        return build_u2_table(self.points).bin_count

    def __str__(self):
        return f"{self.points}:{_format_radius(self.radius)}:{self.variant}"

    @classmethod
    def parse(cls, text: str, variant: str | None = None) -> LbpConfig:
        """Parse ``P:R`` or ``P:R:variant``.

        ``variant`` is used when the text carries none; an explicit variant in
        the text must agree with it.
        """
        parts = text.strip().split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"expected P:R or P:R:variant, got {text!r}")
        try:
            points = int(parts[0])
            radius = float(parts[1])
        except ValueError:
            raise ValueError(f"bad neighborhood {text!r}") from None
        if len(parts) == 3:
            if variant is not None and parts[2] != variant:
                raise ValueError(f"variant mismatch in {text!r}: expected {variant}")
            variant = parts[2]
        return cls(points, radius, variant or "riu2")


def standard_configs(variant: str = "riu2") -> list[LbpConfig]:
    return [LbpConfig(p, r, variant) for p, r in STANDARD_PAIRS]


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < SNAP_TOL else v


@lru_cache(maxsize=None)
def neighbor_offsets(points: int, radius: float) -> tuple[tuple[float, float], ...]:
    """(dx, dy) offset of every neighbor, snapped to the grid per axis."""
    out = []
    for k in range(points):
        theta = 2.0 * math.pi * k / points
        out.append((_snap(radius * math.cos(theta)), _snap(-radius * math.sin(theta))))
    return tuple(out)


def _split(offset: float) -> tuple[int, float]:
    base = math.floor(offset)
    return base, offset - base


def sample_neighbor(img: GrayImage, cx: int, cy: int, k: int, cfg: LbpConfig) -> float:
    """Bilinearly interpolated intensity of neighbor ``k`` around ``(cx, cy)``."""
    if not 0 <= k < cfg.points:
        raise ValueError(f"neighbor index {k} outside [0, {cfg.points})")
    dx, dy = neighbor_offsets(cfg.points, cfg.radius)[k]
    x, y = cx + dx, cy + dy
    if not (0 <= x <= img.width - 1 and 0 <= y <= img.height - 1):
        raise OutOfBoundsError(f"sample ({x:.4f}, {y:.4f}) outside {img.width}x{img.height} image")
    bx, fx = _split(dx)
    by, fy = _split(dy)
    x0, y0 = cx + bx, cy + by
    x1 = x0 + 1 if fx > 0 else x0
    y1 = y0 + 1 if fy > 0 else y0
    p = img.pixels
    a, b = float(p[y0, x0]), float(p[y0, x1])
    c, d = float(p[y1, x0]), float(p[y1, x1])
    top = a + fx * (b - a)
    bottom = c + fx * (d - c)
    return top + fy * (bottom - top)


def lbp_code(img: GrayImage, cx: int, cy: int, cfg: LbpConfig) -> int:
    center = float(img.pixels[cy, cx])
    code = 0
    for k in range(cfg.points):
        if sample_neighbor(img, cx, cy, k, cfg) >= center - TIE_TOL:
            code |= 1 << k
    return code


def transitions(code: int, points: int) -> int:
    """Number of bit changes around the circular sequence b0..b(P-1), b0."""
    if not 0 <= code < (1 << points):
        raise ValueError(f"code {code} out of range for P={points}")
    count = 0
    for i in range(points):
        if ((code >> i) & 1) != ((code >> ((i + 1) % points)) & 1):
            count += 1
    return count


def map_riu2(code: int, points: int) -> int:
    if transitions(code, points) <= 2:
        return code.bit_count()
    return points + 1


@dataclass(frozen=True, eq=False)
class U2Table:
    """Raw code -> u2 bin lookup, backed by the sorted list of uniform codes.

    A dense 2**P table is impractical for P=32, so lookups bisect the
    ``P*(P-1) + 2`` uniform codes instead.
    """

    points: int
    uniform_codes: np.ndarray

    @property
    def bin_count(self) -> int:
        return len(self.uniform_codes) + 1

    def lookup(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.uint64)
        idx = np.searchsorted(self.uniform_codes, codes)
        hit = idx < len(self.uniform_codes)
        hit[hit] = self.uniform_codes[idx[hit]] == codes[hit]
        return np.where(hit, idx, len(self.uniform_codes))

    def __getitem__(self, code: int) -> int:
        if not 0 <= code < (1 << self.points):
            raise IndexError(f"code {code} out of range for P={self.points}")
        return int(self.lookup([code])[0])

    def __len__(self):
        return 1 << self.points


@lru_cache(maxsize=None)
def build_u2_table(points: int) -> U2Table:
    if not 4 <= points <= MAX_POINTS:
        raise ValueError(f"points must be in [4, {MAX_POINTS}], got {points}")
    full = (1 << points) - 1
    codes = {0, full}
    for run in range(1, points):
        ones = (1 << run) - 1
        for shift in range(points):
            codes.add(((ones << shift) | (ones >> (points - shift))) & full)
    table = np.array(sorted(codes), dtype=np.uint64)
    table.flags.writeable = False
    return U2Table(points, table)


def _check_size(img: GrayImage, cfg: LbpConfig) -> None:
    m = cfg.margin
    if img.width <= 2 * m or img.height <= 2 * m:
        raise ImageTooSmallError(
            f"{img.width}x{img.height} image has no interior pixels for radius {cfg.radius}")


def raw_codes(img: GrayImage, cfg: LbpConfig) -> np.ndarray:
    """Raw LBP codes of every interior pixel, shape ``(h - 2m, w - 2m)``."""
    _check_size(img, cfg)
    p = img.pixels.astype(np.float64)
    h, w = p.shape
    m = cfg.margin
    ih, iw = h - 2 * m, w - 2 * m

    def plane(oy, ox):
        return p[m + oy:m + oy + ih, m + ox:m + ox + iw]

    center = plane(0, 0)
    codes = np.zeros((ih, iw), dtype=np.uint64)
    for k, (dx, dy) in enumerate(neighbor_offsets(cfg.points, cfg.radius)):
        bx, fx = _split(dx)
        by, fy = _split(dy)
        bx1 = bx + 1 if fx > 0 else bx
        by1 = by + 1 if fy > 0 else by
        a, b = plane(by, bx), plane(by, bx1)
        c, d = plane(by1, bx), plane(by1, bx1)
        # same operation order as sample_neighbor, so results match bit for bit
        top = a + fx * (b - a)
        bottom = c + fx * (d - c)
        value = top + fy * (bottom - top)
        codes |= (value >= center - TIE_TOL).astype(np.uint64) << np.uint64(k)
    return codes


def map_codes(codes: np.ndarray, cfg: LbpConfig) -> np.ndarray:
    """Map raw codes to histogram bin indices for ``cfg.variant``."""
    codes = np.asarray(codes, dtype=np.uint64)
    if cfg.variant == "u2":
        return build_u2_table(cfg.points).lookup(codes)
    P = cfg.points
    rotated = (codes >> np.uint64(1)) | ((codes & np.uint64(1)) << np.uint64(P - 1))
    changes = np.bitwise_count(codes ^ rotated)
    ones = np.bitwise_count(codes).astype(np.int64)
    return np.where(changes <= 2, ones, P + 1)


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray
    config: LbpConfig
    normalized: bool = False

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (self.config == other.config and self.normalized == other.normalized
                and np.array_equal(self.bins, other.bins))

    def __len__(self):
        return len(self.bins)


@dataclass(frozen=True, eq=False)
class LbpMap:
    """Per-interior-pixel bin indices."""

    codes: np.ndarray
    config: LbpConfig

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    def to_image(self) -> GrayImage:
        """Linearly rescale bin indices ``0..bin_count-1`` onto ``0..255``."""
        top = self.config.bin_count - 1
        scaled = np.floor(self.codes.astype(np.float64) * 255.0 / top + 0.5)
        return GrayImage(scaled.astype(np.uint8))


def lbp_map(img: GrayImage, cfg: LbpConfig) -> LbpMap:
    return LbpMap(map_codes(raw_codes(img, cfg), cfg), cfg)


def lbp_histogram(img: GrayImage, cfg: LbpConfig) -> Histogram:
    """Raw-count histogram of mapped codes over the image interior."""
    bins = np.bincount(lbp_map(img, cfg).codes.ravel(), minlength=cfg.bin_count)
    return Histogram(bins.astype(np.int64), cfg)
