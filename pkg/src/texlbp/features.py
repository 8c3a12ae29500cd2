"""Multi-neighborhood feature vectors and the on-disk feature store.

A feature vector is the concatenation of per-neighborhood LBP histograms,
each L1-normalized on its own so every scale carries the same mass.

Store file layout (UTF-8 text)::

    texlbp-features v1
    configs=8:1:riu2;24:3:riu2
    columns=label,source,v0..v35
    <label>,<source>,<v0>,...,<v35>
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .image_io import GrayImage, LabeledImage
from .lbp import Histogram, LbpConfig, lbp_histogram


STORE_MAGIC = "texlbp-features"
STORE_VERSION = "v1"


class StoreFormatError(ValueError):
    pass


class StoreVersionError(StoreFormatError):
    pass


def normalize_l1(h: Histogram) -> Histogram:
    total = float(np.sum(h.bins))
    if total <= 0:
        raise ValueError("cannot normalize an all-zero histogram")
    return Histogram(np.asarray(h.bins, dtype=np.float64) / total, h.config, normalized=True)


@dataclass(frozen=True)
class Segment:
    config: LbpConfig
    offset: int
    length: int


def make_layout(configs: Sequence[LbpConfig]) -> tuple[Segment, ...]:
    layout, offset = [], 0
    for cfg in configs:
        layout.append(Segment(cfg, offset, cfg.bin_count))
        offset += cfg.bin_count
    return tuple(layout)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: tuple[Segment, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        expected = sum(s.length for s in self.layout)
        if values.ndim != 1 or len(values) != expected:
            raise ValueError(f"{values.shape} values do not fit a {expected}-long layout")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", tuple(self.layout))

    @property
    def configs(self) -> tuple[LbpConfig, ...]:
        return tuple(s.config for s in self.layout)

    def segment(self, i: int) -> np.ndarray:
        s = self.layout[i]
        return self.values[s.offset:s.offset + s.length]

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.values, other.values)


def extract_multi(img: GrayImage, configs: Sequence[LbpConfig]) -> FeatureVector:
    """Concatenate the normalized histograms of ``img`` for each config, in order."""
    if not configs:
        raise ValueError("at least one LBP configuration is required")
    parts = [normalize_l1(lbp_histogram(img, cfg)).bins for cfg in configs]
    return FeatureVector(np.concatenate(parts), make_layout(configs))


@dataclass(frozen=True)
class Sample:
    label: str
    source: str
    vector: FeatureVector


@dataclass(frozen=True)
class FeatureStore:
    """Labeled feature vectors plus the configs that produced them."""

    configs: tuple[LbpConfig, ...]
    samples: tuple[Sample, ...]
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        object.__setattr__(self, "samples", tuple(self.samples))
        layout = make_layout(self.configs)
        for i, s in enumerate(self.samples):
            if s.vector.layout != layout:
                raise ValueError(f"sample {i} ({s.source}) has a layout that does not match the store configs")
        dim = sum(seg.length for seg in layout)
        matrix = np.array([s.vector.values for s in self.samples], dtype=np.float64).reshape(-1, dim)
        matrix.flags.writeable = False
        object.__setattr__(self, "_matrix", matrix)

    @property
    def layout(self) -> tuple[Segment, ...]:
        return make_layout(self.configs)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """``(n_samples, dim)`` read-only view of all vectors."""
        return self._matrix

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.samples]

    @property
    def class_names(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, indices: Iterable[int]) -> FeatureStore:
        return FeatureStore(self.configs, tuple(self.samples[i] for i in indices))

    def __len__(self):
        return len(self.samples)


def _extract_one(args):
    item, configs = args
    return Sample(item.label, item.source, extract_multi(item.image, configs))


def build_store(images: Sequence[LabeledImage], configs: Sequence[LbpConfig],
                threads: int = 1) -> FeatureStore:
    """Extract features for every image, one task per image; input order is kept."""
    configs = tuple(configs)
    if not configs:
        raise ValueError("at least one LBP configuration is required")
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    jobs = [(item, configs) for item in images]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_extract_one, jobs))
    else:
        samples = [_extract_one(j) for j in jobs]
    return FeatureStore(configs, tuple(samples))


def format_configs(configs: Sequence[LbpConfig]) -> str:
    return ";".join(str(c) for c in configs)


def parse_configs(text: str) -> tuple[LbpConfig, ...]:
    if not text.strip():
        raise ValueError("empty config list")
    return tuple(LbpConfig.parse(part) for part in text.split(";"))


def dumps_store(store: FeatureStore) -> str:
    if not store.samples:
        raise ValueError("refusing to write an empty feature store")
    buf = io.StringIO()
    buf.write(f"{STORE_MAGIC} {STORE_VERSION}\n")
    buf.write(f"configs={format_configs(store.configs)}\n")
    buf.write(f"columns=label,source,v0..v{store.dim - 1}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for s in store.samples:
        # repr() round-trips float64 exactly
        writer.writerow([s.label, s.source, *(repr(float(v)) for v in s.vector.values)])
    return buf.getvalue()


def write_store(store: FeatureStore, path) -> None:
    Path(path).write_text(dumps_store(store), encoding="utf-8")


def loads_store(text: str) -> FeatureStore:
    lines = text.splitlines()
    if len(lines) < 3:
        raise StoreFormatError("feature store header is incomplete")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != STORE_MAGIC:
        raise StoreFormatError(f"line 1: not a feature store header: {lines[0]!r}")
    if magic[1] != STORE_VERSION:
        raise StoreVersionError(
            f"line 1: unsupported store version {magic[1]!r} (expected {STORE_VERSION})")

    if not lines[1].startswith("configs="):
        raise StoreFormatError("line 2: expected 'configs=...'")
    try:
        configs = parse_configs(lines[1][len("configs="):])
    except ValueError as exc:
        raise StoreFormatError(f"line 2: {exc}") from None
    layout = make_layout(configs)
    dim = sum(s.length for s in layout)

    expected_columns = f"columns=label,source,v0..v{dim - 1}"
    if lines[2] != expected_columns:
        raise StoreFormatError(
            f"line 3: column header {lines[2]!r} inconsistent with configs "
            f"(expected {expected_columns!r})")

    samples = []
    reader = csv.reader(lines[3:])
    for lineno, row in enumerate(reader, start=4):
        if not row:
            continue
        if len(row) != dim + 2:
            raise StoreFormatError(
                f"line {lineno}: malformed row, expected {dim} values, found {max(len(row) - 2, 0)}")
        label, source = row[0], row[1]
        if not label:
            raise StoreFormatError(f"line {lineno}: empty label")
        try:
            values = np.array([float(v) for v in row[2:]], dtype=np.float64)
        except ValueError as exc:
            raise StoreFormatError(f"line {lineno}: malformed row: {exc}") from None
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise StoreFormatError(f"line {lineno}: malformed row: values must be finite and non-negative")
        samples.append(Sample(label, source, FeatureVector(values, layout)))
    if not samples:
        raise StoreFormatError("feature store contains no samples")
    return FeatureStore(configs, tuple(samples))


def read_store(path) -> FeatureStore:
    return loads_store(Path(path).read_text(encoding="utf-8"))
