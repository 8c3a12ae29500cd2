"""Seeded synthetic texture classes for smoke tests and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .image_io import GrayImage, LabeledImage, write_pgm

TEXTURES = ("checkerboard", "flat", "noise", "stripes")

LOW, HIGH = 64, 192


def _quantize(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


def make_texture(kind: str, size: int, rng: np.random.Generator) -> GrayImage:
    """One image of a texture class.

    ``flat`` is mid-gray plus Gaussian noise (sigma 2); ``stripes`` are
    vertical with period 4; ``checkerboard`` has 2x2 cells (period 4);
    ``noise`` is uniform over 0..255. Periodic classes get a random phase
    and the same sigma-2 noise.
    """
    y, x = np.mgrid[0:size, 0:size]
    if kind == "flat":
        img = 128.0 + rng.normal(0.0, 2.0, (size, size))
    elif kind == "stripes":
        phase = rng.integers(4)
        img = np.where((x + phase) % 4 < 2, LOW, HIGH) + rng.normal(0.0, 2.0, (size, size))
    elif kind == "checkerboard":
        px, py = rng.integers(4, size=2)
        cell = ((x + px) // 2 + (y + py) // 2) % 2
        img = np.where(cell == 0, LOW, HIGH) + rng.normal(0.0, 2.0, (size, size))
    elif kind == "noise":
        return GrayImage(rng.integers(0, 256, (size, size), dtype=np.uint8))
    else:
        raise ValueError(f"unknown texture {kind!r}")
    return GrayImage(_quantize(img))


def synthetic_dataset(per_class: int = 40, size: int = 64, seed: int = 0) -> list[LabeledImage]:
    rng = np.random.default_rng(seed)
    out = []
    for kind in TEXTURES:
        for i in range(per_class):
            out.append(LabeledImage(make_texture(kind, size, rng), kind, f"{kind}/{kind}_{i:03d}.pgm"))
    return out


def write_dataset(root, per_class: int = 40, size: int = 64, seed: int = 0) -> Path:
    """Write :func:`synthetic_dataset` as a class-per-directory PGM tree."""
    root = Path(root)
    for item in synthetic_dataset(per_class, size, seed):
        path = root / item.source
        path.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(item.image, path)
    return root
