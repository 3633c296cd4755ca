"""Bars-and-Stripes dataset and the pixel-clamping helpers used for
reconstruction scoring.

Pixels are row-major with black = 1, white = 0 (the dataset is symmetric
under polarity, so the choice is a pure convention). A "bar" image has all
columns identical (each row is monochromatic), a "stripe" image has all
rows identical (each column is monochromatic). The two all-uniform images
would appear in both families and are kept only once, on the bar side,
giving 2**(m+1) - 2 distinct images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class BasDataset:
    """All m x m Bars-and-Stripes images, one per row, length m*m each."""

    m: int
    images: np.ndarray

    @property
    def n_images(self) -> int:
        return self.images.shape[0]


def _pattern_bits(value: int, m: int) -> np.ndarray:
    """Most-significant bit first, so patterns sort by integer value."""
    return np.array([(value >> (m - 1 - k)) & 1 for k in range(m)], dtype=np.uint8)


def generate_bas(m: int) -> BasDataset:
    """Deterministic canonical enumeration of the BAS dataset.

    Order: bar images for pattern values 0..2**m-1, then stripe images for
    the non-uniform pattern values in the same order. No RNG is involved,
    so the output is bit-identical across runs.
    """
    if m < 2:
        raise ContractViolation("side length m must be >= 2")
    images = []
    for val in range(1 << m):
        p = _pattern_bits(val, m)
        images.append(np.repeat(p[:, None], m, axis=1).reshape(-1))  # bars
    for val in range(1, (1 << m) - 1):
        p = _pattern_bits(val, m)
        images.append(np.tile(p, (m, 1)).reshape(-1))  # stripes
    return BasDataset(m=m, images=np.array(images, dtype=np.uint8))


def clamp_mask(m: int, region="outer-border") -> np.ndarray:
    """Visible-unit indices to pin during reconstruction.

    'outer-border' selects every pixel on the image boundary; for m = 4
    that is the 12 non-central pixels, leaving the 4 central ones free.
    A custom region is any iterable of row-major pixel indices.
    """
    if isinstance(region, str):
        if region != "outer-border":
            raise ContractViolation(f"unknown clamp region {region!r}")
        idx = [r * m + c for r in range(m) for c in range(m)
               if r in (0, m - 1) or c in (0, m - 1)]
        return np.array(idx, dtype=np.intp)
    idx = np.array(sorted(set(int(i) for i in region)), dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= m * m):
        raise ContractViolation("clamp index out of range")
    return idx


def save_bas(ds: BasDataset, path) -> None:
    """One image per line as m*m characters '0'/'1'."""
    with open(path, "w") as fh:
        for img in ds.images:
            fh.write("".join("1" if b else "0" for b in img) + "\n")


def load_bas(path) -> BasDataset:
    with open(path) as fh:
        rows = [line.strip() for line in fh if line.strip()]
    imgs = np.array([[int(c) for c in row] for row in rows], dtype=np.uint8)
    m = int(round(np.sqrt(imgs.shape[1])))
    if m * m != imgs.shape[1]:
        raise ContractViolation("image length is not a square")
    return BasDataset(m=m, images=imgs)
