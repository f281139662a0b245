"""Grayscale morphology for seed detection.

Primitives (erosion, dilation, opening, closing) use flat structuring
elements and edge replication at the borders, so no artificial minima
appear along the image frame. On top of them sit the alternating
sequential filter, the multiscale morphological gradient, and regional
minima extraction over a quantized gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import Band, MultiBandRaster


@dataclass(frozen=True)
class StructuringElement:
    """Flat structuring element; radius 0 is the identity element."""

    shape: str
    radius: int
    offsets: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if self.shape not in ("square", "diamond"):
            raise ValueError(f"unknown structuring element shape {self.shape!r}")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        r = self.radius
        offs = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if self.shape == "square" or abs(dx) + abs(dy) <= r:
                    offs.append((dy, dx))
        object.__setattr__(self, "offsets", tuple(offs))

    def footprint(self) -> np.ndarray:
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dy, dx in self.offsets:
            fp[dy + r, dx + r] = True
        return fp


def square(radius: int) -> StructuringElement:
    return StructuringElement("square", radius)


def diamond(radius: int) -> StructuringElement:
    return StructuringElement("diamond", radius)


@dataclass
class BinaryMask:
    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=bool)
        if self.data.shape != (self.height, self.width):
            raise ValueError("mask shape disagrees with declared dimensions")


def _erode(data: np.ndarray, se: StructuringElement) -> np.ndarray:
    if se.radius == 0:
        return data.copy()
    return ndimage.grey_erosion(data, footprint=se.footprint(), mode="nearest")


def _dilate(data: np.ndarray, se: StructuringElement) -> np.ndarray:
    if se.radius == 0:
        return data.copy()
    return ndimage.grey_dilation(data, footprint=se.footprint(), mode="nearest")


def erode(b: Band, se: StructuringElement) -> Band:
    """Per-pixel minimum over the element's window, borders replicated."""
    return Band(b.width, b.height, _erode(b.data, se))


def dilate(b: Band, se: StructuringElement) -> Band:
    """Per-pixel maximum over the element's window, borders replicated."""
    return Band(b.width, b.height, _dilate(b.data, se))


def opening(b: Band, se: StructuringElement) -> Band:
    return Band(b.width, b.height, _dilate(_erode(b.data, se), se))


def closing(b: Band, se: StructuringElement) -> Band:
    return Band(b.width, b.height, _erode(_dilate(b.data, se), se))


def asf(b: Band, max_radius: int) -> Band:
    """Alternating sequential filter: opening then closing at radii 1..max_radius.

    Opening first suppresses bright speckle before closing fills dark
    pits, smoothing region interiors while keeping frontiers in place.
    """
    if max_radius < 1:
        raise ValueError("max_radius must be >= 1")
    data = b.data
    for r in range(1, max_radius + 1):
        se = square(r)
        data = _dilate(_erode(data, se), se)  # opening
        data = _erode(_dilate(data, se), se)  # closing
    return Band(b.width, b.height, data)


def multiscale_gradient(r: MultiBandRaster, n_scales: int) -> Band:
    """Multiscale morphological gradient, combined across bands by maximum.

    Per band f, with B_i the square element of radius i (B_0 identity):

        MG(f) = (1/n) * sum_{i=1..n} erode(dilate(f, B_i) - erode(f, B_i), B_{i-1})

    Eroding each scale's gradient by the next-smaller element thins the
    edge response back toward the true frontier. Scales are accumulated
    in ascending order so the floating-point sum is reproducible.
    """
    if n_scales < 1:
        raise ValueError("n_scales must be >= 1")
    combined: np.ndarray | None = None
    for b in range(r.bands):
        f = r.data[b]
        acc = np.zeros_like(f)
        for i in range(1, n_scales + 1):
            se_i = square(i)
            grad = _dilate(f, se_i) - _erode(f, se_i)
            acc += _erode(grad, square(i - 1))
        acc /= n_scales
        combined = acc if combined is None else np.maximum(combined, acc)
    return Band(r.width, r.height, combined)


def quantize(data: np.ndarray, levels: int) -> np.ndarray:
    """Equal-width quantization of a band into `levels` bins over [min, max]."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    lo = data.min()
    hi = data.max()
    if hi == lo:
        return np.zeros(data.shape, dtype=np.int64)
    q = np.floor((data - lo) / (hi - lo) * levels).astype(np.int64)
    return np.minimum(q, levels - 1)


def regional_minima(b: Band, levels: int) -> BinaryMask:
    """Mark connected plateaus of the quantized band that are regional minima.

    The band is quantized to `levels` equal-width bins; a plateau is a
    maximal 8-connected set of constant quantized value, and it is a
    regional minimum iff its entire external boundary is strictly
    higher. A constant band is a single global plateau: every pixel is
    marked.
    """
    q = quantize(b.data, levels)
    if q.max() == q.min():
        return BinaryMask(b.width, b.height, np.ones(q.shape, dtype=bool))
    # a plateau fails iff some member sees a strictly lower 8-neighbor
    ring = np.ones((3, 3), dtype=bool)
    ring[1, 1] = False
    neighbor_min = ndimage.grey_erosion(q, footprint=ring, mode="nearest")
    has_lower = neighbor_min < q
    eight = np.ones((3, 3), dtype=bool)
    mark = np.zeros(q.shape, dtype=bool)
    for value in np.unique(q):
        level_mask = q == value
        comp, n = ndimage.label(level_mask, structure=eight)
        if n == 0:
            continue
        bad_ids = np.unique(comp[level_mask & has_lower])
        mark |= level_mask & ~np.isin(comp, bad_ids[bad_ids > 0])
    return BinaryMask(b.width, b.height, mark)
