"""Seed region extraction and spectral description.

Regional-minima pixels are grouped into 8-connected components, small
components are pruned, and each surviving region gets a descriptor:
the per-band mode of its raw values (256-bin histogram over the band's
global range, ties to the lowest bin) followed by its mean NDVI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import EmptyInputError, EmptySeedsError, ParseError
from .morphology import BinaryMask
from .raster import Band, MultiBandRaster, band_ranges

MODE_BINS = 256


@dataclass
class SeedRegion:
    """One connected seed region; pixels are (x, y) in raster-scan order."""

    id: int
    pixels: np.ndarray = field(repr=False)
    descriptor: np.ndarray | None = None
    cluster_label: int | None = None

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.int32)
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 2 or len(self.pixels) == 0:
            raise ValueError("region pixels must be a non-empty (N, 2) array")
        if self.descriptor is not None:
            self.descriptor = np.asarray(self.descriptor, dtype=np.float64)
            if not np.isfinite(self.descriptor).all():
                raise ValueError("descriptor contains non-finite values")

    @property
    def size(self) -> int:
        return len(self.pixels)


@dataclass
class SeedSet:
    regions: list[SeedRegion]
    width: int
    height: int

    def __post_init__(self):
        seen = np.zeros((self.height, self.width), dtype=bool)
        for i, region in enumerate(self.regions, start=1):
            if region.id != i:
                raise ValueError(f"region ids must be dense 1..n, got {region.id} at slot {i}")
            xs = region.pixels[:, 0]
            ys = region.pixels[:, 1]
            if (xs < 0).any() or (xs >= self.width).any() or (ys < 0).any() or (ys >= self.height).any():
                raise ValueError(f"region {region.id} has out-of-bounds pixels")
            if seen[ys, xs].any():
                raise ValueError(f"region {region.id} overlaps another region")
            seen[ys, xs] = True


def connected_components(m: BinaryMask) -> SeedSet:
    """8-connected components of true pixels.

    Ids are assigned densely from 1 in raster-scan order of each
    component's first pixel, so the numbering is independent of the
    labeling backend.
    """
    eight = np.ones((3, 3), dtype=bool)
    comp, n = ndimage.label(m.data, structure=eight)
    if n == 0:
        return SeedSet([], m.width, m.height)
    flat = comp.ravel()
    positions = np.flatnonzero(flat)
    comp_ids = flat[positions]
    order = np.argsort(comp_ids, kind="stable")  # stable: raster order kept per id
    ids_sorted = comp_ids[order]
    pos_sorted = positions[order]
    starts = np.searchsorted(ids_sorted, np.arange(1, n + 1))
    ends = np.append(starts[1:], len(pos_sorted))
    first_position = pos_sorted[starts]
    regions: list[SeedRegion] = []
    for new_id, old in enumerate(np.argsort(first_position, kind="stable"), start=1):
        pos = pos_sorted[starts[old] : ends[old]]
        ys, xs = np.divmod(pos, m.width)
        regions.append(SeedRegion(new_id, np.column_stack([xs, ys])))
    return SeedSet(regions, m.width, m.height)


def prune_small(s: SeedSet, min_seed_size: int) -> SeedSet:
    """Drop regions smaller than min_seed_size; re-densify ids in order."""
    if min_seed_size < 1:
        raise ValueError("min_seed_size must be >= 1")
    kept = [r for r in s.regions if r.size >= min_seed_size]
    if not kept:
        raise EmptySeedsError(
            f"prune: all {len(s.regions)} seed regions are below {min_seed_size} pixels"
        )
    regions = [replace(r, id=i) for i, r in enumerate(kept, start=1)]
    return SeedSet(regions, s.width, s.height)


def ndvi(r: MultiBandRaster, red_band: int, nir_band: int) -> Band:
    """Per-pixel (NIR - Red) / (NIR + Red) on raw values; 0 where the sum is 0."""
    if not (0 <= red_band < r.bands and 0 <= nir_band < r.bands):
        raise ValueError("NDVI band indices out of range")
    if red_band == nir_band:
        raise ValueError("red and NIR band indices must differ")
    nir = r.data[nir_band]
    red = r.data[red_band]
    total = nir + red
    out = np.zeros_like(total)
    np.divide(nir - red, total, out=out, where=total != 0)
    return Band(r.width, r.height, out)


def seed_descriptor(r: MultiBandRaster, region: SeedRegion, ndvi_band: Band) -> np.ndarray:
    """Per-band mode over the region's raw values, then mean NDVI.

    The mode is the center of the most populated of 256 equal-width
    bins spanning the band's global range; ties go to the lowest bin.
    NDVI values are sorted before averaging so the result does not
    depend on pixel-list ordering.
    """
    xs = region.pixels[:, 0]
    ys = region.pixels[:, 1]
    mins, maxs = band_ranges(r)
    desc = np.empty(r.bands + 1, dtype=np.float64)
    for b in range(r.bands):
        lo, hi = mins[b], maxs[b]
        values = r.data[b, ys, xs]
        if hi == lo:
            desc[b] = lo
            continue
        bins = np.floor((values - lo) / (hi - lo) * MODE_BINS).astype(np.int64)
        bins = np.minimum(bins, MODE_BINS - 1)
        counts = np.bincount(bins, minlength=MODE_BINS)
        best = int(np.argmax(counts))  # argmax picks the lowest index on ties
        desc[b] = lo + (best + 0.5) * (hi - lo) / MODE_BINS
    ndvi_values = np.sort(ndvi_band.data[ys, xs])
    desc[r.bands] = float(ndvi_values.mean())
    return desc


def compute_descriptors(r: MultiBandRaster, s: SeedSet, red_band: int, nir_band: int) -> SeedSet:
    """Attach a descriptor to every region, from raw band values and NDVI."""
    nd = ndvi(r, red_band, nir_band)
    regions = [replace(reg, descriptor=seed_descriptor(r, reg, nd)) for reg in s.regions]
    return SeedSet(regions, s.width, s.height)


def scale_descriptors(s: SeedSet, r: MultiBandRaster) -> np.ndarray:
    """Descriptors rescaled to [0, 1] per component for clustering.

    Spectral components use each band's global min-max transform (the
    same mapping band normalization applies, constant bands to 0); the
    NDVI component maps [-1, 1] to [0, 1] and is clipped to the range.
    """
    if not s.regions:
        raise EmptyInputError("seed set has no regions to scale")
    if any(reg.descriptor is None for reg in s.regions):
        raise ValueError("descriptors must be computed before scaling")
    mins, maxs = band_ranges(r)
    raw = np.stack([reg.descriptor for reg in s.regions])
    scaled = np.zeros_like(raw)
    for b in range(r.bands):
        span = maxs[b] - mins[b]
        if span > 0:
            scaled[:, b] = (raw[:, b] - mins[b]) / span
    scaled[:, r.bands] = np.clip((raw[:, r.bands] + 1.0) / 2.0, 0.0, 1.0)
    return np.clip(scaled, 0.0, 1.0)


def save_seed_set(s: SeedSet, path) -> None:
    """Serialize to JSON: {regions: [{id, pixels, descriptor, label}]}."""
    payload = {
        "width": s.width,
        "height": s.height,
        "regions": [
            {
                "id": reg.id,
                "pixels": reg.pixels.tolist(),
                "descriptor": None if reg.descriptor is None else reg.descriptor.tolist(),
                "label": reg.cluster_label,
            }
            for reg in s.regions
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_seed_set(path) -> SeedSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid seed JSON: {exc}") from exc
    try:
        regions = [
            SeedRegion(
                id=entry["id"],
                pixels=np.asarray(entry["pixels"], dtype=np.int32),
                descriptor=None if entry["descriptor"] is None else np.asarray(entry["descriptor"]),
                cluster_label=entry["label"],
            )
            for entry in payload["regions"]
        ]
        return SeedSet(regions, payload["width"], payload["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed seed JSON: {exc}") from exc
