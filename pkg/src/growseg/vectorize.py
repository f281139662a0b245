"""Label raster to boundary polygons, plus contour overlay rendering.

Each 4-connected region of equal label becomes one polygon: an outer
ring plus one ring per enclosed hole, traced along the pixel edges
that separate differing labels. Vertices are integer pixel-corner
coordinates (pixel (0,0) spans corners (0,0)-(1,1)). Outer rings carry
positive shoelace area (counter-clockwise), holes negative, rings are
closed (first vertex repeated last) and start at their lexicographically
smallest rotation, so output is fully deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParseError
from .raster import LabelRaster, MultiBandRaster, save_ppm

# directions are (dx, dy); left/right turns are in screen coordinates (y down)
_LEFT = {(1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1), (0, 1): (1, 0)}
_RIGHT = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
_DIR_ORDER = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}


@dataclass
class Polygon:
    segment_label: int
    ring: list[tuple[int, int]]
    holes: list[list[tuple[int, int]]]


@dataclass
class PolygonSet:
    polygons: list[Polygon]


def _label_regions(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Distinct region id per 4-connected component of equal label."""
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    regions = np.zeros(labels.shape, dtype=np.int64)
    next_id = 0
    for value in np.unique(labels):
        comp, n = ndimage.label(labels == value, structure=four)
        regions[comp > 0] = comp[comp > 0] + next_id
        next_id += n
    return regions, next_id


def signed_area(ring: list[tuple[int, int]]) -> float:
    """Shoelace area of a closed ring; positive means counter-clockwise."""
    total = 0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
        total += x0 * y1 - x1 * y0
    return total / 2.0


def _canonical_rotation(corners: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Rotate a cyclic corner list to its lexicographically smallest form."""
    n = len(corners)
    best = None
    for shift in range(n):
        if best is not None and corners[shift] > best[0]:
            continue
        candidate = corners[shift:] + corners[:shift]
        if best is None or candidate < best:
            best = candidate
    return best


def trace_contours(labels: LabelRaster) -> PolygonSet:
    """Trace every 4-connected equal-label region into closed rings.

    Boundary edges are walked with the region interior on the right of
    the travel direction. At a pinch vertex (the region touching itself
    diagonally across two exterior pixels) the walk turns left, which
    keeps every ring simple and treats the two exterior pixels as
    separate, matching 4-connected region semantics.
    """
    grid = labels.data
    height, width = grid.shape
    regions, n_regions = _label_regions(grid)
    if n_regions == 0:
        return PolygonSet([])

    # directed boundary edges; each is ((vertex), (dx, dy)) -> region id
    out_edges: dict[tuple[tuple[int, int], tuple[int, int]], int] = {}
    edges_by_region: list[list[tuple[tuple[int, int], tuple[int, int]]]] = [
        [] for _ in range(n_regions + 1)
    ]

    def emit(vx: int, vy: int, d: tuple[int, int], rid: int) -> None:
        edge = ((vx, vy), d)
        out_edges[edge] = rid
        edges_by_region[rid].append(edge)

    up_diff = np.ones(grid.shape, dtype=bool)
    up_diff[1:, :] = regions[1:, :] != regions[:-1, :]
    down_diff = np.ones(grid.shape, dtype=bool)
    down_diff[:-1, :] = regions[:-1, :] != regions[1:, :]
    left_diff = np.ones(grid.shape, dtype=bool)
    left_diff[:, 1:] = regions[:, 1:] != regions[:, :-1]
    right_diff = np.ones(grid.shape, dtype=bool)
    right_diff[:, :-1] = regions[:, :-1] != regions[:, 1:]

    for ys, xs, corner, d in (
        (*np.nonzero(up_diff), (0, 0), (1, 0)),      # top side, eastbound
        (*np.nonzero(right_diff), (1, 0), (0, 1)),   # right side, southbound
        (*np.nonzero(down_diff), (1, 1), (-1, 0)),   # bottom side, westbound
        (*np.nonzero(left_diff), (0, 1), (0, -1)),   # left side, northbound
    ):
        for y, x in zip(ys.tolist(), xs.tolist()):
            emit(x + corner[0], y + corner[1], d, int(regions[y, x]))

    def successor(edge, rid):
        (vx, vy), d = edge
        w = (vx + d[0], vy + d[1])
        for nd in (_LEFT[d], d, _RIGHT[d]):
            if out_edges.get((w, nd)) == rid:
                return (w, nd)
        raise AssertionError(f"boundary walk broke at vertex {w} for region {rid}")

    polygons: list[Polygon] = []
    for rid in range(1, n_regions + 1):
        region_edges = edges_by_region[rid]
        seg_label = int(grid[_first_pixel_of(regions, rid, region_edges)])
        unused = set(region_edges)
        rings: list[tuple[float, list[tuple[int, int]]]] = []
        for start in sorted(region_edges, key=lambda e: (e[0], _DIR_ORDER[e[1]])):
            if start not in unused:
                continue
            walk = [start]
            unused.discard(start)
            edge = successor(start, rid)
            while edge != start:
                walk.append(edge)
                unused.discard(edge)
                edge = successor(edge, rid)
            corners = [
                v for (v, d), (_, dprev) in zip(walk, [walk[-1]] + walk[:-1]) if d != dprev
            ]
            ring = _canonical_rotation(corners)
            ring.append(ring[0])
            rings.append((signed_area(ring), ring))
        outers = [ring for area, ring in rings if area > 0]
        holes = sorted((ring for area, ring in rings if area < 0), key=lambda r: r[0])
        if len(outers) != 1:
            raise AssertionError(f"region {rid} traced {len(outers)} outer rings")
        polygons.append(Polygon(seg_label, outers[0], holes))

    polygons.sort(key=lambda p: (p.segment_label, p.ring[0]))
    return PolygonSet(polygons)


def _first_pixel_of(regions: np.ndarray, rid: int, region_edges) -> tuple[int, int]:
    """(y, x) of one pixel of the region, recovered from its first edge."""
    # the eastbound edge at a region's top-left corner sits on that pixel's
    # top side, so the pixel is directly below the edge's start vertex
    for (vx, vy), d in region_edges:
        if d == (1, 0):
            return (vy, vx)
    raise AssertionError(f"region {rid} has no eastbound boundary edge")


def export_polygons(p: PolygonSet, path) -> None:
    """JSON export: {polygons: [{label, ring: [[x,y],...], holes: [...]}]}."""
    payload = {
        "polygons": [
            {
                "label": poly.segment_label,
                "ring": [[x, y] for x, y in poly.ring],
                "holes": [[[x, y] for x, y in hole] for hole in poly.holes],
            }
            for poly in p.polygons
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_polygons(path) -> PolygonSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid polygon JSON: {exc}") from exc
    try:
        polygons = [
            Polygon(
                segment_label=entry["label"],
                ring=[(int(x), int(y)) for x, y in entry["ring"]],
                holes=[[(int(x), int(y)) for x, y in hole] for hole in entry["holes"]],
            )
            for entry in payload["polygons"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed polygon JSON: {exc}") from exc
    return PolygonSet(polygons)


def boundary_mask(labels: LabelRaster) -> np.ndarray:
    """True where a pixel has a 4-neighbor with a different label."""
    grid = labels.data
    mask = np.zeros(grid.shape, dtype=bool)
    mask[1:, :] |= grid[1:, :] != grid[:-1, :]
    mask[:-1, :] |= grid[:-1, :] != grid[1:, :]
    mask[:, 1:] |= grid[:, 1:] != grid[:, :-1]
    mask[:, :-1] |= grid[:, :-1] != grid[:, 1:]
    return mask


def render_overlay(
    r: MultiBandRaster,
    labels: LabelRaster,
    band_triplet: tuple[int, int, int],
    path,
    color: tuple[int, int, int] = (255, 255, 0),
) -> None:
    """Write a PPM of three stretched bands with segment contours painted."""
    if len(band_triplet) != 3:
        raise ValueError("band_triplet must name exactly 3 bands")
    if (labels.width, labels.height) != (r.width, r.height):
        raise ValueError("label raster dimensions disagree with the image")
    rgb = np.zeros((r.height, r.width, 3), dtype=np.uint8)
    for channel, b in enumerate(band_triplet):
        if not 0 <= b < r.bands:
            raise ValueError(f"band index {b} out of range 0..{r.bands - 1}")
        band = r.data[b]
        lo, hi = band.min(), band.max()
        if hi > lo:
            stretched = np.rint((band - lo) / (hi - lo) * 255.0)
            rgb[:, :, channel] = np.clip(stretched, 0, 255).astype(np.uint8)
    rgb[boundary_mask(labels)] = np.asarray(color, dtype=np.uint8)
    save_ppm(rgb, path)
