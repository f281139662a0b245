"""Competitive label growth by cellular automaton.

Every pixel is a cell holding (label, strength, feature vector). Seed
cells start with strength 1 and a cluster label; all other cells start
unlabeled at strength 0. Each generation, every neighbor q attacks
cell p with force

    attack(q -> p) = g(||C_p - C_q||) * strength_q,
    g(x) = max(0, 1 - x / c_bar),

and p adopts the label and force of the strongest strictly-winning
attacker (force > strength_p). Evolution is fully synchronous: a
generation reads only the previous one, so results are independent of
traversal or thread order. Seeds can never be beaten because forces
never exceed 1 and wins require strict inequality.

Two engines share these semantics. The synchronous engine evaluates
every cell each generation. The active-set engine evaluates only cells
with a neighbor that changed in the previous generation - the only
cells whose inputs moved, hence bit-identical output with far fewer
cell visits once the growth front thins out.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptySeedsError
from .raster import Band, LabelRaster, MultiBandRaster
from .seeding import SeedSet

MOORE8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
VONNEUMANN4 = ((-1, 0), (0, -1), (0, 1), (1, 0))

_NEIGHBORHOODS = {
    "moore8": MOORE8,
    "vn4": VONNEUMANN4,
    "vonneumann4": VONNEUMANN4,
}


@dataclass(frozen=True)
class GrowCutParams:
    max_iterations: int
    neighborhood: str = "moore8"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.neighborhood not in _NEIGHBORHOODS:
            raise ValueError(f"unknown neighborhood {self.neighborhood!r}")

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        return _NEIGHBORHOODS[self.neighborhood]


@dataclass
class AutomatonState:
    """One generation of the automaton, plus immutable per-run context.

    labels use -1 for "no label"; strengths are in [0, 1]. The feature
    grid, offset list, c_bar and the per-offset g lookups never change
    during a run; labels, strengths and the changed mask are replaced
    each generation (double buffering).
    """

    width: int
    height: int
    labels: np.ndarray = field(repr=False)
    strengths: np.ndarray = field(repr=False)
    features: np.ndarray = field(repr=False)
    offsets: tuple[tuple[int, int], ...] = MOORE8
    c_bar: float = 1.0
    g_edges: tuple[np.ndarray, ...] = field(default=(), repr=False)
    changed_mask: np.ndarray | None = field(default=None, repr=False)
    iteration: int = 0
    changed_last_step: int = 0
    visited_last_step: int = 0


def g(x, c_bar: float):
    """Attack attenuation: 1 - x/c_bar, clamped below at 0.

    Monotone decreasing in x with values in [0, 1] for x in [0, c_bar];
    distances beyond c_bar (possible only in degenerate feature
    layouts) attack with zero force.
    """
    if c_bar <= 0:
        raise ValueError("c_bar must be positive")
    return np.maximum(1.0 - np.asarray(x, dtype=np.float64) / c_bar, 0.0)


def build_features(normalized: MultiBandRaster, ndvi_band: Band) -> np.ndarray:
    """Stack normalized band values with NDVI rescaled from [-1,1] to [0,1]."""
    scaled_ndvi = np.clip((ndvi_band.data + 1.0) / 2.0, 0.0, 1.0)
    return np.concatenate(
        [np.moveaxis(normalized.data, 0, 2), scaled_ndvi[:, :, None]], axis=2
    )


def _pq_slices(dy: int, dx: int, height: int, width: int):
    """Index slices so that p[py, px] and q[qy, qx] pair cell p with p+(dy,dx)."""
    py = slice(max(0, -dy), height - max(0, dy))
    px = slice(max(0, -dx), width - max(0, dx))
    qy = slice(max(0, dy), height - max(0, -dy))
    qx = slice(max(0, dx), width - max(0, -dx))
    return (py, px), (qy, qx)


def init_automaton(features: np.ndarray, seeds: SeedSet, params: GrowCutParams) -> AutomatonState:
    """Seed cells get (label, 1.0); all others (none, 0.0).

    c_bar is the maximum feature-vector norm over the image (1.0 if
    that maximum is 0). Features must be non-negative so that norm
    dominates typical neighbor distances; g clamps the residual cases.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise ValueError("features must be (height, width, depth)")
    height, width, _ = features.shape
    if (seeds.width, seeds.height) != (width, height):
        raise ValueError("seed set dimensions disagree with feature grid")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    if features.min() < 0:
        raise ValueError("features must be non-negative")
    if not seeds.regions:
        raise EmptySeedsError("init: seed set is empty")
    if any(reg.cluster_label is None for reg in seeds.regions):
        raise EmptySeedsError("init: seed regions are missing cluster labels")

    labels = np.full((height, width), -1, dtype=np.int32)
    strengths = np.zeros((height, width), dtype=np.float64)
    for reg in seeds.regions:
        xs = reg.pixels[:, 0]
        ys = reg.pixels[:, 1]
        labels[ys, xs] = reg.cluster_label
        strengths[ys, xs] = 1.0

    norms = np.sqrt((features * features).sum(axis=2))
    c_bar = float(norms.max())
    if c_bar == 0.0:
        c_bar = 1.0

    g_edges = []
    for dy, dx in params.offsets:
        p, q = _pq_slices(dy, dx, height, width)
        arr = np.zeros((height, width), dtype=np.float64)
        diff = features[p] - features[q]
        dist = np.sqrt((diff * diff).sum(axis=2))
        arr[p] = np.maximum(1.0 - dist / c_bar, 0.0)
        g_edges.append(arr)

    seed_mask = strengths > 0.0
    return AutomatonState(
        width=width,
        height=height,
        labels=labels,
        strengths=strengths,
        features=features,
        offsets=params.offsets,
        c_bar=c_bar,
        g_edges=tuple(g_edges),
        changed_mask=seed_mask,
        iteration=0,
        changed_last_step=int(seed_mask.sum()),
        visited_last_step=0,
    )


def step_synchronous(state: AutomatonState) -> tuple[AutomatonState, int]:
    """Advance one generation, evaluating every cell."""
    height, width = state.height, state.width
    strengths = state.strengths
    labels = state.labels
    best_force = np.zeros((height, width), dtype=np.float64)
    best_label = np.full((height, width), -1, dtype=np.int32)
    for oi, (dy, dx) in enumerate(state.offsets):
        p, q = _pq_slices(dy, dx, height, width)
        force = np.zeros((height, width), dtype=np.float64)
        force[p] = state.g_edges[oi][p] * strengths[q]
        neighbor_label = np.full((height, width), -1, dtype=np.int32)
        neighbor_label[p] = labels[q]
        better = force > best_force  # strict: earliest offset keeps ties
        best_force[better] = force[better]
        best_label[better] = neighbor_label[better]
    won = best_force > strengths
    new_state = replace(
        state,
        labels=np.where(won, best_label, labels),
        strengths=np.where(won, best_force, strengths),
        changed_mask=won,
        iteration=state.iteration + 1,
        changed_last_step=int(won.sum()),
        visited_last_step=width * height,
    )
    return new_state, new_state.changed_last_step


def step_active_set(state: AutomatonState) -> tuple[AutomatonState, int]:
    """Advance one generation, evaluating only cells with a changed neighbor.

    A cell's next state depends only on its own strength and its
    neighbors' states; if none of those moved last generation the cell
    cannot move now, so skipping it reproduces the synchronous result
    bit-exactly.
    """
    height, width = state.height, state.width
    strengths = state.strengths
    labels = state.labels
    active = np.zeros((height, width), dtype=bool)
    for dy, dx in state.offsets:
        p, q = _pq_slices(dy, dx, height, width)
        active[p] |= state.changed_mask[q]
    ys, xs = np.nonzero(active)
    visited = int(ys.size)
    if visited == 0:
        new_state = replace(
            state,
            labels=labels.copy(),
            strengths=strengths.copy(),
            changed_mask=np.zeros((height, width), dtype=bool),
            iteration=state.iteration + 1,
            changed_last_step=0,
            visited_last_step=0,
        )
        return new_state, 0
    best_force = np.zeros(visited, dtype=np.float64)
    best_label = np.full(visited, -1, dtype=np.int32)
    for oi, (dy, dx) in enumerate(state.offsets):
        qy = np.clip(ys + dy, 0, height - 1)
        qx = np.clip(xs + dx, 0, width - 1)
        # g_edges is exactly 0 where the neighbor falls outside the image,
        # so the clipped gather contributes zero force there, as in the
        # synchronous engine.
        force = state.g_edges[oi][ys, xs] * strengths[qy, qx]
        neighbor_label = labels[qy, qx]
        better = force > best_force
        best_force[better] = force[better]
        best_label[better] = neighbor_label[better]
    won = best_force > strengths[ys, xs]
    new_labels = labels.copy()
    new_strengths = strengths.copy()
    changed_mask = np.zeros((height, width), dtype=bool)
    wy, wx = ys[won], xs[won]
    new_labels[wy, wx] = best_label[won]
    new_strengths[wy, wx] = best_force[won]
    changed_mask[wy, wx] = True
    new_state = replace(
        state,
        labels=new_labels,
        strengths=new_strengths,
        changed_mask=changed_mask,
        iteration=state.iteration + 1,
        changed_last_step=int(won.sum()),
        visited_last_step=visited,
    )
    return new_state, new_state.changed_last_step


_ENGINES = {"sync": step_synchronous, "active": step_active_set}


@dataclass
class GrowCutResult:
    labels: LabelRaster
    strengths: Band
    iterations: int
    converged: bool
    changed_history: list[int]
    visited_cells: int
    unlabeled_pixels: int
    final_state: AutomatonState | None = field(repr=False, default=None)


def run(state: AutomatonState, params: GrowCutParams, engine: str = "active") -> GrowCutResult:
    """Iterate until no cell changes or max_iterations is reached.

    The result raster holds cluster label + 1 per pixel; the reserved
    value 0 marks cells that never received a label (possible only when
    every attack on them has exactly zero force).
    """
    if engine not in _ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    step = _ENGINES[engine]
    changed_history: list[int] = []
    visited_total = 0
    iterations = 0
    converged = False
    while True:
        state, changed = step(state)
        visited_total += state.visited_last_step
        if changed == 0:
            converged = True
            break
        changed_history.append(changed)
        iterations += 1
        if iterations >= params.max_iterations:
            break
    out_labels = np.where(state.labels < 0, 0, state.labels + 1).astype(np.int32)
    return GrowCutResult(
        labels=LabelRaster(state.width, state.height, out_labels),
        strengths=Band(state.width, state.height, state.strengths.copy()),
        iterations=iterations,
        converged=converged,
        changed_history=changed_history,
        visited_cells=visited_total,
        unlabeled_pixels=int((state.labels < 0).sum()),
        final_state=state,
    )
