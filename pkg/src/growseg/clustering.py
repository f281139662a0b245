"""k-means labeling of seed descriptors with random restarts.

Lloyd iterations from k initial centroids drawn without replacement
from the descriptors. Among restarted runs, the winner is the one with
the largest separation, defined as the minimum pairwise centroid
distance; ties fall back to lowest inertia, then earliest run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyInputError
from .rng import Prng
from .seeding import SeedSet

log = logging.getLogger(__name__)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    inertia: float
    separation: float
    inertia_history: list[float] = field(repr=False)
    n_iter: int = 0
    converged: bool = False

    @property
    def k(self) -> int:
        return len(self.centroids)


def _pairwise_min_distance(centroids: np.ndarray) -> float:
    if len(centroids) < 2:
        return float("inf")
    diff = centroids[:, None, :] - centroids[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    iu = np.triu_indices(len(centroids), k=1)
    return float(np.sqrt(d2[iu].min()))


def _initial_centroid_indices(descriptors: np.ndarray, k: int, prng: Prng) -> list[int]:
    """k indices with pairwise-distinct values, in shuffled order."""
    order = prng.sample_indices(len(descriptors), len(descriptors))
    chosen: list[int] = []
    seen: set[bytes] = set()
    for idx in order:
        key = descriptors[idx].tobytes()
        if key not in seen:
            seen.add(key)
            chosen.append(idx)
            if len(chosen) == k:
                break
    return chosen


def kmeans(descriptors: np.ndarray, k: int, prng: Prng, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm on [0, 1]-scaled descriptor vectors.

    Stops when the assignment is unchanged or max_iter is reached. An
    empty cluster is re-seeded with the point farthest from its
    assigned centroid, keeping exactly k groups. If k exceeds the
    number of distinct descriptors it is lowered to that count.
    """
    desc = np.asarray(descriptors, dtype=np.float64)
    if desc.ndim != 2 or len(desc) == 0:
        raise EmptyInputError("kmeans requires a non-empty (n, d) descriptor array")
    if k < 1:
        raise ValueError("k must be >= 1")
    if desc.min() < -1e-9 or desc.max() > 1.0 + 1e-9:
        raise ValueError("descriptors must be scaled to [0, 1] per component")
    n = len(desc)
    distinct = len(np.unique(desc, axis=0))
    if k > distinct:
        log.warning("k=%d exceeds %d distinct descriptors; lowering k", k, distinct)
        k = distinct

    centroids = desc[_initial_centroid_indices(desc, k, prng)].copy()
    assignment = None
    history: list[float] = []
    converged = False
    for _ in range(max_iter):
        diff = desc[:, None, :] - centroids[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        new_assignment = np.argmin(d2, axis=1).astype(np.int32)  # ties: lowest index
        own = d2[np.arange(n), new_assignment]
        history.append(float(own.sum()))
        if assignment is not None and np.array_equal(new_assignment, assignment):
            converged = True
            break
        assignment = new_assignment
        counts = np.bincount(assignment, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                centroids[j] = desc[assignment == j].mean(axis=0)
        if (counts == 0).any():
            farthest = own.copy()
            for j in np.flatnonzero(counts == 0):
                p = int(np.argmax(farthest))
                centroids[j] = desc[p]
                assignment[p] = j
                farthest[p] = -1.0
    return KMeansResult(
        centroids=centroids,
        assignment=assignment,
        inertia=history[-1],
        separation=_pairwise_min_distance(centroids),
        inertia_history=history,
        n_iter=len(history),
        converged=converged,
    )


def best_of_restarts(
    descriptors: np.ndarray, k: int, restarts: int, prng: Prng, max_iter: int = 100
) -> KMeansResult:
    """Best of `restarts` independent runs, maximizing separation.

    Run i uses prng.substream(i), so results do not depend on execution
    order. Ties on separation prefer lower inertia, then the earlier run.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best: KMeansResult | None = None
    for i in range(restarts):
        result = kmeans(descriptors, k, prng.substream(i), max_iter)
        if (
            best is None
            or result.separation > best.separation
            or (result.separation == best.separation and result.inertia < best.inertia)
        ):
            best = result
    return best


def apply_labels(s: SeedSet, result: KMeansResult) -> SeedSet:
    """Assign each region its cluster label; non-seed pixels stay unlabeled."""
    if len(result.assignment) != len(s.regions):
        raise ValueError(
            f"assignment covers {len(result.assignment)} regions, seed set has {len(s.regions)}"
        )
    regions = [
        replace(reg, cluster_label=int(result.assignment[i]))
        for i, reg in enumerate(s.regions)
    ]
    return SeedSet(regions, s.width, s.height)
