"""Decision-maker-facing representative solutions: the three objective
extremes and an equally weighted compromise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import nondominated_ranks
from .metrics import ParetoArchive


@dataclass(frozen=True)
class RepresentativePlan:
    label: str
    index: int              # position in the archive
    objectives: np.ndarray
    chromosome: np.ndarray


@dataclass(frozen=True)
class RepresentativeSet:
    a: RepresentativePlan  # station-count extreme
    b: RepresentativePlan  # weighted-distance extreme
    c: RepresentativePlan  # adjacency-spread extreme
    d: RepresentativePlan  # equally weighted compromise

    def plans(self) -> list[RepresentativePlan]:
        return [self.a, self.b, self.c, self.d]


def _argmin_with_tiebreak(primary: np.ndarray, objs: np.ndarray) -> int:
    # ties on the primary key fall back to lexicographic objective order,
    # then archive position (lexsort is stable)
    keys = tuple(objs[:, k] for k in range(objs.shape[1] - 1, -1, -1)) + (primary,)
    return int(np.lexsort(keys)[0])


def normalized_scores(objs: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted sum of min-max-normalized objectives; zero-range objectives
    contribute nothing."""
    objs = np.asarray(objs, dtype=float)
    if weights is None:
        weights = np.ones(objs.shape[1])
    weights = np.asarray(weights, dtype=float)
    lo = objs.min(axis=0)
    rng = objs.max(axis=0) - lo
    norm = np.zeros_like(objs)
    ok = rng > 0
    norm[:, ok] = (objs[:, ok] - lo[ok]) / rng[ok]
    return norm @ weights


def pick_representatives(archive: ParetoArchive,
                         weights: np.ndarray | None = None) -> RepresentativeSet:
    """Pick the per-objective minimizers and the compromise plan from a
    mutually non-dominated archive."""
    objs = np.asarray(archive.objectives, dtype=float)
    if objs.shape[0] == 0:
        raise ValueError("archive is empty")
    ranks = nondominated_ranks(np.ascontiguousarray(objs), np.zeros(objs.shape[0]))
    if ranks.max() != 0:
        raise ValueError("archive is not mutually non-dominated")

    def plan(label: str, idx: int) -> RepresentativePlan:
        return RepresentativePlan(label=label, index=idx,
                                  objectives=objs[idx].copy(),
                                  chromosome=archive.chromosomes[idx].copy())

    ia = _argmin_with_tiebreak(objs[:, 0], objs)
    ib = _argmin_with_tiebreak(objs[:, 1], objs)
    ic = _argmin_with_tiebreak(objs[:, 2], objs)
    scores = normalized_scores(objs, weights)
    idd = _argmin_with_tiebreak(scores, objs)
    return RepresentativeSet(a=plan("A", ia), b=plan("B", ib),
                             c=plan("C", ic), d=plan("D", idd))
