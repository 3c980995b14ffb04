"""Exact brute-force solvers for small instances; ground truth for the
evolutionary solvers. Guards are hard limits: above them the oracle
refuses rather than approximating."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import GuardExceededError
from .kernels import nondominated_ranks
from .macro import MacroProblem
from .micro import MicroProblem

MACRO_GUARD = 10 ** 6
MICRO_GUARD_BITS = 20
_BATCH = 4096


@dataclass(frozen=True)
class ExactResult:
    tier: str            # "macro" | "micro"
    enumerated: int
    wall_time: float
    feasible: bool
    best_fitness: float | None = None                 # macro optimum
    best_subsets: tuple[tuple[int, ...], ...] = ()    # all macro argmax subsets
    front_objectives: np.ndarray | None = None        # micro exact front
    front_subsets: tuple[tuple[int, ...], ...] = ()   # one witness per front point


def brute_force_macro(problem: MacroProblem, guard: int = MACRO_GUARD) -> ExactResult:
    """Enumerate every N-subset, keep the zero-violation ones, and return
    the maximum-coverage fitness with all attaining subsets."""
    j = problem.n_candidates
    n = problem.n_new
    total = math.comb(j, n)
    if total > guard:
        raise GuardExceededError(
            f"macro oracle refused: C({j}, {n}) = {total} exceeds guard {guard}")

    t0 = time.perf_counter()
    best = -np.inf
    best_subsets: list[tuple[int, ...]] = []
    combos = itertools.combinations(range(j), n)
    while True:
        batch = list(itertools.islice(combos, _BATCH))
        if not batch:
            break
        pop = np.zeros((len(batch), j), dtype=np.uint8)
        rows = np.repeat(np.arange(len(batch)), n)
        pop[rows, np.array(batch, dtype=int).ravel()] = 1
        fit, viol = problem.evaluate_population(pop)
        for k in range(len(batch)):
            if viol[k] != 0.0:
                continue
            if fit[k] > best:
                best = fit[k]
                best_subsets = [batch[k]]
            elif fit[k] == best:
                best_subsets.append(batch[k])
    elapsed = time.perf_counter() - t0
    feasible = bool(best_subsets)
    return ExactResult(tier="macro", enumerated=total, wall_time=elapsed,
                       feasible=feasible,
                       best_fitness=float(best) if feasible else None,
                       best_subsets=tuple(sorted(best_subsets)))


def _merge_front(objs_a: np.ndarray, subs_a: list[tuple[int, ...]],
                 objs_b: np.ndarray, subs_b: list[tuple[int, ...]]):
    objs = np.concatenate([objs_a, objs_b]) if objs_a.size else objs_b
    subs = subs_a + subs_b
    ranks = nondominated_ranks(np.ascontiguousarray(objs), np.zeros(objs.shape[0]))
    keep = np.flatnonzero(ranks == 0)
    return objs[keep], [subs[i] for i in keep]


def exact_pareto_micro(problem: MicroProblem,
                       guard_bits: int = MICRO_GUARD_BITS) -> ExactResult:
    """Enumerate all candidate subsets and return the exact feasible
    non-dominated set of (count, weighted distance, negated adjacency)."""
    j = problem.n_candidates
    if j > guard_bits:
        raise GuardExceededError(
            f"micro oracle refused: 2^{j} subsets exceed the 2^{guard_bits} guard")
    total = 1 << j

    t0 = time.perf_counter()
    front_objs = np.empty((0, 3))
    front_subs: list[tuple[int, ...]] = []
    codes = np.arange(total, dtype=np.uint64)
    for start in range(0, total, _BATCH):
        chunk = codes[start:start + _BATCH]
        pop = ((chunk[:, None] >> np.arange(j, dtype=np.uint64)[None, :]) & 1)
        pop = pop.astype(np.uint8)
        objs, viol = problem.evaluate_population(pop)
        feas = np.flatnonzero(viol == 0.0)
        if feas.size == 0:
            continue
        sub_objs = objs[feas]
        ranks = nondominated_ranks(np.ascontiguousarray(sub_objs),
                                   np.zeros(sub_objs.shape[0]))
        keep = np.flatnonzero(ranks == 0)
        batch_subs = [tuple(int(b) for b in np.flatnonzero(pop[i]))
                      for i in feas[keep]]
        front_objs, front_subs = _merge_front(front_objs, front_subs,
                                              sub_objs[keep], batch_subs)
    elapsed = time.perf_counter() - t0

    if front_objs.shape[0]:
        # one canonical witness per unique objective vector
        uniq, inv = np.unique(front_objs, axis=0, return_inverse=True)
        witnesses = []
        for u in range(uniq.shape[0]):
            cands = [front_subs[i] for i in np.flatnonzero(inv == u)]
            witnesses.append(min(cands))
        return ExactResult(tier="micro", enumerated=total, wall_time=elapsed,
                           feasible=True, front_objectives=uniq,
                           front_subsets=tuple(witnesses))
    return ExactResult(tier="micro", enumerated=total, wall_time=elapsed,
                       feasible=False, front_objectives=np.empty((0, 3)),
                       front_subsets=())
