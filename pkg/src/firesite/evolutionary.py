"""The two metaheuristic engines over binary site-selection encodings:
a single-objective GA with elitist reservation and an NSGA-II style
Pareto solver with constraint domination.

Randomness contract: one seeded generator drives everything, consumed in a
fixed order per generation (tournament draws, crossover coins, crossover
masks, mutation mask, repair keys), so two runs with equal seeds and
parameters are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import nondominated_ranks
from .metrics import ParetoArchive


@dataclass
class EAParams:
    pop_size: int = 300
    generations: int = 500
    crossover_prob: float = 0.9
    mutation_prob: float = 0.005
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("population size must be at least 2")
        for p in (self.crossover_prob, self.mutation_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.elitism < 0 or self.elitism >= self.pop_size:
            raise ValueError("elitism must lie in [0, pop_size)")


@dataclass
class BinaryProblem:
    """A problem over fixed-length bitstrings.

    ``evaluate`` maps a (P, n_bits) uint8 population to per-individual
    results: ``(fitness, violation)`` for the GA (fitness maximized) or
    ``(objectives, violation)`` with objectives (P, m) for the MOEA
    (minimized). ``repair`` optionally rewrites a population in place-free
    fashion, drawing from the engine's seeded stream.
    """

    n_bits: int
    evaluate: Callable[[np.ndarray], tuple]
    repair: Callable[[np.ndarray, np.random.Generator], np.ndarray] | None = None
    init_density: float = 0.5


@dataclass
class EvaluatedIndividual:
    chromosome: np.ndarray
    objectives: np.ndarray  # length 1 for the GA, 3 for the MOEA
    violation: float

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


@dataclass
class GAResult:
    best: EvaluatedIndividual
    feasible: bool
    trace_fitness: np.ndarray   # best-so-far fitness, one entry per generation
    trace_feasible: np.ndarray  # feasibility of the best-so-far individual


@dataclass
class NSGA2Result:
    archive: ParetoArchive
    generations: list[ParetoArchive] = field(default_factory=list)
    feasible: bool = True


def constraint_dominates(a: EvaluatedIndividual, b: EvaluatedIndividual) -> bool:
    """Feasibility-first domination: feasible beats infeasible, less
    violating beats more violating, and Pareto domination decides between
    feasible individuals."""
    if a.feasible and not b.feasible:
        return True
    if not a.feasible and not b.feasible:
        return a.violation < b.violation
    if not a.feasible:
        return False
    ao, bo = np.asarray(a.objectives, float), np.asarray(b.objectives, float)
    return bool((ao <= bo).all() and (ao < bo).any())


def fast_nondominated_sort(points, minimize: bool = True) -> list[list[int]]:
    """Partition points into Pareto fronts; front 0 is the non-dominated set."""
    objs = np.ascontiguousarray(points, dtype=float)
    if objs.ndim != 2:
        raise ValueError("points must be (n, m)")
    if not minimize:
        objs = -objs
    ranks = nondominated_ranks(objs, np.zeros(objs.shape[0]))
    fronts = []
    for r in range(int(ranks.max()) + 1):
        fronts.append([int(i) for i in np.flatnonzero(ranks == r)])
    return fronts


def crowding_distance(front: np.ndarray) -> np.ndarray:
    """Per-point crowding distance; per-objective extremes get inf and
    objectives with zero range contribute nothing."""
    objs = np.asarray(front, dtype=float)
    if objs.ndim != 2 or objs.shape[0] == 0:
        raise ValueError("front must be non-empty (n, m)")
    n, m = objs.shape
    dist = np.zeros(n)
    for k in range(m):
        order = np.argsort(objs[:, k], kind="stable")
        vals = objs[order, k]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        rng_k = vals[-1] - vals[0]
        if rng_k <= 0 or n < 3:
            continue
        interior = order[1:-1]
        dist[interior] += (vals[2:] - vals[:-2]) / rng_k
    return dist


def _key_columns_ga(fitness: np.ndarray, violation: np.ndarray):
    # total order: feasible first, then smaller violation, then higher fitness
    return violation > 0, violation, -fitness


def _ga_better(cand: EvaluatedIndividual, best: EvaluatedIndividual) -> bool:
    if cand.feasible != best.feasible:
        return cand.feasible
    if not cand.feasible and cand.violation != best.violation:
        return cand.violation < best.violation
    return float(cand.objectives[0]) > float(best.objectives[0])


def _lex_less(keys_a, keys_b) -> np.ndarray:
    """Vectorized lexicographic strict comparison over key column tuples."""
    less = np.zeros(keys_a[0].shape, dtype=bool)
    tied = np.ones(keys_a[0].shape, dtype=bool)
    for ka, kb in zip(keys_a, keys_b):
        less |= tied & (ka < kb)
        tied &= ka == kb
    return less


def _initial_population(problem: BinaryProblem, params: EAParams,
                        rng: np.random.Generator) -> np.ndarray:
    pop = (rng.random((params.pop_size, problem.n_bits)) < problem.init_density)
    pop = pop.astype(np.uint8)
    if problem.repair is not None:
        pop = problem.repair(pop, rng)
    return pop


def _make_offspring(pop: np.ndarray, winners: np.ndarray, n_off: int,
                    params: EAParams, rng: np.random.Generator) -> np.ndarray:
    n_pairs = (n_off + 1) // 2
    p1 = pop[winners[0::2][:n_pairs]]
    p2 = pop[winners[1::2][:n_pairs]]
    do_cross = rng.random(n_pairs) < params.crossover_prob
    mask = rng.random(p1.shape) < 0.5
    c1 = np.where(do_cross[:, None] & mask, p2, p1)
    c2 = np.where(do_cross[:, None] & mask, p1, p2)
    off = np.concatenate([c1, c2])[:n_off]
    flip = rng.random(off.shape) < params.mutation_prob
    return (off ^ flip).astype(np.uint8)


def ga_elitist(problem: BinaryProblem, params: EAParams) -> GAResult:
    """Elitist GA maximizing a single fitness under constraint domination.

    The trace records the best-so-far individual's fitness each generation
    (entry 0 is the initial population), which is non-decreasing as long as
    the incumbent's feasibility class does not improve mid-run.
    """
    rng = np.random.default_rng(params.seed)
    pop = _initial_population(problem, params, rng)
    fitness, violation = problem.evaluate(pop)

    def order(fit, viol):
        return np.lexsort(tuple(reversed(_key_columns_ga(fit, viol))))

    best_idx = order(fitness, violation)[0]
    best = EvaluatedIndividual(pop[best_idx].copy(),
                               np.array([fitness[best_idx]]),
                               float(violation[best_idx]))
    trace_f = [float(best.objectives[0])]
    trace_ok = [best.feasible]

    n_elite = params.elitism
    n_off = params.pop_size - n_elite
    for _gen in range(params.generations):
        keys = _key_columns_ga(fitness, violation)
        ia = rng.integers(0, params.pop_size, size=2 * ((n_off + 1) // 2))
        ib = rng.integers(0, params.pop_size, size=ia.size)
        challenger_wins = _lex_less(tuple(k[ib] for k in keys),
                                    tuple(k[ia] for k in keys))
        winners = np.where(challenger_wins, ib, ia)

        off = _make_offspring(pop, winners, n_off, params, rng)
        if problem.repair is not None:
            off = problem.repair(off, rng)

        elite_idx = order(fitness, violation)[:n_elite]
        pop = np.concatenate([pop[elite_idx], off])
        off_fit, off_viol = problem.evaluate(off)
        fitness = np.concatenate([fitness[elite_idx], off_fit])
        violation = np.concatenate([violation[elite_idx], off_viol])

        gen_best = order(fitness, violation)[0]
        cand = EvaluatedIndividual(pop[gen_best].copy(),
                                   np.array([fitness[gen_best]]),
                                   float(violation[gen_best]))
        if _ga_better(cand, best):
            best = cand
        trace_f.append(float(best.objectives[0]))
        trace_ok.append(best.feasible)

    return GAResult(best=best, feasible=best.feasible,
                    trace_fitness=np.asarray(trace_f),
                    trace_feasible=np.asarray(trace_ok))


def _population_archive(pop: np.ndarray, objs: np.ndarray, viol: np.ndarray,
                        generation: int) -> ParetoArchive:
    feas = viol == 0.0
    feasible = bool(feas.any())
    if feasible:
        sub_pop, sub_objs = pop[feas], objs[feas]
        ranks = nondominated_ranks(np.ascontiguousarray(sub_objs),
                                   np.zeros(sub_objs.shape[0]))
        keep = ranks == 0
        sub_pop, sub_objs = sub_pop[keep], sub_objs[keep]
    else:
        vmin = viol.min()
        keep = viol == vmin
        sub_pop, sub_objs = pop[keep], objs[keep]

    _, first = np.unique(sub_pop, axis=0, return_index=True)
    sub_pop, sub_objs = sub_pop[np.sort(first)], sub_objs[np.sort(first)]
    key_cols = [sub_pop[:, k] for k in range(sub_pop.shape[1] - 1, -1, -1)]
    key_cols += [sub_objs[:, k] for k in range(sub_objs.shape[1] - 1, -1, -1)]
    order = np.lexsort(key_cols)
    return ParetoArchive(generation=generation,
                         objectives=sub_objs[order].copy(),
                         chromosomes=sub_pop[order].copy(),
                         feasible=feasible)


def nsga2(problem: BinaryProblem, params: EAParams) -> NSGA2Result:
    """NSGA-II with constraint domination, binary tournament selection and
    crowding-truncated survival. Records the feasible non-dominated set of
    every generation's population."""
    rng = np.random.default_rng(params.seed)
    pop = _initial_population(problem, params, rng)
    objs, viol = problem.evaluate(pop)
    objs = np.ascontiguousarray(objs, dtype=float)

    history: list[ParetoArchive] = []
    P = params.pop_size
    for gen in range(params.generations):
        history.append(_population_archive(pop, objs, viol, gen))

        ranks = nondominated_ranks(objs, viol)
        crowd = np.empty(P)
        for r in range(int(ranks.max()) + 1):
            idx = np.flatnonzero(ranks == r)
            crowd[idx] = crowding_distance(objs[idx])

        ia = rng.integers(0, P, size=P if P % 2 == 0 else P + 1)
        ib = rng.integers(0, P, size=ia.size)
        challenger_wins = _lex_less((ranks[ib], -crowd[ib]), (ranks[ia], -crowd[ia]))
        winners = np.where(challenger_wins, ib, ia)

        off = _make_offspring(pop, winners, P, params, rng)
        if problem.repair is not None:
            off = problem.repair(off, rng)
        off_objs, off_viol = problem.evaluate(off)

        all_pop = np.concatenate([pop, off])
        all_objs = np.ascontiguousarray(np.concatenate([objs, off_objs]), dtype=float)
        all_viol = np.concatenate([viol, off_viol])

        all_ranks = nondominated_ranks(all_objs, all_viol)
        chosen: list[np.ndarray] = []
        n_chosen = 0
        for r in range(int(all_ranks.max()) + 1):
            idx = np.flatnonzero(all_ranks == r)
            if n_chosen + idx.size <= P:
                chosen.append(idx)
                n_chosen += idx.size
                if n_chosen == P:
                    break
            else:
                cd = crowding_distance(all_objs[idx])
                # largest crowding distance first; ties by lower index
                order = np.lexsort((idx, -cd))
                chosen.append(idx[order[: P - n_chosen]])
                n_chosen = P
                break
        sel = np.concatenate(chosen)
        pop, objs, viol = all_pop[sel], all_objs[sel], all_viol[sel]

    final = _population_archive(pop, objs, viol, params.generations)
    history.append(final)
    return NSGA2Result(archive=final, generations=history, feasible=final.feasible)
