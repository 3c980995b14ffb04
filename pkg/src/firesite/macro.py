"""Extended maximal-covering model for macro stations: fitness, adjacency
violation, cardinality repair, and the GA solve pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .evolutionary import BinaryProblem, EAParams, GAResult, ga_elitist
from .geometry import PointSet, coverage_sets, distance_index


@dataclass(frozen=True)
class MacroProblem:
    """Immutable macro-siting instance.

    Demand point i is covered when a selected or existing station lies
    within the macro service radius. Each selected station's adjacent
    station (nearest among selected plus existing) must sit within
    [d_s1, d_h]; ``all_pairs`` switches to the stricter every-pair reading.
    """

    demand_ids: tuple[str, ...]
    candidate_ids: tuple[str, ...]
    existing_ids: tuple[str, ...]
    a: np.ndarray                 # (I,) demand values
    cov: np.ndarray               # (I, J) candidate covers demand at R1
    covered_existing: np.ndarray  # (I,) covered by an existing station
    d_jj: np.ndarray              # (J, J) candidate-candidate distances
    d_jphi: np.ndarray            # (J, E) candidate-existing distances
    d_s1: float
    d_h: float
    n_new: int
    all_pairs: bool = False

    def __post_init__(self):
        if self.n_new < 1:
            raise ValueError("n_new must be >= 1")
        if self.n_new > len(self.candidate_ids):
            raise ConfigurationError("n_new exceeds the candidate count")

    @property
    def n_candidates(self) -> int:
        return len(self.candidate_ids)

    @property
    def total_demand(self) -> float:
        return float(self.a.sum())

    @property
    def cardinality_penalty(self) -> float:
        # any cardinality-correct individual constraint-dominates a wrong one
        return self.total_demand + 1.0

    @classmethod
    def build(cls, demand: PointSet, a, candidates: PointSet, existing: PointSet,
              r1: float, d_s1: float, d_h: float, n_new: int,
              metric: str = "euclidean", network=None,
              all_pairs: bool = False) -> "MacroProblem":
        a = np.asarray(a, dtype=float)
        if a.shape[0] != len(demand):
            raise ValueError("demand values do not match demand points")
        d_ic = distance_index(demand, candidates, metric, network)
        cov = coverage_sets(d_ic, r1).mask
        if len(existing):
            d_ie = distance_index(demand, existing, metric, network)
            covered_existing = (d_ie.d <= r1).any(axis=1)
            d_jphi = distance_index(candidates, existing, metric, network).d
        else:
            covered_existing = np.zeros(len(demand), dtype=bool)
            d_jphi = np.zeros((len(candidates), 0))
        d_jj = distance_index(candidates, candidates, metric, network).d
        return cls(demand_ids=demand.ids, candidate_ids=candidates.ids,
                   existing_ids=existing.ids, a=a, cov=cov,
                   covered_existing=covered_existing, d_jj=d_jj, d_jphi=d_jphi,
                   d_s1=float(d_s1), d_h=float(d_h), n_new=int(n_new),
                   all_pairs=all_pairs)

    def evaluate_population(self, pop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pop = np.ascontiguousarray(pop, dtype=np.uint8)
        return kernels.eval_macro_population(
            pop, self.cov, self.a, self.covered_existing, self.d_jj,
            self.d_jphi, self.d_s1, self.d_h, self.n_new,
            self.cardinality_penalty, self.all_pairs)


@dataclass(frozen=True)
class MacroPlan:
    selected_ids: tuple[str, ...]
    selected_idx: tuple[int, ...]
    covered_ids: tuple[str, ...]
    total_covered_demand: float
    violation: float

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


def _as_chromosome(selected, n_bits: int) -> np.ndarray:
    chrom = np.zeros(n_bits, dtype=np.uint8)
    idx = np.asarray(sorted(set(int(j) for j in selected)), dtype=int)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n_bits:
            raise IndexError("selected site index out of range")
        chrom[idx] = 1
    return chrom


def macro_fitness(selected, problem: MacroProblem) -> float:
    """Total demand weight covered by the selected plus existing stations."""
    chrom = _as_chromosome(selected, problem.n_candidates)
    fit, _ = problem.evaluate_population(chrom[None, :])
    return float(fit[0])


def macro_violation(selected, problem: MacroProblem) -> float:
    """Cardinality deviation (heavily scaled) plus adjacency-bound excesses."""
    chrom = _as_chromosome(selected, problem.n_candidates)
    _, viol = problem.evaluate_population(chrom[None, :])
    return float(viol[0])


def repair_cardinality_pop(pop: np.ndarray, n: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Force every row's popcount to n: surplus ones are dropped at random,
    deficits filled at random, drawing one priority key per bit from the
    engine's stream."""
    if n > pop.shape[1]:
        raise ConfigurationError("required cardinality exceeds candidate count")
    keys = rng.random(pop.shape)
    # ones rank above zeros, random keys break ties within each group, so
    # existing ones survive whenever possible
    priority = pop.astype(float) + keys
    top = np.argpartition(-priority, n - 1, axis=1)[:, :n]
    out = np.zeros_like(pop, dtype=np.uint8)
    np.put_along_axis(out, top, 1, axis=1)
    return out


def repair_cardinality(chromosome: np.ndarray, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    return repair_cardinality_pop(np.asarray(chromosome, np.uint8)[None, :], n, rng)[0]


def plan_from_chromosome(chrom: np.ndarray, problem: MacroProblem) -> MacroPlan:
    sel = np.flatnonzero(chrom)
    covered = problem.covered_existing | problem.cov[:, sel].any(axis=1)
    fit, viol = problem.evaluate_population(chrom[None, :])
    return MacroPlan(
        selected_ids=tuple(problem.candidate_ids[j] for j in sel),
        selected_idx=tuple(int(j) for j in sel),
        covered_ids=tuple(problem.demand_ids[i] for i in np.flatnonzero(covered)),
        total_covered_demand=float(fit[0]),
        violation=float(viol[0]))


def solve_macro(problem: MacroProblem, params: EAParams) -> tuple[MacroPlan, GAResult]:
    """Run the elitist GA and return the best plan plus its fitness trace.

    When nothing feasible is found the least-violating plan is returned
    with a positive violation; callers decide how to flag it.
    """
    bp = BinaryProblem(
        n_bits=problem.n_candidates,
        evaluate=problem.evaluate_population,
        repair=lambda pop, rng: repair_cardinality_pop(pop, problem.n_new, rng),
        init_density=min(0.9, max(0.1, problem.n_new / problem.n_candidates)),
    )
    result = ga_elitist(bp, params)
    plan = plan_from_chromosome(result.best.chromosome, problem)
    return plan, result
