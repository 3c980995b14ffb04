"""Tri-objective micro-station model, the workload-calibration protocol and
the NSGA-II solve pipeline.

Objectives, all minimized: station count, risk-weighted distance of each
covered demand to its nearest selected covering station, and the negated
mean distance between adjacent selected stations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import CalibrationError
from .evolutionary import BinaryProblem, EAParams, NSGA2Result, nsga2
from .geometry import PointSet, coverage_sets, distance_index
from .metrics import ParetoArchive


@dataclass(frozen=True)
class MicroObjectives:
    f1: float  # station count
    f2: float  # risk-weighted assignment distance
    f3: float  # negated mean adjacent-pair distance (<= 0)

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3])


@dataclass(frozen=True)
class MicroProblem:
    """Immutable micro-siting instance.

    Candidates are expected to be pre-filtered to the macro anchor ring;
    ``ring_dev`` re-checks that defensively (0 for a compliant candidate,
    otherwise its distance outside the nearest anchor's ring). The workload
    of a selected station is the total demand weight within its radius,
    independent of assignment; ``cap`` is None while calibrating.
    """

    demand_ids: tuple[str, ...]
    candidate_ids: tuple[str, ...]
    a: np.ndarray        # (I,)
    cov: np.ndarray      # (I, J) at R2
    d_ij: np.ndarray     # (I, J)
    d_jj: np.ndarray     # (J, J)
    eta_load: np.ndarray  # (J,) demand weight within R2 of each candidate
    ring_dev: np.ndarray  # (J,) anchor-ring deviation, 0 = compliant
    cap: float | None = None

    def __post_init__(self):
        if self.cap is not None and self.cap <= 0:
            raise ValueError("workload cap must be positive when present")

    @property
    def n_candidates(self) -> int:
        return len(self.candidate_ids)

    @classmethod
    def build(cls, demand: PointSet, a, candidates: PointSet, anchors: PointSet | None,
              r2: float, d_s2: float = 0.0, d_l2: float = float("inf"),
              cap: float | None = None, metric: str = "euclidean",
              network=None) -> "MicroProblem":
        a = np.asarray(a, dtype=float)
        d_ic = distance_index(demand, candidates, metric, network)
        cov = coverage_sets(d_ic, r2).mask
        d_jj = distance_index(candidates, candidates, metric, network).d
        if anchors is not None and len(anchors):
            d_ja = distance_index(candidates, anchors, metric, network).d
            outside = np.maximum(d_s2 - d_ja, 0.0) + np.maximum(d_ja - d_l2, 0.0)
            ring_dev = outside.min(axis=1)
        else:
            ring_dev = np.zeros(len(candidates))
        eta_load = cov.T.astype(float) @ a
        return cls(demand_ids=demand.ids, candidate_ids=candidates.ids, a=a,
                   cov=cov, d_ij=d_ic.d, d_jj=d_jj, eta_load=eta_load,
                   ring_dev=ring_dev, cap=cap)

    def with_cap(self, cap: float | None) -> "MicroProblem":
        return replace(self, cap=cap)

    def evaluate_population(self, pop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pop = np.ascontiguousarray(pop, dtype=np.uint8)
        cap = np.inf if self.cap is None else float(self.cap)
        f1, f2, f3, viol = kernels.eval_micro_population(
            pop, self.cov, self.a, self.d_ij, self.d_jj,
            self.eta_load, cap, self.ring_dev)
        return np.column_stack([f1, f2, f3]), viol

    def solution_workload(self, chrom: np.ndarray) -> float:
        """Mean per-station demand load of one plan (0 for an empty plan)."""
        sel = np.flatnonzero(chrom)
        if sel.size == 0:
            return 0.0
        return float(self.eta_load[sel].mean())


def _as_chromosome(selected, n_bits: int) -> np.ndarray:
    chrom = np.zeros(n_bits, dtype=np.uint8)
    idx = np.asarray(sorted(set(int(j) for j in selected)), dtype=int)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n_bits:
            raise IndexError("selected site index out of range")
        chrom[idx] = 1
    return chrom


def micro_objectives(selected, problem: MicroProblem) -> MicroObjectives:
    chrom = _as_chromosome(selected, problem.n_candidates)
    objs, _ = problem.evaluate_population(chrom[None, :])
    return MicroObjectives(*map(float, objs[0]))


def micro_violation(selected, problem: MicroProblem) -> float:
    chrom = _as_chromosome(selected, problem.n_candidates)
    _, viol = problem.evaluate_population(chrom[None, :])
    return float(viol[0])


@dataclass(frozen=True)
class WorkloadCalibration:
    requested_runs: int
    included_runs: int
    run_seeds: tuple[int, ...]
    run_max_workload: tuple[float, ...]        # per included run
    per_run_workloads: tuple[tuple[float, ...], ...]  # per solution, per run
    archives: tuple[ParetoArchive, ...]        # final archive per included run
    s: float


def calibrate_workload(problem: MicroProblem, params: EAParams,
                       m_runs: int = 10) -> WorkloadCalibration:
    """Estimate the workload cap: solve the cap-free model M times with
    distinct seeds, take each run's maximum per-solution mean workload, and
    average the maxima."""
    if m_runs < 1:
        raise ValueError("m_runs must be >= 1")
    uncapped = problem.with_cap(None)
    seeds, maxima, per_run, archives = [], [], [], []
    for i in range(m_runs):
        run_params = replace(params, seed=params.seed + i)
        result = solve_micro(uncapped, run_params)
        if not result.feasible or len(result.archive) == 0:
            warnings.warn(f"calibration run {i} found no feasible front; excluded",
                          stacklevel=2)
            continue
        loads = tuple(uncapped.solution_workload(c) for c in result.archive.chromosomes)
        seeds.append(run_params.seed)
        maxima.append(max(loads))
        per_run.append(loads)
        archives.append(result.archive)
    if not maxima:
        raise CalibrationError("every calibration run came back infeasible")
    s = float(np.mean(maxima))
    return WorkloadCalibration(requested_runs=m_runs, included_runs=len(maxima),
                               run_seeds=tuple(seeds),
                               run_max_workload=tuple(maxima),
                               per_run_workloads=tuple(per_run),
                               archives=tuple(archives), s=s)


def solve_micro(problem: MicroProblem, params: EAParams) -> NSGA2Result:
    """Run NSGA-II and re-verify every archived plan's feasibility by direct
    recomputation before returning."""
    bp = BinaryProblem(n_bits=problem.n_candidates,
                       evaluate=problem.evaluate_population)
    result = nsga2(bp, params)
    if result.feasible:
        for chrom in result.archive.chromosomes:
            v = micro_violation(np.flatnonzero(chrom), problem)
            if v != 0.0:
                raise AssertionError(
                    "archived plan failed feasibility recomputation "
                    f"(violation {v})")
    return result
