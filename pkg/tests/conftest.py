"""Shared fixtures: deterministic tiny instances sized for the exact
enumeration oracles."""

from __future__ import annotations

import numpy as np
import pytest

from firesite.geometry import PointSet, euclidean_matrix
from firesite.macro import MacroProblem
from firesite.micro import MicroProblem

D_S1 = 2.0433  # adjacent-macro lower bound at the default radius/overlap
D_H = 3.542
R1 = 1.7464249196572981


def tiny_macro_problem(seed: int, n_demand: int = 10, n_candidates: int = 14,
                       n_new: int = 2, all_pairs: bool = False) -> MacroProblem:
    """Small macro instance: candidates ring two existing stations so the
    adjacency window is satisfiable; C(n_candidates, n_new) stays tiny."""
    rng = np.random.default_rng(seed)
    existing = PointSet(("x0", "x1"), np.array([[0.0, 0.0], [7.0, 0.0]]))
    pick = rng.integers(0, 2, size=n_candidates)
    radius = rng.uniform(2.15, 3.35, size=n_candidates)
    angle = rng.uniform(0, 2 * np.pi, size=n_candidates)
    xy = existing.xy[pick] + np.column_stack([radius * np.cos(angle),
                                              radius * np.sin(angle)])
    candidates = PointSet(tuple(f"m{k}" for k in range(n_candidates)), xy)
    demand_xy = rng.uniform([-3, -3.5], [10, 3.5], size=(n_demand, 2))
    demand = PointSet(tuple(f"c{k}" for k in range(n_demand)), demand_xy)
    a = rng.integers(1, 5, size=n_demand).astype(float)
    return MacroProblem.build(demand, a, candidates, existing, r1=R1,
                              d_s1=D_S1, d_h=D_H, n_new=n_new,
                              all_pairs=all_pairs)


def tiny_micro_problem(seed: int, n_demand: int = 9, n_candidates: int = 12,
                       cap_slack: float = 1.3, with_cap: bool = True) -> MicroProblem:
    """Small micro instance, guaranteedly coverable under its cap: every
    community gets a nearby candidate inside the anchor ring, and the cap
    sits above the minimum needed for a feasible cover."""
    assert n_candidates >= n_demand
    rng = np.random.default_rng(seed)
    anchors = PointSet(("x0", "x1"), np.array([[1.0, 1.0], [3.2, 3.2]]))
    demand_xy = rng.uniform(0.2, 4.0, size=(n_demand, 2))
    demand = PointSet(tuple(f"c{k}" for k in range(n_demand)), demand_xy)
    a = np.round(rng.uniform(1.0, 4.0, size=n_demand) * 2) / 2

    cand = []
    for k in range(n_candidates):
        base = demand_xy[k % n_demand]
        placed = None
        for _ in range(12):
            p = base + rng.normal(0, 0.35, size=2)
            d = euclidean_matrix(p[None, :], anchors.xy)[0]
            if ((d >= 0.75) & (d <= 2.75)).any() and np.hypot(*(p - base)) <= 0.9:
                placed = p
                break
        if placed is None:
            # ring projection along the anchor-community segment always
            # yields a compliant candidate that still covers the community
            da = euclidean_matrix(base[None, :], anchors.xy)[0]
            ai = int(np.argmin(da))
            direction = (base - anchors.xy[ai]) / max(da[ai], 1e-9)
            placed = anchors.xy[ai] + min(2.7, max(0.8, da[ai])) * direction
        cand.append(placed)
    candidates = PointSet(tuple(f"u{k}" for k in range(n_candidates)),
                          np.asarray(cand))
    problem = MicroProblem.build(demand, a, candidates, anchors, r2=1.0,
                                 d_s2=0.696, d_l2=2.796)
    cov, loads = problem.cov, problem.eta_load
    assert cov.any(axis=1).all(), "tiny micro instance left a demand uncovered"
    if not with_cap:
        return problem
    need = max(loads[np.flatnonzero(cov[i])].min() for i in range(n_demand))
    return problem.with_cap(float(need) * cap_slack)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
