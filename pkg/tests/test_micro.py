import itertools

import numpy as np
import pytest

from conftest import tiny_micro_problem
from firesite.errors import CalibrationError
from firesite.evolutionary import EAParams
from firesite.geometry import PointSet
from firesite.metrics import ParetoArchive
from firesite.micro import (MicroProblem, calibrate_workload,
                            micro_objectives, micro_violation, solve_micro)
from firesite import micro as micro_mod


def build_micro(demand_xy, a, cand_xy, cap=None, anchors_xy=None,
                r2=1.0, d_s2=0.0, d_l2=np.inf):
    demand = PointSet(tuple(f"c{k}" for k in range(len(demand_xy))),
                      np.asarray(demand_xy, float))
    cands = PointSet(tuple(f"u{k}" for k in range(len(cand_xy))),
                     np.asarray(cand_xy, float))
    anchors = None
    if anchors_xy is not None:
        anchors = PointSet(tuple(f"x{k}" for k in range(len(anchors_xy))),
                           np.asarray(anchors_xy, float))
    return MicroProblem.build(demand, np.asarray(a, float), cands, anchors,
                              r2=r2, d_s2=d_s2, d_l2=d_l2, cap=cap)


class TestMicroObjectives:
    def test_single_station_hand_values(self):
        p = build_micro([(0.3, 0), (-0.4, 0)], [1, 2], [(0, 0)])
        obj = micro_objectives([0], p)
        assert obj.f1 == 1.0
        assert obj.f2 == pytest.approx(1 * 0.3 + 2 * 0.4)
        assert obj.f3 == 0.0

    def test_symmetric_pair_adjacency(self):
        p = build_micro([(0, 0.2)], [1], [(0, 0), (1, 0)])
        obj = micro_objectives([0, 1], p)
        assert obj.f3 == pytest.approx(-1.0)

    def test_empty_selection_convention(self):
        p = build_micro([(0, 0), (1, 1)], [1, 2], [(0, 0)])
        obj = micro_objectives([], p)
        assert (obj.f1, obj.f2, obj.f3) == (0.0, 0.0, 0.0)
        assert micro_violation([], p) == 2.0  # both demands uncovered

    def test_nearest_assignment_minimizes_weighted_distance(self, rng):
        # exhaustive assignment enumeration on <= 3 stations, <= 5 demands
        for trial in range(8):
            demand_xy = rng.uniform(0, 2, size=(5, 2))
            a = rng.integers(1, 4, size=5).astype(float)
            cand_xy = rng.uniform(0, 2, size=(3, 2))
            p = build_micro(demand_xy, a, cand_xy, r2=2.0)
            sel = [0, 1, 2]
            f2 = micro_objectives(sel, p).f2
            per_demand_options = []
            for i in range(5):
                opts = [p.d_ij[i, j] for j in sel if p.cov[i, j]]
                per_demand_options.append(opts)
            if any(not o for o in per_demand_options):
                continue
            best = min(sum(w * d for w, d in zip(a, combo))
                       for combo in itertools.product(*per_demand_options))
            assert f2 == pytest.approx(best)

    def test_f1_equals_popcount(self, rng):
        p = tiny_micro_problem(1)
        for _ in range(20):
            sel = [int(j) for j in
                   rng.choice(p.n_candidates,
                              size=rng.integers(0, p.n_candidates + 1),
                              replace=False)]
            assert micro_objectives(sel, p).f1 == len(sel)

    def test_f2_zero_for_zero_demand_weight(self):
        p = build_micro([(0.2, 0), (0.5, 0)], [0, 0], [(0, 0), (1, 0)])
        assert micro_objectives([0, 1], p).f2 == 0.0

    def test_f3_nonpositive_and_zero_below_two(self, rng):
        p = tiny_micro_problem(2)
        for _ in range(20):
            k = int(rng.integers(0, p.n_candidates + 1))
            sel = [int(j) for j in rng.choice(p.n_candidates, size=k, replace=False)]
            f3 = micro_objectives(sel, p).f3
            assert f3 <= 0.0
            assert (f3 == 0.0) == (len(sel) < 2)


class TestMicroViolation:
    def test_covered_within_cap_feasible(self):
        p = build_micro([(0.3, 0)], [2], [(0, 0)], cap=5.0)
        assert micro_violation([0], p) == 0.0

    def test_one_uncovered_demand(self):
        p = build_micro([(0.3, 0), (9, 9)], [2, 1], [(0, 0)], cap=5.0)
        assert micro_violation([0], p) >= 1.0

    def test_workload_excess_hand_arithmetic(self):
        # a station whose in-radius risk totals 21.4 against a 19.374829 cap
        p = build_micro([(0.1, 0), (0.2, 0)], [10.0, 11.4], [(0, 0)],
                        cap=19.374829)
        assert micro_violation([0], p) == pytest.approx(21.4 - 19.374829)

    def test_ring_deviation_rechecked(self):
        # candidate 3.0 km from the only anchor with ring [0.7, 2.8]
        p = build_micro([(3.0, 0.5)], [1], [(3.0, 0)], anchors_xy=[(0, 0)],
                        d_s2=0.7, d_l2=2.8)
        v = micro_violation([0], p)
        assert v == pytest.approx(3.0 - 2.8)

    def test_network_metric_drives_all_distance_terms(self):
        from firesite.geometry import PointSet
        from firesite.sizing import RoadEdge, RoadNetwork
        # path graph a-b-c along the x axis; detour makes network distances
        # exceed straight-line ones
        xy = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.5], [2.0, 1.5]])
        def edge(i, u, v):
            poly = np.array([xy[u], xy[v]])
            return RoadEdge(f"e{i}", u, v, poly, RoadEdge.arc_length(poly))
        net = RoadNetwork(("a", "b", "c", "d"), xy,
                          (edge(0, 0, 1), edge(1, 1, 2), edge(2, 2, 3)))
        demand = PointSet(("c0",), np.array([[0.0, 0.0]]))
        cands = PointSet(("u0", "u1"), np.array([[1.0, 0.0], [2.0, 1.5]]))
        anchors = PointSet(("x0",), np.array([[0.0, 0.0]]))
        p = MicroProblem.build(demand, [2.0], cands, anchors, r2=1.0,
                               d_s2=0.5, d_l2=2.0, metric="network", network=net)
        # network distance demand->u1 is 1 + 1.5 + 1 = 3.5, not hypot(2,1.5)=2.5
        assert p.d_ij[0, 1] == pytest.approx(3.5)
        assert p.cov[0, 0] and not p.cov[0, 1]
        # ring deviation for u1 uses the network distance too: 3.5 - 2.0
        assert p.ring_dev[1] == pytest.approx(1.5)
        assert p.ring_dev[0] == 0.0

    def test_workload_counts_all_covered_not_only_assigned(self):
        # both stations cover both demands; each station's load is the full
        # in-radius sum regardless of nearest assignment
        p = build_micro([(0.4, 0), (0.6, 0)], [3, 3], [(0, 0), (1, 0)], cap=5.0)
        assert micro_violation([0, 1], p) == pytest.approx(2 * (6.0 - 5.0))


class TestCalibration:
    def _canned_archive(self, loads_per_station_sets, problem):
        chroms = []
        for sel in loads_per_station_sets:
            c = np.zeros(problem.n_candidates, np.uint8)
            c[list(sel)] = 1
            chroms.append(c)
        objs = np.column_stack([np.arange(len(chroms), dtype=float)] * 3)
        return ParetoArchive(generation=0, objectives=objs,
                             chromosomes=np.asarray(chroms), feasible=True)

    def test_single_run_max_formula(self, monkeypatch):
        p = tiny_micro_problem(0, with_cap=False)
        workloads = [4.0, 7.5, 6.0]

        class Fake:
            def __init__(self, archive):
                self.archive = archive
                self.feasible = True

        arch = self._canned_archive([[0], [1], [2]], p)
        monkeypatch.setattr(micro_mod, "solve_micro", lambda pr, pa: Fake(arch))
        monkeypatch.setattr(MicroProblem, "solution_workload",
                            lambda self, c: workloads[int(np.flatnonzero(c)[0])])
        calib = calibrate_workload(p, EAParams(pop_size=10, generations=1, seed=0),
                                   m_runs=1)
        assert calib.s == pytest.approx(7.5)

    def test_two_run_average_formula(self, monkeypatch):
        p = tiny_micro_problem(0, with_cap=False)
        run_loads = [[8.0, 3.0], [10.0, 2.0]]
        calls = []

        class Fake:
            def __init__(self, archive):
                self.archive = archive
                self.feasible = True

        arch = self._canned_archive([[0], [1]], p)

        def fake_solve(pr, pa):
            calls.append(pa.seed)
            return Fake(arch)

        loads_iter = iter(run_loads[0] + run_loads[1])
        monkeypatch.setattr(micro_mod, "solve_micro", fake_solve)
        monkeypatch.setattr(MicroProblem, "solution_workload",
                            lambda self, c: next(loads_iter))
        calib = calibrate_workload(p, EAParams(pop_size=10, generations=1, seed=50),
                                   m_runs=2)
        assert calib.s == pytest.approx((8 + 10) / 2)
        assert calls == [50, 51]  # distinct derived seeds

    def test_recomputation_from_archives_matches_exactly(self):
        p = tiny_micro_problem(4, n_candidates=12, with_cap=False)
        calib = calibrate_workload(p, EAParams(pop_size=40, generations=40,
                                               mutation_prob=0.08, seed=7),
                                   m_runs=3)
        # independent recomputation from the persisted archives
        maxima = []
        for arch in calib.archives:
            per_solution = []
            for chrom in arch.chromosomes:
                sel = np.flatnonzero(chrom)
                per_solution.append(p.eta_load[sel].mean())
            maxima.append(max(per_solution))
        assert calib.s == np.mean(maxima)  # machine precision

    def test_all_runs_infeasible_raises(self, monkeypatch):
        p = tiny_micro_problem(0, with_cap=False)

        class Fake:
            feasible = False
            archive = ParetoArchive(0, np.empty((0, 3)), np.empty((0, 12), np.uint8),
                                    feasible=False)

        monkeypatch.setattr(micro_mod, "solve_micro", lambda pr, pa: Fake())
        with pytest.warns(UserWarning, match="excluded"):
            with pytest.raises(CalibrationError):
                calibrate_workload(p, EAParams(pop_size=10, generations=1, seed=0),
                                   m_runs=2)


class TestSolveMicro:
    def test_single_station_covering_everything_is_an_extreme(self):
        p = build_micro([(0.2, 0), (-0.3, 0), (0, 0.4)], [1, 1, 1],
                        [(0, 0), (0.1, 0), (5, 5)], cap=10.0)
        res = solve_micro(p, EAParams(pop_size=20, generations=40,
                                      mutation_prob=0.1, seed=2))
        assert res.feasible
        assert res.archive.objectives[:, 0].min() == 1.0

    def test_archive_within_exact_pareto_set(self):
        from firesite.oracle import exact_pareto_micro
        for seed in (0, 1):
            p = tiny_micro_problem(seed, n_candidates=10)
            exact = exact_pareto_micro(p)
            res = solve_micro(p, EAParams(pop_size=60, generations=80,
                                          mutation_prob=0.1, seed=seed))
            assert res.feasible and exact.feasible
            exact_set = {tuple(np.round(o, 9)) for o in exact.front_objectives}
            for o in res.archive.objectives:
                assert tuple(np.round(o, 9)) in exact_set

    def test_raising_cap_never_worsens_matched_front(self):
        p_low = tiny_micro_problem(3, cap_slack=1.2)
        p_high = p_low.with_cap(p_low.cap * 1.6)
        params = EAParams(pop_size=50, generations=60, mutation_prob=0.1, seed=9)
        low = solve_micro(p_low, params)
        high = solve_micro(p_high, params)
        assert low.feasible and high.feasible
        # every low-cap point is weakly dominated by some high-cap point
        for o in low.archive.objectives:
            assert any((h <= o + 1e-12).all() for h in high.archive.objectives)

    def test_archived_plans_reverified_feasible(self):
        p = tiny_micro_problem(5)
        res = solve_micro(p, EAParams(pop_size=30, generations=40,
                                      mutation_prob=0.1, seed=1))
        assert res.feasible
        for chrom in res.archive.chromosomes:
            assert micro_violation(np.flatnonzero(chrom), p) == 0.0
