import itertools

import numpy as np
import pytest

from conftest import D_H, D_S1, R1, tiny_macro_problem
from firesite.errors import ConfigurationError
from firesite.evolutionary import EAParams
from firesite.geometry import PointSet
from firesite.macro import (MacroProblem, macro_fitness, macro_violation,
                            plan_from_chromosome, repair_cardinality,
                            repair_cardinality_pop, solve_macro)


def simple_problem(demand_xy, a, cand_xy, existing_xy=None, r1=R1,
                   d_s1=D_S1, d_h=D_H, n_new=1, all_pairs=False):
    demand = PointSet(tuple(f"c{k}" for k in range(len(demand_xy))),
                      np.asarray(demand_xy, float))
    cands = PointSet(tuple(f"m{k}" for k in range(len(cand_xy))),
                     np.asarray(cand_xy, float))
    if existing_xy is None:
        existing = PointSet((), np.empty((0, 2)))
    else:
        existing = PointSet(tuple(f"x{k}" for k in range(len(existing_xy))),
                            np.asarray(existing_xy, float))
    return MacroProblem.build(demand, np.asarray(a, float), cands, existing,
                              r1=r1, d_s1=d_s1, d_h=d_h, n_new=n_new,
                              all_pairs=all_pairs)


class TestMacroFitness:
    def test_nothing_selected_no_existing(self):
        p = simple_problem([(0, 0), (5, 5)], [2, 3], [(0, 0.5)])
        assert macro_fitness([], p) == 0.0

    def test_single_site_covers_weighted_demand(self):
        p = simple_problem([(0, 0), (0.5, 0)], [2, 3], [(0.2, 0)])
        assert macro_fitness([0], p) == 5.0

    def test_matches_membership_scan_oracle(self, rng):
        demand_xy = rng.uniform(0, 8, size=(10, 2))
        a = rng.integers(1, 5, size=10).astype(float)
        cand_xy = rng.uniform(0, 8, size=(6, 2))
        existing_xy = rng.uniform(0, 8, size=(2, 2))
        p = simple_problem(demand_xy, a, cand_xy, existing_xy, n_new=3)
        for _ in range(20):
            sel = [int(j) for j in rng.choice(6, size=3, replace=False)]
            expect = 0.0
            for i in range(10):
                stations = [cand_xy[j] for j in sel] + list(existing_xy)
                if any(np.hypot(*(demand_xy[i] - s)) <= R1 for s in stations):
                    expect += a[i]
            assert macro_fitness(sel, p) == pytest.approx(expect)

    def test_monotone_in_added_stations(self, rng):
        p = tiny_macro_problem(3, n_candidates=10, n_new=2)
        for _ in range(20):
            sel = set(int(j) for j in rng.choice(10, size=2, replace=False))
            extra = int(rng.integers(0, 10))
            assert macro_fitness(sel | {extra}, p) >= macro_fitness(sel, p)

    def test_full_selection_covers_every_coverable_point(self):
        p = tiny_macro_problem(5, n_candidates=8, n_new=2)
        total_coverable = p.a[p.cov.any(axis=1) | p.covered_existing].sum()
        assert macro_fitness(range(8), p) == pytest.approx(total_coverable)

    def test_full_selection_without_existing_stations(self, rng):
        demand_xy = rng.uniform(0, 6, size=(9, 2))
        a = rng.integers(1, 5, size=9).astype(float)
        cand_xy = rng.uniform(0, 6, size=(5, 2))
        p = simple_problem(demand_xy, a, cand_xy, n_new=5)
        coverable = p.a[p.cov.any(axis=1)].sum()
        assert macro_fitness(range(5), p) == pytest.approx(coverable)


class TestMacroViolation:
    def test_pair_too_close_counts_each_station(self):
        p = simple_problem([(0, 0)], [1], [(0, 0), (1, 0)], n_new=2)
        # both stations' adjacent distance is 1.0, below the 2.043 bound
        assert macro_violation([0, 1], p) == pytest.approx(2 * (D_S1 - 1.0))

    def test_in_bounds_layout_is_feasible(self):
        p = simple_problem([(0, 0)], [1], [(0, 0), (2.5, 0)], n_new=2)
        assert macro_violation([0, 1], p) == 0.0

    def test_existing_station_slightly_too_far(self):
        p = simple_problem([(0, 0)], [1], [(0, 0)], existing_xy=[(3.6, 0)],
                           n_new=1)
        assert macro_violation([0], p) == pytest.approx(3.6 - D_H)

    def test_cardinality_deviation_scaled_by_total_demand(self):
        p = simple_problem([(0, 0)], [4], [(0, 0), (2.5, 0), (5.0, 0)], n_new=2)
        v = macro_violation([0], p)  # popcount 1, want 2; adjacency vacuous
        assert v == pytest.approx(p.cardinality_penalty)

    def test_all_pairs_mode_counts_every_pair(self):
        # three stations on a line 2.5 apart: nearest-neighbor reading is
        # feasible, strict all-pairs flags the 5.0 km outer pair
        p = simple_problem([(0, 0)], [1], [(0, 0), (2.5, 0), (5.0, 0)], n_new=3)
        assert macro_violation([0, 1, 2], p) == 0.0
        p2 = simple_problem([(0, 0)], [1], [(0, 0), (2.5, 0), (5.0, 0)], n_new=3,
                            all_pairs=True)
        assert macro_violation([0, 1, 2], p2) == pytest.approx(5.0 - D_H)


class TestRepair:
    def test_correct_popcount_unchanged(self, rng):
        chrom = np.array([1, 0, 1, 0, 0], np.uint8)
        out = repair_cardinality(chrom, 2, np.random.default_rng(0))
        assert np.array_equal(out, chrom)

    def test_all_zero_filled_to_n(self):
        out = repair_cardinality(np.zeros(5, np.uint8), 3,
                                 np.random.default_rng(1))
        assert out.sum() == 3

    def test_deterministic_under_fixed_seed(self):
        pop = (np.random.default_rng(5).random((20, 12)) < 0.5).astype(np.uint8)
        a = repair_cardinality_pop(pop.copy(), 4, np.random.default_rng(9))
        b = repair_cardinality_pop(pop.copy(), 4, np.random.default_rng(9))
        assert np.array_equal(a, b)
        assert (a.sum(axis=1) == 4).all()

    def test_surplus_keeps_subset_of_existing_ones(self, rng):
        pop = np.ones((10, 8), np.uint8)
        out = repair_cardinality_pop(pop, 3, np.random.default_rng(2))
        assert (out.sum(axis=1) == 3).all()
        assert (out <= pop).all()

    def test_impossible_cardinality_rejected(self):
        with pytest.raises(ConfigurationError):
            repair_cardinality(np.zeros(3, np.uint8), 4, np.random.default_rng(0))


class TestSolveMacro:
    def test_saturated_coverage_reports_max(self):
        # existing stations already cover both demands; any feasible subset
        # attains the same maximal fitness
        p = simple_problem([(0, 0), (7, 0)], [2, 3],
                           [(2.5, 0), (4.5, 0), (0, 2.5), (7, 2.5)],
                           existing_xy=[(0, 0), (7, 0)], n_new=2)
        plan, result = solve_macro(p, EAParams(pop_size=20, generations=30, seed=4))
        assert plan.total_covered_demand == 5.0

    def test_tiny_instance_matches_brute_force(self):
        from firesite.oracle import brute_force_macro
        for seed in (0, 1, 2):
            p = tiny_macro_problem(seed, n_candidates=12, n_new=2)
            exact = brute_force_macro(p)
            plan, _ = solve_macro(p, EAParams(pop_size=40, generations=80,
                                              mutation_prob=0.05, seed=seed))
            assert exact.feasible
            assert plan.feasible
            assert plan.total_covered_demand == pytest.approx(exact.best_fitness)

    def test_unbounded_distances_reduce_to_plain_mcp(self, rng):
        demand_xy = rng.uniform(0, 6, size=(8, 2))
        a = rng.integers(1, 5, size=8).astype(float)
        cand_xy = rng.uniform(0, 6, size=(6, 2))
        p = simple_problem(demand_xy, a, cand_xy, n_new=2, d_s1=0.0, d_h=np.inf)
        plan, _ = solve_macro(p, EAParams(pop_size=30, generations=60,
                                          mutation_prob=0.05, seed=1))
        best = max(macro_fitness(c, p)
                   for c in itertools.combinations(range(6), 2))
        assert plan.total_covered_demand == pytest.approx(best)

    def test_feasible_plans_verify_by_recomputation(self):
        p = tiny_macro_problem(7, n_candidates=12, n_new=2)
        plan, _ = solve_macro(p, EAParams(pop_size=30, generations=50, seed=3))
        if plan.feasible:
            sel = list(plan.selected_idx)
            assert len(sel) == p.n_new
            stations = np.concatenate(
                [p.d_jj[np.ix_(sel, sel)], p.d_jphi[sel]], axis=1)
            for row_idx, j in enumerate(sel):
                row = stations[row_idx].copy()
                row[row_idx] = np.inf  # self-distance inside the selected block
                dn = row.min()
                assert D_S1 <= dn <= D_H

    def test_trace_and_plan_consistent(self):
        p = tiny_macro_problem(11, n_candidates=10, n_new=2)
        plan, result = solve_macro(p, EAParams(pop_size=20, generations=25, seed=0))
        assert result.trace_fitness[-1] == pytest.approx(plan.total_covered_demand)
        assert (np.diff(result.trace_fitness) >= 0).all()
        rebuilt = plan_from_chromosome(result.best.chromosome, p)
        assert rebuilt.selected_ids == plan.selected_ids
