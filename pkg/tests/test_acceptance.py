"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The bundled demo instance and config live under data/ and configs/.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import tiny_macro_problem, tiny_micro_problem
from firesite import formats
from firesite.evolutionary import EAParams
from firesite.macro import solve_macro
from firesite.metrics import hypervolume, spacing
from firesite.micro import solve_micro
from firesite.oracle import brute_force_macro, exact_pareto_micro
from firesite.pipeline import run_pipeline
from firesite.sizing import (circular_service_area, macro_bounds, macro_radius,
                             micro_bounds, station_count_by_area)

ROOT = Path(__file__).resolve().parent.parent


def report(criterion: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {criterion}" + (f" :: {detail}" if detail else ""))
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def demo_runs(tmp_path_factory):
    inst = formats.load_instance(ROOT / "data" / "demo_instance.json")
    cfg_a = formats.load_config(ROOT / "configs" / "demo.json")
    cfg_b = formats.load_config(ROOT / "configs" / "demo.json")
    out_a = tmp_path_factory.mktemp("demo_a")
    out_b = tmp_path_factory.mktemp("demo_b")
    res_a = run_pipeline(inst, cfg_a, out_a)
    res_b = run_pipeline(inst, cfg_b, out_b)
    return res_a, res_b, out_a, out_b


def test_criterion_1_analytic_constants():
    checks = [
        abs(macro_radius(7, 4, 0.7) - 1.746) <= 5e-4,
        abs(circular_service_area(1.746) - 9.58) <= 0.01,
        station_count_by_area(58.995, 4, 9.58) == 3,
        micro_bounds(1.746, 1, 0.05) == (pytest.approx(0.696), pytest.approx(2.796)),
        macro_bounds(1.746, 0.05)[1] == pytest.approx(3.542),
    ]
    report("1 analytic constants", all(checks))


def test_criterion_2_macro_oracle_equivalence():
    optimal, worst_ratio = 0, 1.0
    for seed in range(20):
        problem = tiny_macro_problem(seed, n_candidates=14, n_new=2 + seed % 2)
        exact = brute_force_macro(problem)
        assert exact.feasible
        plan, _ = solve_macro(problem, EAParams(pop_size=100, generations=300,
                                                mutation_prob=1 / 14,
                                                seed=1000 + seed))
        ratio = plan.total_covered_demand / exact.best_fitness
        if plan.feasible and ratio >= 1.0 - 1e-12:
            optimal += 1
        else:
            worst_ratio = min(worst_ratio, ratio)
    ok = optimal >= 18 and worst_ratio >= 0.98
    report("2 macro oracle equivalence", ok,
           f"{optimal}/20 optimal, worst ratio {worst_ratio:.4f}")


def test_criterion_3_micro_oracle_equivalence():
    ok = True
    details = []
    for seed in range(10):
        problem = tiny_micro_problem(seed, n_candidates=12)
        exact = exact_pareto_micro(problem)
        result = solve_micro(problem, EAParams(pop_size=200, generations=250,
                                               mutation_prob=1 / 12,
                                               seed=500 + seed))
        assert exact.feasible and result.feasible
        exact_set = {tuple(o) for o in exact.front_objectives}
        got = {tuple(o) for o in result.archive.objectives}
        false_points = len(got - exact_set)
        coverage = len(got & exact_set) / len(exact_set)
        details.append(f"s{seed}:{coverage:.2f}")
        ok &= false_points == 0 and coverage >= 0.90
    report("3 micro oracle equivalence", ok, " ".join(details))


def test_criterion_4_indicator_correctness():
    ok = hypervolume(np.array([[0.0, 0.5], [0.5, 0.0]]),
                     np.array([1.0, 1.0])) == pytest.approx(0.75)
    ok &= hypervolume(np.array([[0.0, 0.0]]), np.array([1.0, 1.0])) == 1.0
    # inclusion-exclusion: 0.8*0.2 + 0.4*0.7 - 0.4*0.2 overlap
    ok &= hypervolume(np.array([[0.2, 0.8], [0.6, 0.3]]),
                      np.array([1.0, 1.0])) == pytest.approx(0.36)
    for seed in range(4):
        rng = np.random.default_rng(seed)
        front = rng.random((int(rng.integers(2, 9)), 3))
        ref = np.full(3, 1.1)
        exact = hypervolume(front, ref)
        lo = front.min(axis=0)
        box = np.prod(ref - lo)
        samples = rng.uniform(lo, ref, size=(10 ** 6, 3))
        hit = (front[None, :, :] <= samples[:, None, :]).all(axis=2).any(axis=1)
        p = hit.mean()
        se = box * math.sqrt(p * (1 - p) / 10 ** 6)
        ok &= abs(exact - box * p) <= 3 * se + 1e-12
    ok &= spacing(np.array([[0.0], [1.0], [3.0]])) == pytest.approx(
        math.sqrt(1 / 3), abs=1e-9)
    report("4 indicator correctness", bool(ok))


def test_criterion_5_qualitative_convergence(demo_runs):
    res, _, out, _ = demo_runs
    trace = res.macro_result.trace_fitness
    feas = res.macro_result.trace_feasible
    monotone = bool((np.diff(trace) >= 0).all())
    tail = trace[int(0.9 * (len(trace) - 1)):]
    flat = bool((tail == tail[-1]).all())
    _, rows = formats.read_csv(out / "metrics.csv")
    hv_fixed = np.array([float(r[4]) for r in rows])
    hv_monotone = bool((np.diff(hv_fixed) >= -1e-12).all())
    hv_final_near_max = hv_fixed[-1] >= hv_fixed.max() * 0.99
    ok = monotone and flat and bool(feas.all()) and hv_monotone and hv_final_near_max
    report("5 qualitative convergence", ok,
           f"GA monotone={monotone} flat-tail={flat} "
           f"HV monotone={hv_monotone} final/max="
           f"{hv_fixed[-1] / hv_fixed.max():.6f}")


def _macro_feasible_recompute(chrom, p):
    sel = np.flatnonzero(chrom)
    if sel.size != p.n_new:
        return False
    for j in sel:
        dn = np.inf
        for k in sel:
            if k != j:
                dn = min(dn, p.d_jj[j, k])
        for e in range(p.d_jphi.shape[1]):
            dn = min(dn, p.d_jphi[j, e])
        if np.isfinite(dn) and not (p.d_s1 <= dn <= p.d_h):
            return False
    return True


def _micro_feasible_recompute(chrom, p):
    sel = set(np.flatnonzero(chrom).tolist())
    for i in range(len(p.demand_ids)):
        if not any(p.cov[i, j] for j in sel):
            return False
    cap = np.inf if p.cap is None else p.cap
    for j in sel:
        if p.eta_load[j] > cap or p.ring_dev[j] > 0:
            return False
    return True


def test_criterion_6_constraint_integrity_fuzz():
    rng = np.random.default_rng(99)
    macro = tiny_macro_problem(3, n_candidates=14, n_new=3)
    pop = (rng.random((1000, 14)) < rng.uniform(0.05, 0.6, (1000, 1)))
    pop = pop.astype(np.uint8)
    _, viol = macro.evaluate_population(pop)
    ok = all((viol[k] == 0.0) == _macro_feasible_recompute(pop[k], macro)
             for k in range(1000))

    micro = tiny_micro_problem(6, n_candidates=12)
    pop = (rng.random((1000, 12)) < rng.uniform(0.1, 0.9, (1000, 1)))
    pop = pop.astype(np.uint8)
    _, viol = micro.evaluate_population(pop)
    ok &= all((viol[k] == 0.0) == _micro_feasible_recompute(pop[k], micro)
              for k in range(1000))
    report("6 constraint integrity fuzz", bool(ok))


def test_criterion_7_calibration_recomputation(demo_runs):
    res, _, out, _ = demo_runs
    problem = res.micro_problem
    with open(out / "calibration.json", encoding="utf-8") as fh:
        s_reported = json.load(fh)["s"]
    index = {pid: k for k, pid in enumerate(problem.candidate_ids)}
    maxima = []
    run_id = 0
    while (out / f"calibration_run_{run_id}.csv").exists():
        _, rows = formats.read_csv(out / f"calibration_run_{run_id}.csv")
        per_solution = []
        for row in rows:
            sel = [index[s] for s in row[6].split(";")] if row[6] else []
            per_solution.append(problem.eta_load[sel].mean() if sel else 0.0)
        maxima.append(max(per_solution))
        run_id += 1
    recomputed = float(np.mean(maxima))
    ok = recomputed == s_reported
    report("7 calibration recomputation", ok,
           f"reported {s_reported!r} recomputed {recomputed!r}")


def test_criterion_8_pipeline_determinism(demo_runs):
    _, _, out_a, out_b = demo_runs
    names_a = sorted(p.name for p in out_a.iterdir())
    names_b = sorted(p.name for p in out_b.iterdir())
    ok = names_a == names_b
    mismatched = []
    for name in names_a:
        if (out_a / name).read_bytes() != (out_b / name).read_bytes():
            mismatched.append(name)
            ok = False
    report("8 pipeline determinism", ok,
           f"{len(names_a)} files" + (f", mismatched: {mismatched}" if mismatched else ""))
