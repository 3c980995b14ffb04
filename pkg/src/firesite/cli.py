"""Command-line interface.

Stage subcommands reuse artifacts already present in the run directory and
compute (then persist) whatever upstream pieces are missing, so a stage run
standalone matches its in-pipeline output. Exit codes: 0 success, 2
validation error, 3 result flagged infeasible, 4 oracle guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats, risk as risk_mod, sizing as sizing_mod
from .errors import (CalibrationError, GuardExceededError,
                     InfeasibleResultError, ValidationError)
from .formats import RunConfig, load_config, load_instance, write_csv, write_json
from .geometry import PointSet
from .macro import MacroPlan, MacroProblem
from .metrics import ParetoArchive
from .micro import MicroProblem
from .oracle import brute_force_macro, exact_pareto_micro
from .pipeline import (StageError, indicator_table, load_points, load_risk,
                       run_pipeline, stage_calibrate, stage_macro_candidates,
                       stage_metrics, stage_micro_candidates, stage_risk,
                       stage_select, stage_sizing, stage_solve_macro,
                       stage_solve_micro)
from .synth import PROFILES, generate_synthetic

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_GUARD = 4


def _common(parser: argparse.ArgumentParser, out_default="run"):
    parser.add_argument("--config", help="run configuration JSON or TOML")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", default=out_default, help="run directory")
    parser.add_argument("--tiny", action="store_true",
                        help="keep sizes inside the exact-oracle guards")


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    return cfg


# ---------------------------------------------------------------------------
# artifact resolution for standalone stage commands
# ---------------------------------------------------------------------------

def _resolve_risk(inst, cfg, out: Path) -> np.ndarray:
    if (out / "risk.csv").exists():
        return load_risk(out, inst)
    return stage_risk(inst, cfg, out)


def _resolve_macro_candidates(inst, cfg, bounds, out: Path) -> PointSet:
    path = out / "macro_candidates.json"
    if path.exists():
        return load_points(path, "macro candidate")
    return stage_macro_candidates(inst, cfg, bounds, out)


def _load_macro_plan(out: Path, candidates: PointSet) -> MacroPlan:
    with open(out / "macro_plan.json", encoding="utf-8") as fh:
        doc = json.load(fh)
    index = {pid: k for k, pid in enumerate(candidates.ids)}
    return MacroPlan(selected_ids=tuple(doc["selected"]),
                     selected_idx=tuple(index[p] for p in doc["selected"]),
                     covered_ids=tuple(doc["covered"]),
                     total_covered_demand=float(doc["fitness"]),
                     violation=float(doc["violation"]))


def _resolve_macro_plan(inst, cfg, a, candidates, r1, bounds, n_new, out: Path):
    if (out / "macro_plan.json").exists() and (out / "anchors.json").exists():
        plan = _load_macro_plan(out, candidates)
        anchors = load_points(out / "anchors.json", "anchor")
        return plan, anchors
    _, plan, _, anchors = stage_solve_macro(inst, cfg, a, candidates, r1,
                                            bounds, n_new, out)
    return plan, anchors


def _resolve_micro_candidates(inst, cfg, anchors, bounds, out: Path) -> PointSet:
    path = out / "micro_candidates.json"
    if path.exists():
        return load_points(path, "micro candidate")
    return stage_micro_candidates(inst, cfg, anchors, bounds, out)


def _micro_problem(inst, cfg, a, out: Path) -> MicroProblem:
    r1, bounds, n_new = stage_sizing(inst, cfg, out)
    macro_cands = _resolve_macro_candidates(inst, cfg, bounds, out)
    plan, anchors = _resolve_macro_plan(inst, cfg, a, macro_cands, r1,
                                        bounds, n_new, out)
    micro_cands = _resolve_micro_candidates(inst, cfg, anchors, bounds, out)
    problem = MicroProblem.build(inst.demand, a, micro_cands, anchors,
                                 r2=cfg.sizing.r2, d_s2=bounds.d_s2,
                                 d_l2=bounds.d_l2, metric=cfg.metric,
                                 network=inst.network)
    return problem, plan, macro_cands, micro_cands, r1


def _read_archive_csv(path: Path, candidate_ids) -> ParetoArchive:
    index = {pid: k for k, pid in enumerate(candidate_ids)}
    _, rows = formats.read_csv(path)
    objs, chroms, feasible = [], [], True
    for row in rows:
        objs.append([float(row[1]), float(row[2]), float(row[3])])
        feasible = row[4] == "True"
        chrom = np.zeros(len(candidate_ids), dtype=np.uint8)
        if row[5]:
            chrom[[index[s] for s in row[5].split(";")]] = 1
        chroms.append(chrom)
    return ParetoArchive(generation=-1, objectives=np.asarray(objs),
                         chromosomes=np.asarray(chroms), feasible=feasible)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_risk(args) -> int:
    cfg = _load_cfg(args)
    header, rows = formats.read_csv(args.input)
    want = ["id", "accidents", "density"]
    if [h.strip() for h in header[:3]] != want:
        raise ValidationError(f"risk input must have columns {want}")
    try:
        ids = [r[0] for r in rows]
        acc = [int(r[1]) for r in rows]
        dens = [float(r[2]) for r in rows]
    except (ValueError, IndexError) as e:
        raise ValidationError(f"bad risk input row: {e}") from e
    r_a, r_p, a = risk_mod.risk_table(acc, dens, k=cfg.risk_classes, gamma=cfg.gamma)
    write_csv(args.output, ["id", "r_a", "r_p", "a"],
              [(i, int(x), int(y), v) for i, x, y, v in zip(ids, r_a, r_p, a)])
    print(f"wrote {args.output} ({len(ids)} communities)")
    return EXIT_OK


def cmd_size(args) -> int:
    cfg = _load_cfg(args)
    sz = cfg.sizing
    r1 = sz.resolved_r1()
    sam = sz.resolved_sam()
    d_s1, d_h = sizing_mod.macro_bounds(r1, sz.epsilon, sz.max_overlap)
    d_s2, d_l2 = sizing_mod.micro_bounds(r1, sz.r2, sz.epsilon)
    print(f"macro service radius R1 = {r1:.4f} km")
    print(f"micro service radius R2 = {sz.r2:.4f} km")
    print(f"macro service area      = {sam:.4f} km^2")
    print(f"adjacent-macro bounds   = [{d_s1:.4f}, {d_h:.4f}] km")
    print(f"micro-to-macro bounds   = [{d_s2:.4f}, {d_l2:.4f}] km")
    if sz.tar is not None and sz.n_existing is not None:
        n = sizing_mod.station_count_by_area(sz.tar, sz.n_existing, sam)
        print(f"new macro stations (area rule) = {n}")
    if sz.sc is not None and sz.tlc is not None:
        n_cost = sizing_mod.station_count_by_cost(sz.sc, sz.tlc, sz.cost_offset)
        note = "" if n_cost > 0 else "  (inapplicable, falling back to area rule)"
        print(f"new macro stations (cost rule) = {n_cost}{note}")
    return EXIT_OK


def cmd_candidates(args) -> int:
    cfg = _load_cfg(args)
    with open(args.network, encoding="utf-8") as fh:
        doc = json.load(fh)
    net = formats._network_from_json(doc.get("road_network", doc))
    pts = sizing_mod.generate_candidates(
        net, spacing_m=args.spacing, clearance_m=args.clearance,
        include_interior=(args.tier == "macro"))
    write_json({"points": formats._points_to_json(pts)}, args.output)
    print(f"wrote {args.output} ({len(pts)} {args.tier} candidates)")
    return EXIT_OK


def cmd_solve_macro(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    a = _resolve_risk(inst, cfg, out)
    r1, bounds, n_new = stage_sizing(inst, cfg, out)
    cands = _resolve_macro_candidates(inst, cfg, bounds, out)
    _, plan, _, _ = stage_solve_macro(inst, cfg, a, cands, r1, bounds, n_new, out)
    print(f"macro plan: {len(plan.selected_ids)} stations, "
          f"fitness {plan.total_covered_demand}, feasible {plan.feasible}")
    return EXIT_OK if plan.feasible else EXIT_INFEASIBLE


def cmd_calibrate(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    a = _resolve_risk(inst, cfg, out)
    problem, _, _, _, _ = _micro_problem(inst, cfg, a, out)
    calib = stage_calibrate(problem, cfg, out)
    print(f"workload cap S = {calib.s} from {calib.included_runs} runs")
    return EXIT_OK


def cmd_solve_micro(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    a = _resolve_risk(inst, cfg, out)
    problem, _, _, micro_cands, _ = _micro_problem(inst, cfg, a, out)
    if args.cap is not None:
        cap = float(args.cap)
    elif cfg.workload_cap is not None:
        cap = float(cfg.workload_cap)
    elif (out / "calibration.json").exists():
        with open(out / "calibration.json", encoding="utf-8") as fh:
            cap = float(json.load(fh)["s"])
    else:
        cap = stage_calibrate(problem, cfg, out).s
    result = stage_solve_micro(problem.with_cap(cap), cfg, out)
    stage_metrics(result, cfg, out)
    if args.geojson:
        for k, chrom in enumerate(result.archive.chromosomes):
            pts = [(micro_cands.ids[j], micro_cands.xy[j, 0],
                    micro_cands.xy[j, 1], "micro")
                   for j in np.flatnonzero(chrom)]
            write_json(formats.points_geojson(pts), out / f"plan_{k}.geojson")
    print(f"micro archive: {len(result.archive)} plans, feasible {result.feasible}")
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_metrics(args) -> int:
    cfg = _load_cfg(args)
    _, rows = formats.read_csv(args.fronts)
    fronts: dict[int, list] = {}
    try:
        for row in rows:
            fronts.setdefault(int(row[0]), []).append(
                [float(row[2]), float(row[3]), float(row[4])])
    except (ValueError, IndexError) as e:
        raise ValidationError(f"bad front row in {args.fronts}: {e}") from e
    if not fronts:
        raise ValidationError(f"{args.fronts} holds no front points")
    table = indicator_table({g: np.asarray(v) for g, v in fronts.items()},
                            normalize=cfg.normalize_indicators or args.normalize)
    write_csv(args.output, ["generation", "front_size", "hv_nadir", "spacing", "hv_fixed"],
              table)
    print(f"wrote {args.output} ({len(table)} generations)")
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    out = Path(args.out)
    a = _resolve_risk(inst, cfg, out)
    r1, bounds, n_new = stage_sizing(inst, cfg, out)
    macro_cands = _resolve_macro_candidates(inst, cfg, bounds, out)
    plan, anchors = _resolve_macro_plan(inst, cfg, a, macro_cands, r1,
                                        bounds, n_new, out)
    micro_cands = _resolve_micro_candidates(inst, cfg, anchors, bounds, out)
    archive_path = Path(args.archive) if args.archive else out / "micro_archive.csv"
    archive = _read_archive_csv(archive_path, micro_cands.ids)
    reps = stage_select(inst, cfg, a, archive, micro_cands, plan,
                        macro_cands, r1, out)
    for p in reps.plans():
        print(f"{p.label}: F1={p.objectives[0]} F2={p.objectives[1]} "
              f"F3={p.objectives[2]}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    a = _resolve_risk(inst, cfg, out)
    r1, bounds, n_new = stage_sizing(inst, cfg, out)
    if args.tier == "macro":
        cands = _resolve_macro_candidates(inst, cfg, bounds, out)
        problem = MacroProblem.build(inst.demand, a, cands, inst.existing,
                                     r1=r1, d_s1=bounds.d_s1, d_h=bounds.d_h,
                                     n_new=n_new, metric=cfg.metric,
                                     network=inst.network,
                                     all_pairs=cfg.all_pairs_macro)
        result = brute_force_macro(problem)
        rows = [(k, result.best_fitness, result.feasible,
                 ";".join(cands.ids[j] for j in subset))
                for k, subset in enumerate(result.best_subsets)]
        write_csv(out / "oracle_macro.csv",
                  ["solution", "fitness", "feasible", "sites"], rows)
        print(f"enumerated {result.enumerated} subsets in {result.wall_time:.2f}s; "
              f"optimum {result.best_fitness}", file=sys.stderr)
    else:
        problem, _, _, micro_cands, _ = _micro_problem(inst, cfg, a, out)
        if args.cap is not None:
            problem = problem.with_cap(float(args.cap))
        elif (out / "calibration.json").exists():
            with open(out / "calibration.json", encoding="utf-8") as fh:
                problem = problem.with_cap(float(json.load(fh)["s"]))
        result = exact_pareto_micro(problem)
        rows = [(k, o[0], o[1], o[2], result.feasible,
                 ";".join(micro_cands.ids[j] for j in subset))
                for k, (o, subset) in enumerate(zip(result.front_objectives,
                                                    result.front_subsets))]
        write_csv(out / "oracle_micro.csv",
                  ["solution", "f1", "f2", "f3", "feasible", "sites"], rows)
        print(f"enumerated {result.enumerated} subsets in {result.wall_time:.2f}s; "
              f"front size {result.front_objectives.shape[0]}", file=sys.stderr)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_synth(args) -> int:
    profile = "tiny" if args.tiny else args.profile
    inst = generate_synthetic(n_communities=args.communities,
                              seed=args.seed if args.seed is not None else 0,
                              profile=profile)
    formats.save_instance(inst, args.output)
    n_ma = len(inst.macro_candidates) if inst.macro_candidates else 0
    n_mi = len(inst.micro_candidates) if inst.micro_candidates else 0
    print(f"wrote {args.output}: {len(inst.demand)} communities, "
          f"{n_ma} macro / {n_mi} micro candidates, "
          f"{len(inst.existing)} existing stations")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_cfg(args)
    inst = load_instance(args.instance)
    res = run_pipeline(inst, cfg, args.out)
    print(f"pipeline complete in {res.out_dir}; feasible={res.feasible}")
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firesite",
                                description="two-tier emergency station siting")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("risk", help="rank and fuse community risk attributes")
    _common(s)
    s.add_argument("--input", required=True, help="CSV: id,accidents,density")
    s.add_argument("--output", required=True, help="CSV: id,r_a,r_p,a")
    s.set_defaults(fn=cmd_risk)

    s = sub.add_parser("size", help="print radii, bounds and station counts")
    _common(s)
    s.set_defaults(fn=cmd_size)

    s = sub.add_parser("candidates", help="generate candidate sites from a road network")
    _common(s)
    s.add_argument("--network", required=True, help="road network JSON")
    s.add_argument("--tier", choices=["macro", "micro"], required=True)
    s.add_argument("--spacing", type=float, default=200.0, help="interior spacing, m")
    s.add_argument("--clearance", type=float, default=50.0, help="junction clearance, m")
    s.add_argument("--output", required=True)
    s.set_defaults(fn=cmd_candidates)

    s = sub.add_parser("solve-macro", help="site macro stations with the elitist GA")
    _common(s)
    s.add_argument("--instance", required=True)
    s.set_defaults(fn=cmd_solve_macro)

    s = sub.add_parser("calibrate", help="estimate the micro workload cap")
    _common(s)
    s.add_argument("--instance", required=True)
    s.set_defaults(fn=cmd_calibrate)

    s = sub.add_parser("solve-micro", help="site micro stations with NSGA-II")
    _common(s)
    s.add_argument("--instance", required=True)
    s.add_argument("--cap", type=float, help="workload cap override")
    s.add_argument("--geojson", action="store_true",
                   help="also write plan_<k>.geojson per archived plan")
    s.set_defaults(fn=cmd_solve_micro)

    s = sub.add_parser("metrics", help="per-generation HV and spacing from front CSVs")
    _common(s)
    s.add_argument("--fronts", required=True, help="micro_generations.csv")
    s.add_argument("--output", required=True)
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(fn=cmd_metrics)

    s = sub.add_parser("select", help="pick the A/B/C/D representative plans")
    _common(s)
    s.add_argument("--instance", required=True)
    s.add_argument("--archive", help="archive CSV (default: <out>/micro_archive.csv)")
    s.set_defaults(fn=cmd_select)

    s = sub.add_parser("oracle", help="exact enumeration on small instances")
    _common(s)
    s.add_argument("--instance", required=True)
    s.add_argument("--tier", choices=["macro", "micro"], required=True)
    s.add_argument("--cap", type=float, help="micro workload cap")
    s.set_defaults(fn=cmd_oracle)

    s = sub.add_parser("synth", help="generate a seeded synthetic instance")
    _common(s)
    s.add_argument("--communities", type=int, default=30)
    s.add_argument("--profile", choices=list(PROFILES), default="demo")
    s.add_argument("--output", default="instance.json")
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("pipeline", help="run every stage end to end")
    _common(s)
    s.add_argument("--instance", required=True)
    s.set_defaults(fn=cmd_pipeline)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageError as e:
        cause = e.cause
        print(f"error: {e}", file=sys.stderr)
        if isinstance(cause, ValidationError):
            return EXIT_VALIDATION
        if isinstance(cause, GuardExceededError):
            return EXIT_GUARD
        if isinstance(cause, (InfeasibleResultError, CalibrationError)):
            return EXIT_INFEASIBLE
        raise
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except GuardExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (InfeasibleResultError, CalibrationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
