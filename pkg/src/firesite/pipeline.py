"""End-to-end orchestration: risk -> sizing -> macro candidates -> macro
solve -> micro candidates -> workload calibration -> micro solve ->
indicators -> representative selection.

Every stage persists its inputs/outputs under the run directory, stage
seeds derive from the single run seed with fixed offsets, and a manifest
records seeds, the config hash, stage order and every file's digest, so a
rerun with the same inputs is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import formats, risk, sizing
from .errors import ValidationError
from .evolutionary import GAResult, NSGA2Result
from .formats import Instance, RunConfig, write_csv, write_json
from .geometry import PointSet
from .macro import MacroPlan, MacroProblem, solve_macro
from .metrics import ParetoArchive, hypervolume, nadir_point, spacing, coverage_report
from .micro import MicroProblem, WorkloadCalibration, calibrate_workload, solve_micro
from .selection import RepresentativeSet, pick_representatives

STAGES = ("risk", "sizing", "macro-candidates", "solve-macro",
          "micro-candidates", "calibrate", "solve-micro", "metrics", "select")

# fixed offsets from the run seed; calibration run i adds i to its base
SEED_OFFSET_MACRO = 0
SEED_OFFSET_CALIBRATE = 1


def seed_plan(config: RunConfig) -> dict:
    base = int(config.seed)
    return {
        "run": base,
        "macro": base + SEED_OFFSET_MACRO,
        "calibrate_base": base + SEED_OFFSET_CALIBRATE,
        "micro": base + SEED_OFFSET_CALIBRATE + config.m_runs,
    }


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    out_dir: Path
    feasible: bool
    a: np.ndarray = None
    bounds: sizing.DistanceBounds = None
    n_new: int = None
    macro_plan: MacroPlan = None
    macro_result: GAResult = None
    anchors: PointSet = None
    micro_problem: MicroProblem = None
    calibration: WorkloadCalibration = None
    micro_result: NSGA2Result = None
    representatives: RepresentativeSet = None
    files: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# individual stages (each persists what it produced)
# ---------------------------------------------------------------------------

def stage_risk(inst: Instance, config: RunConfig, out: Path) -> np.ndarray:
    if inst.a is not None:
        a = np.asarray(inst.a, dtype=float)
        rows = [(pid, None, None, v) for pid, v in zip(inst.demand.ids, a)]
    else:
        r_a, r_p, a = risk.risk_table(inst.accidents, inst.density,
                                      k=config.risk_classes, gamma=config.gamma)
        rows = [(pid, int(ra), int(rp), v)
                for pid, ra, rp, v in zip(inst.demand.ids, r_a, r_p, a)]
    write_csv(out / "risk.csv", ["id", "r_a", "r_p", "a"], rows)
    return a


def load_risk(out: Path, inst: Instance) -> np.ndarray:
    _, rows = formats.read_csv(out / "risk.csv")
    by_id = {r[0]: float(r[3]) for r in rows}
    try:
        return np.array([by_id[pid] for pid in inst.demand.ids])
    except KeyError as e:
        raise ValidationError(f"risk.csv is missing community {e}") from e


def stage_sizing(inst: Instance, config: RunConfig, out: Path):
    sz = config.sizing
    r1 = sz.resolved_r1()
    sam = sz.resolved_sam()
    d_s1, d_h = sizing.macro_bounds(r1, sz.epsilon, sz.max_overlap)
    d_s2, d_l2 = sizing.micro_bounds(r1, sz.r2, sz.epsilon)
    bounds = sizing.DistanceBounds(d_s1=d_s1, d_h=d_h, d_s2=d_s2, d_l2=d_l2)

    tar = sz.tar if sz.tar is not None else inst.area_km2
    n_existing = sz.n_existing if sz.n_existing is not None else len(inst.existing)
    if config.n_new_macro is not None:
        n_new = int(config.n_new_macro)
        n_area = None
    else:
        if tar is None:
            raise ValidationError("no region area: set sizing.tar or area_km2 "
                                  "in the instance, or pass n_new_macro")
        n_area = sizing.station_count_by_area(tar, n_existing, sam)
        n_new = n_area
    n_cost = None
    cost_applicable = None
    if sz.sc is not None and sz.tlc is not None:
        n_cost = sizing.station_count_by_cost(sz.sc, sz.tlc, sz.cost_offset)
        cost_applicable = n_cost > 0
    if n_new < 1:
        raise ValidationError(f"computed new-station count {n_new}; nothing to site")

    write_json({
        "r1": r1, "r2": sz.r2, "service_area_macro": sizing.circular_service_area(r1),
        "d_s1": d_s1, "d_h": d_h, "d_s2": d_s2, "d_l2": d_l2,
        "tar": tar, "n_existing": n_existing,
        "n_new_by_area": n_area, "n_new_by_cost": n_cost,
        "cost_rule_applicable": cost_applicable, "n_new": n_new,
    }, out / "sizing.json")
    return r1, bounds, n_new


def _candidate_pool(inst: Instance, config: RunConfig, tier: str) -> PointSet:
    explicit = inst.macro_candidates if tier == "macro" else inst.micro_candidates
    if explicit is not None:
        return explicit
    if inst.network is None:
        raise ValidationError(f"no {tier} candidates and no road network to "
                              "generate them from")
    return sizing.generate_candidates(inst.network,
                                      spacing_m=config.candidate_spacing_m,
                                      clearance_m=config.candidate_clearance_m,
                                      include_interior=(tier == "macro"))


def stage_macro_candidates(inst: Instance, config: RunConfig,
                           bounds: sizing.DistanceBounds, out: Path) -> PointSet:
    pool = _candidate_pool(inst, config, "macro")
    if len(inst.existing):
        pool = sizing.annulus_filter(pool, inst.existing, bounds.d_s1, bounds.d_h)
    if len(pool) == 0:
        raise ValidationError("macro candidate pool is empty after ring filtering")
    write_json({"points": formats._points_to_json(pool)}, out / "macro_candidates.json")
    return pool


def load_points(path: Path, what: str) -> PointSet:
    import json
    with open(path, encoding="utf-8") as fh:
        return formats._points_from_json(json.load(fh)["points"], what)


def stage_solve_macro(inst: Instance, config: RunConfig, a: np.ndarray,
                      candidates: PointSet, r1: float,
                      bounds: sizing.DistanceBounds, n_new: int, out: Path):
    problem = MacroProblem.build(inst.demand, a, candidates, inst.existing,
                                 r1=r1, d_s1=bounds.d_s1, d_h=bounds.d_h,
                                 n_new=n_new, metric=config.metric,
                                 network=inst.network,
                                 all_pairs=config.all_pairs_macro)
    params = replace(config.macro_ea, seed=seed_plan(config)["macro"])
    plan, result = solve_macro(problem, params)

    write_json({
        "selected": list(plan.selected_ids),
        "covered": list(plan.covered_ids),
        "fitness": plan.total_covered_demand,
        "violation": plan.violation,
        "feasible": plan.feasible,
    }, out / "macro_plan.json")
    write_csv(out / "macro_trace.csv", ["generation", "best_fitness", "feasible"],
              [(g, f, bool(ok)) for g, (f, ok) in
               enumerate(zip(result.trace_fitness, result.trace_feasible))])

    sel_xy = candidates.xy[list(plan.selected_idx)]
    selected_ids = plan.selected_ids
    if set(selected_ids) & set(inst.existing.ids):
        # ids are only unique per instance section; disambiguate on collision
        selected_ids = tuple(f"new:{pid}" for pid in selected_ids)
    anchors = PointSet(
        ids=inst.existing.ids + selected_ids,
        xy=np.concatenate([inst.existing.xy.reshape(-1, 2), sel_xy]))
    write_json({"points": formats._points_to_json(anchors)}, out / "anchors.json")
    return problem, plan, result, anchors


def stage_micro_candidates(inst: Instance, config: RunConfig, anchors: PointSet,
                           bounds: sizing.DistanceBounds, out: Path) -> PointSet:
    pool = _candidate_pool(inst, config, "micro")
    pool = sizing.annulus_filter(pool, anchors, bounds.d_s2, bounds.d_l2)
    if len(pool) == 0:
        raise ValidationError("micro candidate pool is empty after ring filtering")
    write_json({"points": formats._points_to_json(pool)}, out / "micro_candidates.json")
    return pool


def _archive_rows(archive: ParetoArchive, candidate_ids, with_load=None):
    rows = []
    for k, (obj, chrom) in enumerate(zip(archive.objectives, archive.chromosomes)):
        sites = ";".join(candidate_ids[j] for j in np.flatnonzero(chrom))
        row = [k, obj[0], obj[1], obj[2]]
        if with_load is not None:
            row.append(with_load[k])
        row += [archive.feasible, sites]
        rows.append(row)
    return rows


def stage_calibrate(problem: MicroProblem, config: RunConfig, out: Path) -> WorkloadCalibration:
    params = replace(config.micro_ea, seed=seed_plan(config)["calibrate_base"])
    calib = calibrate_workload(problem, params, m_runs=config.m_runs)
    write_json({
        "s": calib.s,
        "requested_runs": calib.requested_runs,
        "included_runs": calib.included_runs,
        "run_seeds": list(calib.run_seeds),
        "run_max_workload": list(calib.run_max_workload),
    }, out / "calibration.json")
    write_csv(out / "calibration_runs.csv", ["run", "seed", "max_mean_workload"],
              [(i, s, m) for i, (s, m) in
               enumerate(zip(calib.run_seeds, calib.run_max_workload))])
    for i, (arch, loads) in enumerate(zip(calib.archives, calib.per_run_workloads)):
        write_csv(out / f"calibration_run_{i}.csv",
                  ["solution", "f1", "f2", "f3", "mean_workload", "feasible", "sites"],
                  _archive_rows(arch, problem.candidate_ids, with_load=list(loads)))
    return calib


def stage_solve_micro(problem: MicroProblem, config: RunConfig, out: Path) -> NSGA2Result:
    params = replace(config.micro_ea, seed=seed_plan(config)["micro"])
    result = solve_micro(problem, params)
    write_csv(out / "micro_archive.csv",
              ["solution", "f1", "f2", "f3", "feasible", "sites"],
              _archive_rows(result.archive, problem.candidate_ids))
    gen_rows = []
    for arch in result.generations:
        if not arch.feasible:
            continue
        for k, obj in enumerate(arch.objectives):
            gen_rows.append((arch.generation, k, obj[0], obj[1], obj[2]))
    write_csv(out / "micro_generations.csv",
              ["generation", "solution", "f1", "f2", "f3"], gen_rows)
    return result


def indicator_table(fronts: dict[int, np.ndarray], normalize: bool = False):
    """Per-generation front size, nadir-referenced hypervolume, spacing and
    the fixed-reference hypervolume of the cumulative elitist archive."""
    gens = sorted(fronts)
    all_pts = np.concatenate([fronts[g] for g in gens])
    if normalize:
        lo = all_pts.min(axis=0)
        rng = all_pts.max(axis=0) - lo
        rng[rng == 0] = 1.0
        fronts = {g: (fronts[g] - lo) / rng for g in gens}
        all_pts = (all_pts - lo) / rng
    global_ref = nadir_point(all_pts)

    from .metrics import merge_nondominated

    rows = []
    cumulative = np.empty((0, all_pts.shape[1]))
    for g in gens:
        front = fronts[g]
        hv_nadir = hypervolume(front, nadir_point(front))
        sp = spacing(front)
        cumulative = merge_nondominated(cumulative, front)
        hv_fixed = hypervolume(cumulative, global_ref)
        rows.append((g, front.shape[0], hv_nadir, sp, hv_fixed))
    return rows


def stage_metrics(result: NSGA2Result, config: RunConfig, out: Path):
    fronts = {arch.generation: np.asarray(arch.objectives, dtype=float)
              for arch in result.generations if arch.feasible and len(arch)}
    if not fronts:
        write_csv(out / "metrics.csv",
                  ["generation", "front_size", "hv_nadir", "spacing", "hv_fixed"], [])
        return []
    rows = indicator_table(fronts, normalize=config.normalize_indicators)
    write_csv(out / "metrics.csv",
              ["generation", "front_size", "hv_nadir", "spacing", "hv_fixed"], rows)
    return rows


def stage_select(inst: Instance, config: RunConfig, a: np.ndarray,
                 archive: ParetoArchive, micro_candidates: PointSet,
                 macro_plan: MacroPlan, macro_candidates: PointSet,
                 r1: float, out: Path) -> RepresentativeSet:
    reps = pick_representatives(archive)

    macro_xy = np.concatenate([
        inst.existing.xy.reshape(-1, 2),
        macro_candidates.xy[list(macro_plan.selected_idx)]])
    macro_ids = list(inst.existing.ids) + list(macro_plan.selected_ids)
    if len(set(macro_ids)) != len(macro_ids):
        macro_ids = (list(inst.existing.ids)
                     + [f"new:{pid}" for pid in macro_plan.selected_ids])

    rows = []
    for plan in reps.plans():
        sel = np.flatnonzero(plan.chromosome)
        tiers = [(macro_xy, r1, macro_ids),
                 (micro_candidates.xy[sel], config.sizing.r2,
                  [micro_candidates.ids[j] for j in sel])]
        report = coverage_report(
            inst.demand.xy, a, tiers,
            incidents_xy=None if inst.incidents is None else inst.incidents.xy,
            high_risk_threshold=config.high_risk_threshold)
        sites = ";".join(micro_candidates.ids[j] for j in sel)
        rows.append((plan.label, plan.index,
                     plan.objectives[0], plan.objectives[1], plan.objectives[2],
                     report.high_risk_rate, report.demand_rate,
                     report.incident_rate, sites))
        geo = [(micro_candidates.ids[j], micro_candidates.xy[j, 0],
                micro_candidates.xy[j, 1], "micro") for j in sel]
        geo += [(mid, x, y, "macro") for mid, (x, y) in zip(macro_ids, macro_xy)]
        write_json(formats.points_geojson(geo), out / f"representative_{plan.label}.geojson")

    write_csv(out / "representatives.csv",
              ["solution", "archive_index", "f1", "f2", "f3",
               "high_risk_rate", "demand_rate", "incident_rate", "sites"], rows)
    return reps


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------

def run_pipeline(inst: Instance, config: RunConfig, out_dir: str | Path) -> PipelineResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = PipelineResult(out_dir=out, feasible=True)
    stage = "risk"
    try:
        res.a = stage_risk(inst, config, out)

        stage = "sizing"
        r1, res.bounds, res.n_new = stage_sizing(inst, config, out)

        stage = "macro-candidates"
        macro_cands = stage_macro_candidates(inst, config, res.bounds, out)

        stage = "solve-macro"
        _, res.macro_plan, res.macro_result, res.anchors = stage_solve_macro(
            inst, config, res.a, macro_cands, r1, res.bounds, res.n_new, out)
        res.feasible &= res.macro_plan.feasible

        stage = "micro-candidates"
        micro_cands = stage_micro_candidates(inst, config, res.anchors, res.bounds, out)

        stage = "calibrate"
        base_problem = MicroProblem.build(
            inst.demand, res.a, micro_cands, res.anchors,
            r2=config.sizing.r2, d_s2=res.bounds.d_s2, d_l2=res.bounds.d_l2,
            metric=config.metric, network=inst.network)
        if config.workload_cap is not None:
            calib = None
            cap = float(config.workload_cap)
            write_json({"s": cap, "requested_runs": 0, "included_runs": 0,
                        "run_seeds": [], "run_max_workload": [],
                        "source": "config override"}, out / "calibration.json")
        else:
            calib = stage_calibrate(base_problem, config, out)
            cap = calib.s
        res.calibration = calib

        stage = "solve-micro"
        res.micro_problem = base_problem.with_cap(cap)
        res.micro_result = stage_solve_micro(res.micro_problem, config, out)
        res.feasible &= res.micro_result.feasible

        stage = "metrics"
        stage_metrics(res.micro_result, config, out)

        stage = "select"
        if res.micro_result.feasible:
            res.representatives = stage_select(
                inst, config, res.a, res.micro_result.archive, micro_cands,
                res.macro_plan, macro_cands, r1, out)
        else:
            # nothing representative to pick from an infeasible fallback
            write_csv(out / "representatives.csv",
                      ["solution", "archive_index", "f1", "f2", "f3",
                       "high_risk_rate", "demand_rate", "incident_rate", "sites"], [])
    except Exception as e:
        raise StageError(stage, e) from e

    manifest = {
        "schema_version": formats.SCHEMA_VERSION,
        "stages": list(STAGES),
        "seeds": seed_plan(config),
        "config_hash": config.config_hash(),
        "feasible": res.feasible,
        "files": {},
    }
    for p in sorted(out.glob("*")):
        if p.name != "manifest.json" and p.is_file():
            manifest["files"][p.name] = formats.file_sha256(p)
    write_json(manifest, out / "manifest.json")
    res.files = manifest["files"]
    return res
