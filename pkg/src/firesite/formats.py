"""File formats and run configuration.

Instances and plans travel as versioned JSON, tabular outputs as CSV with
documented headers, and geometry exports as GeoJSON whose coordinates stay
in planar kilometers (a crs_note property says so). All writers format
floats with repr so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json

try:
    import tomllib  # py311+
except ModuleNotFoundError:
    import tomli as tomllib

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .evolutionary import EAParams
from .geometry import PointSet
from .sizing import RoadEdge, RoadNetwork, SizingConfig

SCHEMA_VERSION = 1


@dataclass
class Instance:
    """One siting problem: communities, candidate pools, existing stations,
    optional road network and incident points."""

    demand: PointSet
    accidents: np.ndarray | None = None   # (I,) int
    density: np.ndarray | None = None     # (I,) thousand persons / km^2
    a: np.ndarray | None = None           # (I,) precomputed demand values
    macro_candidates: PointSet | None = None
    micro_candidates: PointSet | None = None
    existing: PointSet = field(default_factory=lambda: PointSet((), np.empty((0, 2))))
    network: RoadNetwork | None = None
    incidents: PointSet | None = None
    area_km2: float | None = None

    def __post_init__(self):
        if len(self.demand) == 0:
            raise ValidationError("instance has no demand points")
        if self.a is None and (self.accidents is None or self.density is None):
            raise ValidationError(
                "demand points need either precomputed values or accident "
                "counts plus densities")
        for name in ("accidents", "density", "a"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != len(self.demand):
                raise ValidationError(f"{name} length does not match demand points")


@dataclass
class RunConfig:
    """Solver configuration with the method's standard defaults."""

    sizing: SizingConfig = field(default_factory=SizingConfig)
    macro_ea: EAParams = field(default_factory=lambda: EAParams(seed=0))
    micro_ea: EAParams = field(default_factory=lambda: EAParams(seed=0))
    seed: int = 0
    m_runs: int = 10
    gamma: float = 0.5
    risk_classes: int = 4
    high_risk_threshold: float = 4.0
    candidate_spacing_m: float = 200.0
    candidate_clearance_m: float = 50.0
    n_new_macro: int | None = None      # overrides the area rule when set
    workload_cap: float | None = None   # overrides calibration when set
    all_pairs_macro: bool = False
    metric: str = "euclidean"
    normalize_indicators: bool = False

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(asdict(self)).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------------------
# point sets and instances
# ---------------------------------------------------------------------------

def _points_to_json(ps: PointSet) -> list[dict]:
    return [{"id": i, "x": float(x), "y": float(y)}
            for i, (x, y) in zip(ps.ids, ps.xy)]


def _points_from_json(rows: list[dict], what: str) -> PointSet:
    try:
        ids = tuple(str(r["id"]) for r in rows)
        xy = np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(len(rows), 2)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"bad {what} record: {e}") from e
    try:
        return PointSet(ids=ids, xy=xy)
    except ValueError as e:
        raise ValidationError(f"{what}: {e}") from e


def _network_to_json(net: RoadNetwork) -> dict:
    return {
        "nodes": [{"id": i, "x": float(x), "y": float(y), "terminal": bool(t)}
                  for i, (x, y), t in zip(net.node_ids, net.node_xy, net.terminal)],
        "edges": [{"id": e.id,
                   "endpoints": [net.node_ids[e.u], net.node_ids[e.v]],
                   "polyline": [[float(x), float(y)] for x, y in e.polyline]}
                  for e in net.edges],
    }


def _network_from_json(doc: dict) -> RoadNetwork:
    try:
        node_ids = tuple(str(n["id"]) for n in doc["nodes"])
        node_xy = np.array([[float(n["x"]), float(n["y"])] for n in doc["nodes"]])
        terminal = np.array([bool(n.get("terminal", False)) for n in doc["nodes"]])
        index = {i: k for k, i in enumerate(node_ids)}
        edges = []
        for e in doc["edges"]:
            poly = np.asarray(e["polyline"], dtype=float)
            edges.append(RoadEdge(id=str(e["id"]),
                                  u=index[str(e["endpoints"][0])],
                                  v=index[str(e["endpoints"][1])],
                                  polyline=poly,
                                  length=RoadEdge.arc_length(poly)))
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError(f"bad road network: {err}") from err
    if len(set(node_ids)) != len(node_ids):
        raise ValidationError("road network node ids must be unique")
    return RoadNetwork(node_ids=node_ids, node_xy=node_xy,
                       edges=tuple(edges), terminal=terminal)


def instance_to_json(inst: Instance) -> dict:
    doc = {"schema_version": SCHEMA_VERSION,
           "demand_points": []}
    for k, (pid, (x, y)) in enumerate(zip(inst.demand.ids, inst.demand.xy)):
        row = {"id": pid, "x": float(x), "y": float(y)}
        if inst.accidents is not None:
            row["accidents"] = int(inst.accidents[k])
        if inst.density is not None:
            row["density"] = float(inst.density[k])
        if inst.a is not None:
            row["a"] = float(inst.a[k])
        doc["demand_points"].append(row)
    doc["existing_stations"] = _points_to_json(inst.existing)
    if inst.macro_candidates is not None:
        doc["macro_candidates"] = _points_to_json(inst.macro_candidates)
    if inst.micro_candidates is not None:
        doc["micro_candidates"] = _points_to_json(inst.micro_candidates)
    if inst.incidents is not None:
        doc["incidents"] = _points_to_json(inst.incidents)
    if inst.network is not None:
        doc["road_network"] = _network_to_json(inst.network)
    if inst.area_km2 is not None:
        doc["area_km2"] = float(inst.area_km2)
    return doc


def instance_from_json(doc: dict) -> Instance:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unrecognized schema version {version!r}")
    rows = doc.get("demand_points", [])
    demand = _points_from_json(rows, "demand point")
    accidents = density = a = None
    if rows and "accidents" in rows[0]:
        accidents = np.array([int(r["accidents"]) for r in rows])
        if (accidents < 0).any():
            raise ValidationError("accident counts must be non-negative")
    if rows and "density" in rows[0]:
        density = np.array([float(r["density"]) for r in rows])
        if (density < 0).any() or not np.all(np.isfinite(density)):
            raise ValidationError("densities must be finite and non-negative")
    if rows and "a" in rows[0]:
        a = np.array([float(r["a"]) for r in rows])
    return Instance(
        demand=demand, accidents=accidents, density=density, a=a,
        macro_candidates=(_points_from_json(doc["macro_candidates"], "macro candidate")
                          if "macro_candidates" in doc else None),
        micro_candidates=(_points_from_json(doc["micro_candidates"], "micro candidate")
                          if "micro_candidates" in doc else None),
        existing=_points_from_json(doc.get("existing_stations", []), "existing station"),
        network=(_network_from_json(doc["road_network"])
                 if "road_network" in doc else None),
        incidents=(_points_from_json(doc["incidents"], "incident")
                   if "incidents" in doc else None),
        area_km2=doc.get("area_km2"),
    )


def load_instance(path: str | Path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_json(json.load(fh))


def save_instance(inst: Instance, path: str | Path) -> None:
    write_json(instance_to_json(inst), path)


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

def _build_dataclass(cls, doc: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown {where} keys: {sorted(unknown)}")
    return cls(**doc)


def config_from_dict(doc: dict) -> RunConfig:
    doc = dict(doc)
    sizing = _build_dataclass(SizingConfig, doc.pop("sizing", {}), "sizing")
    macro_ea = _build_dataclass(EAParams, doc.pop("macro_ea", {}), "macro_ea")
    micro_ea = _build_dataclass(EAParams, doc.pop("micro_ea", {}), "micro_ea")
    cfg = _build_dataclass(RunConfig, doc, "config")
    cfg.sizing, cfg.macro_ea, cfg.micro_ea = sizing, macro_ea, micro_ea
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    else:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    try:
        return config_from_dict(doc)
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"bad config: {e}") from e


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def write_json(doc, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: str | Path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and np.isnan(v))
                        else v for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def points_geojson(points: list[tuple[str, float, float, str]]) -> dict:
    """GeoJSON FeatureCollection from (id, x_km, y_km, kind) rows."""
    return {
        "type": "FeatureCollection",
        "crs_note": "coordinates are planar kilometers, not lon/lat",
        "features": [
            {"type": "Feature",
             "geometry": {"type": "Point", "coordinates": [float(x), float(y)]},
             "properties": {"id": pid, "kind": kind}}
            for pid, x, y, kind in points
        ],
    }


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
