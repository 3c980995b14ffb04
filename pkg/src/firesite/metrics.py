"""Front-quality indicators (hypervolume, spacing, nadir reference) and
plan coverage statistics.

All objective vectors are minimization-oriented. Hypervolume is computed
exactly: a sweep in 2-D and a slice decomposition over the third axis in
3-D, which is all this model needs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import euclidean_matrix
from .kernels import nondominated_ranks


@dataclass(frozen=True)
class ParetoArchive:
    """A non-dominated set at one generation: objectives plus chromosomes."""

    generation: int
    objectives: np.ndarray   # (n, m) minimization orientation
    chromosomes: np.ndarray  # (n, n_bits) uint8
    feasible: bool = True    # False when this is a least-violating fallback

    def __len__(self) -> int:
        return self.objectives.shape[0]


@dataclass(frozen=True)
class CoverageReport:
    high_risk_rate: float | None     # covered high-risk communities / high-risk communities
    demand_rate: float               # covered demand weight / total demand weight
    incident_rate: float | None     # incidents within any service radius / incidents
    station_workloads: dict[str, float] = field(default_factory=dict)


def nadir_point(front: np.ndarray, offset: float = 1e-9) -> np.ndarray:
    """Component-wise worst vector of a front, nudged so boundary points
    still contribute volume."""
    front = np.asarray(front, dtype=float)
    if front.ndim != 2 or front.shape[0] == 0:
        raise ValueError("front must be a non-empty (n, m) array")
    return front.max(axis=0) + offset


def _nondominated_subset(front: np.ndarray) -> np.ndarray:
    ranks = nondominated_ranks(np.ascontiguousarray(front, dtype=float),
                               np.zeros(front.shape[0]))
    return front[ranks == 0]


def merge_nondominated(archive: np.ndarray, new_points: np.ndarray) -> np.ndarray:
    """Fold new objective vectors into a mutually non-dominated, duplicate-free
    archive. Incoming points weakly dominated by the archive (equal ones
    included) are dropped; archived points strictly dominated by a survivor
    are evicted."""
    new_points = np.asarray(new_points, dtype=float)
    if new_points.shape[0] == 0:
        return archive
    if archive.shape[0] == 0:
        uniq = np.unique(new_points, axis=0)
        return _nondominated_subset(uniq)
    weak = (archive[:, None, :] <= new_points[None, :, :]).all(axis=2)
    survivors = np.unique(new_points[~weak.any(axis=0)], axis=0)
    if survivors.shape[0] == 0:
        return archive
    le = (survivors[:, None, :] <= archive[None, :, :]).all(axis=2)
    lt = (survivors[:, None, :] < archive[None, :, :]).any(axis=2)
    kept = archive[~(le & lt).any(axis=0)]
    return np.vstack([kept, _nondominated_subset(survivors)])


def _hv_2d(front: np.ndarray, ref: np.ndarray) -> float:
    pts = front[np.lexsort((front[:, 1], front[:, 0]))]
    vol = 0.0
    y_prev = ref[1]
    for x, y in pts:
        if y < y_prev:
            vol += (ref[0] - x) * (y_prev - y)
            y_prev = y
    return vol


def hypervolume(front: np.ndarray, reference: np.ndarray) -> float:
    """Exact measure of the region dominated by ``front`` and bounded by
    ``reference`` (minimization). Points not strictly below the reference in
    every component contribute nothing; an empty contributing set gives 0.
    """
    front = np.asarray(front, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if front.ndim != 2:
        raise ValueError("front must be (n, m)")
    if front.shape[1] != ref.shape[0]:
        raise ValueError("reference dimension mismatch")
    keep = (front < ref).all(axis=1)
    pts = _nondominated_subset(front[keep])
    if pts.shape[0] == 0:
        return 0.0
    m = pts.shape[1]
    if m == 1:
        return float(ref[0] - pts[:, 0].min())
    if m == 2:
        return float(_hv_2d(pts, ref))
    if m == 3:
        # sweep slabs along the third axis, maintaining the 2-D staircase of
        # the points passed so far; each slab contributes staircase area * dz
        order = np.argsort(pts[:, 2], kind="stable")
        pts = pts[order]
        zs = pts[:, 2]
        stair = np.empty((0, 2))
        vol = 0.0
        for k in range(pts.shape[0]):
            p = pts[k, :2]
            if not ((stair <= p).all(axis=1) & ((stair < p).any(axis=1))).any():
                keep = ~((p <= stair).all(axis=1))
                stair = np.vstack([stair[keep], p])
            z_hi = zs[k + 1] if k + 1 < pts.shape[0] else ref[2]
            dz = z_hi - zs[k]
            if dz > 0:
                vol += _hv_2d(stair, ref[:2]) * dz
        return float(vol)
    raise ValueError("hypervolume supports 1-3 objectives")


def spacing(front: np.ndarray) -> float:
    """Standard deviation of nearest-neighbor distances within a front
    (the Schott variant, Euclidean norm). Undefined below two points, in
    which case NaN is returned and reported as absent downstream."""
    front = np.asarray(front, dtype=float)
    n = front.shape[0]
    if n < 2:
        return float("nan")
    diff = front[:, None, :] - front[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    nn = d.min(axis=1)
    dbar = nn.mean()
    return float(np.sqrt(((nn - dbar) ** 2).sum() / (n - 1)))


def coverage_report(communities_xy: np.ndarray, demand: np.ndarray,
                    tiers: list[tuple[np.ndarray, float, list[str]]],
                    incidents_xy: np.ndarray | None = None,
                    high_risk_threshold: float = 4.0) -> CoverageReport:
    """Coverage statistics of a combined plan.

    ``tiers`` lists (station_xy, service_radius, station_ids) per tier; a
    community or incident counts as covered when any station of any tier
    reaches it within that tier's radius. High-risk communities are those
    with demand >= the threshold; the rate is None when there are none.
    """
    if high_risk_threshold < 0:
        raise ValueError("threshold must be non-negative")
    communities_xy = np.asarray(communities_xy, dtype=float)
    demand = np.asarray(demand, dtype=float)
    n = communities_xy.shape[0]

    covered = np.zeros(n, dtype=bool)
    workloads: dict[str, float] = {}
    for xy, radius, ids in tiers:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if xy.shape[0] == 0:
            continue
        d = euclidean_matrix(communities_xy, xy)
        within = d <= radius
        covered |= within.any(axis=1)
        for k, sid in enumerate(ids):
            workloads[sid] = float(demand[within[:, k]].sum())

    high = demand >= high_risk_threshold
    if high.any():
        high_rate = float(covered[high].sum() / high.sum())
    else:
        warnings.warn("no community meets the high-risk threshold", stacklevel=2)
        high_rate = None

    total = demand.sum()
    demand_rate = float(demand[covered].sum() / total) if total > 0 else 0.0

    incident_rate = None
    if incidents_xy is not None:
        incidents_xy = np.asarray(incidents_xy, dtype=float).reshape(-1, 2)
        if incidents_xy.shape[0]:
            hit = np.zeros(incidents_xy.shape[0], dtype=bool)
            for xy, radius, _ids in tiers:
                xy = np.asarray(xy, dtype=float).reshape(-1, 2)
                if xy.shape[0] == 0:
                    continue
                hit |= (euclidean_matrix(incidents_xy, xy) <= radius).any(axis=1)
            incident_rate = float(hit.mean())

    return CoverageReport(high_risk_rate=high_rate, demand_rate=demand_rate,
                          incident_rate=incident_rate, station_workloads=workloads)
