"""Planar distance computation, coverage sets, adjacency and circle-overlap separation.

Coordinates are planar kilometers throughout; inputs are assumed pre-projected.
Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NoNeighborError


@dataclass(frozen=True)
class PointSet:
    """Named points on the plane (demand points, candidate sites, stations)."""

    ids: tuple[str, ...]
    xy: np.ndarray  # (n, 2) float64, kilometers

    def __post_init__(self):
        xy = np.asarray(self.xy, dtype=float)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ValueError(f"xy must be (n, 2), got {xy.shape}")
        if len(self.ids) != xy.shape[0]:
            raise ValueError("ids and xy length mismatch")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("point ids must be unique")
        if not np.all(np.isfinite(xy)):
            raise ValueError("coordinates must be finite")

    def __len__(self) -> int:
        return len(self.ids)

    def index_of(self, point_id: str) -> int:
        return self.ids.index(point_id)


@dataclass(frozen=True)
class DistanceIndex:
    """Dense pairwise distances between two point sets, in kilometers."""

    a_ids: tuple[str, ...]
    b_ids: tuple[str, ...]
    d: np.ndarray  # (len(a), len(b))
    metric: str  # "euclidean" | "network"

    @property
    def has_unreachable(self) -> bool:
        return bool(np.isinf(self.d).any())


@dataclass(frozen=True)
class CoverageSets:
    """Within-radius membership between demand points and candidate sites.

    ``mask[i, j]`` is True when site j can serve demand point i, i.e.
    d[i, j] <= radius (boundary inclusive). ``omega(i)`` lists the sites
    able to serve demand i; ``eta(j)`` lists the demands site j can cover.
    """

    radius: float
    mask: np.ndarray  # (n_demand, n_sites) bool

    def omega(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.mask[i])

    def eta(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.mask[:, j])


def euclidean_matrix(a_xy: np.ndarray, b_xy: np.ndarray) -> np.ndarray:
    """Dense straight-line distance matrix between two coordinate arrays."""
    a = np.asarray(a_xy, dtype=float)
    b = np.asarray(b_xy, dtype=float)
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    return np.hypot(dx, dy)


def _snap_to_nodes(xy: np.ndarray, node_xy: np.ndarray) -> np.ndarray:
    """Index of the nearest graph node for each point."""
    return np.argmin(euclidean_matrix(xy, node_xy), axis=1)


def distance_index(a: PointSet, b: PointSet, metric: str = "euclidean",
                   network=None) -> DistanceIndex:
    """Full dense distance index between point sets ``a`` and ``b``.

    ``metric="euclidean"`` is straight-line planar distance. With
    ``metric="network"`` every point snaps to its nearest node of the
    supplied road network and distances are shortest paths along edges;
    unreachable pairs get ``inf`` and are flagged via ``has_unreachable``.
    """
    if metric == "euclidean":
        d = euclidean_matrix(a.xy, b.xy)
    elif metric == "network":
        if network is None:
            raise ConfigurationError("network metric requested but no road network given")
        d = _network_distances(a.xy, b.xy, network)
        if np.isinf(d).any():
            warnings.warn("network distance index contains unreachable pairs",
                          stacklevel=2)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return DistanceIndex(a_ids=a.ids, b_ids=b.ids, d=d, metric=metric)


def _network_distances(a_xy: np.ndarray, b_xy: np.ndarray, network) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    node_xy = network.node_xy
    n = node_xy.shape[0]
    rows, cols, lens = [], [], []
    for e in network.edges:
        rows.append(e.u)
        cols.append(e.v)
        lens.append(e.length)
    g = coo_matrix((lens, (rows, cols)), shape=(n, n))
    src = _snap_to_nodes(np.asarray(a_xy, float), node_xy)
    dst = _snap_to_nodes(np.asarray(b_xy, float), node_xy)
    uniq_src = np.unique(src)
    dist_from = dijkstra(g, directed=False, indices=uniq_src)
    lookup = {int(s): k for k, s in enumerate(uniq_src)}
    out = np.empty((len(src), len(dst)))
    for i, s in enumerate(src):
        out[i] = dist_from[lookup[int(s)], dst]
    return out


def coverage_sets(d: DistanceIndex, radius: float) -> CoverageSets:
    """Coverage membership at the given service radius (inclusive)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return CoverageSets(radius=float(radius), mask=d.d <= radius)


def nearest_station(j: int, sited: set[int] | list[int],
                    d: np.ndarray, ids: tuple[str, ...] | None = None) -> tuple[int, float]:
    """Nearest other sited station to station ``j`` (its adjacent station).

    ``d`` is a square distance matrix over one common point set. Ties are
    broken by the lexicographically smaller id (or smaller index when no
    ids are given) so runs stay deterministic.
    """
    others = [k for k in sited if k != j]
    if not others:
        raise NoNeighborError(f"station {j} has no other sited station")

    def key(k):
        return (d[j, k], ids[k] if ids is not None else k)

    best = min(others, key=key)
    return best, float(d[j, best])


def lens_area(d: float, r: float) -> float:
    """Intersection area of two equal circles of radius r at center distance d."""
    if d >= 2 * r:
        return 0.0
    if d <= 0:
        return math.pi * r * r
    return 2 * r * r * math.acos(d / (2 * r)) - (d / 2) * math.sqrt(4 * r * r - d * d)


def min_separation_for_overlap(r: float, max_overlap_fraction: float,
                               tol: float = 1e-6) -> float:
    """Smallest center distance keeping the overlap of two equal service
    circles at or below the given fraction of one circle's area.

    Solved by bisection on the circle-circle lens area, which is strictly
    decreasing in the center distance over [0, 2r].
    """
    if not 0.0 <= max_overlap_fraction <= 1.0:
        raise ValueError("max_overlap_fraction must lie in [0, 1]")
    if r <= 0:
        raise ValueError("radius must be positive")
    if max_overlap_fraction >= 1.0:
        return 0.0
    target = max_overlap_fraction * math.pi * r * r
    lo, hi = 0.0, 2.0 * r
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lens_area(mid, r) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
