"""Analytic pre-model computations: service radii, station counts, distance
bounds, and candidate-site generation from a road network."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointSet, euclidean_matrix, min_separation_for_overlap


@dataclass
class SizingConfig:
    """All analytic constants of the siting method.

    Areas are km^2, radii and distances km. ``r1`` and ``sam`` may be left
    None to be derived (weighted-area radius and circular service area).
    ``cost_offset`` is the additive constant of the log cost rule; it is
    housed separately from the area weight ``beta`` because the two play
    different roles despite the shared symbol in some write-ups.
    """

    a1: float = 7.0            # recommended first-class service area
    a2: float = 4.0            # recommended second-class service area
    beta: float = 0.7          # area weight
    epsilon: float = 0.05      # distance tolerance, km
    r1: float | None = None    # macro service radius; derived when None
    r2: float = 1.0            # micro service radius
    tar: float | None = None   # total region area
    n_existing: int | None = None
    sam: float | None = None   # per-macro service area; derived when None
    sc: float | None = None    # per-station setup/operating cost
    tlc: float | None = None   # total loss cost
    cost_scale: float = 1.0    # multiplicative scale of the cost model
    cost_offset: float = 0.0   # additive constant of the log station-count rule
    max_overlap: float = 0.30  # adjacent service-circle overlap cap

    def resolved_r1(self) -> float:
        if self.r1 is not None:
            return float(self.r1)
        return macro_radius(self.a1, self.a2, self.beta)

    def resolved_sam(self) -> float:
        if self.sam is not None:
            return float(self.sam)
        return circular_service_area(self.resolved_r1())


@dataclass(frozen=True)
class DistanceBounds:
    """Separation bounds for the two tiers.

    d_s1/d_h bound the distance between adjacent macro stations; d_s2/d_l2
    bound the distance between a micro station and its adjacent macro
    station.
    """

    d_s1: float
    d_h: float
    d_s2: float
    d_l2: float

    def __post_init__(self):
        if not (0 <= self.d_s1 < self.d_h):
            raise ValueError("need 0 <= d_s1 < d_h")
        if not (0 <= self.d_s2 < self.d_l2):
            raise ValueError("need 0 <= d_s2 < d_l2")


@dataclass(frozen=True)
class RoadEdge:
    id: str
    u: int                # node index
    v: int                # node index
    polyline: np.ndarray  # (m, 2) km, first point at u, last at v
    length: float         # km, equals polyline arc length

    @staticmethod
    def arc_length(polyline: np.ndarray) -> float:
        p = np.asarray(polyline, dtype=float)
        return float(np.hypot(np.diff(p[:, 0]), np.diff(p[:, 1])).sum())


@dataclass(frozen=True)
class RoadNetwork:
    """Planar road graph; junctions are nodes of degree >= 3 or marked terminal."""

    node_ids: tuple[str, ...]
    node_xy: np.ndarray          # (n, 2) km
    edges: tuple[RoadEdge, ...]
    terminal: np.ndarray = field(default=None)  # (n,) bool, optional markers

    def __post_init__(self):
        xy = np.asarray(self.node_xy, dtype=float)
        object.__setattr__(self, "node_xy", xy)
        if self.terminal is None:
            object.__setattr__(self, "terminal", np.zeros(len(self.node_ids), dtype=bool))
        for e in self.edges:
            if not math.isclose(e.length, RoadEdge.arc_length(e.polyline),
                                rel_tol=1e-6, abs_tol=1e-9):
                raise ValueError(f"edge {e.id}: length does not match polyline arc length")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.node_ids), dtype=int)
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg

    def junction_mask(self) -> np.ndarray:
        return (self.degrees() >= 3) | self.terminal


def radius_from_standard_area(a: float) -> float:
    """Coverage radius of the standard area model A = 2 P^2."""
    if a <= 0:
        raise ValueError("area must be positive")
    return math.sqrt(a / 2.0)


def macro_radius(a1: float, a2: float, beta: float) -> float:
    """Macro service radius from the two recommended areas weighted by beta."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly inside (0, 1)")
    if a1 <= 0 or a2 <= 0:
        raise ValueError("areas must be positive")
    return math.sqrt((beta * a1 + (1.0 - beta) * a2) / 2.0)


def circular_service_area(r: float) -> float:
    """Area of the circular service disc of radius r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return math.pi * r * r


def station_count_by_area(tar: float, n_existing: int, sam: float) -> int:
    """New-station count from uncovered area, rounded up, clamped at 0."""
    if sam <= 0:
        raise ValueError("per-station service area must be positive")
    if tar < 0 or n_existing < 0:
        raise ValueError("tar and n_existing must be non-negative")
    n = math.ceil((tar - n_existing * sam) / sam)
    return max(0, n)


def station_count_by_cost(sc: float, tlc: float, cost_offset: float = 0.0) -> int:
    """Station count from the log cost trade-off; N <= 0 means the cost
    model is inapplicable (setup cost dwarfs loss cost) and the caller
    should fall back to the area rule."""
    if sc <= 0 or tlc <= 0:
        raise ValueError("costs must be positive")
    val = math.log(tlc) - math.log(sc) + cost_offset
    nearest = round(val)
    if abs(val - nearest) < 1e-9:  # keep exact log identities exact
        val = nearest
    return int(val)


def macro_bounds(r1: float, epsilon: float, max_overlap: float = 0.30) -> tuple[float, float]:
    """(d_s1, d_h): adjacent-macro separation bounds.

    The upper bound keeps adjacent service circles from drifting apart
    (2 R1 + epsilon); the lower bound caps their overlap at the given
    fraction of one circle's area.
    """
    if r1 <= 0:
        raise ValueError("r1 must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    d_h = 2.0 * r1 + epsilon
    d_s1 = min_separation_for_overlap(r1, max_overlap)
    return d_s1, d_h


def micro_bounds(r1: float, r2: float, epsilon: float) -> tuple[float, float]:
    """(d_s2, d_l2): micro-to-adjacent-macro separation bounds."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    d_l2 = r1 + r2 + epsilon
    d_s2 = max(0.0, r1 - r2 - epsilon)
    return d_s2, d_l2


def _interpolate_along(polyline: np.ndarray, s: float) -> tuple[float, float]:
    """Point at arc length s along a polyline."""
    p = np.asarray(polyline, dtype=float)
    seg = np.hypot(np.diff(p[:, 0]), np.diff(p[:, 1]))
    acc = 0.0
    for k, L in enumerate(seg):
        if acc + L >= s or k == len(seg) - 1:
            t = 0.0 if L == 0 else min(1.0, max(0.0, (s - acc) / L))
            x = p[k, 0] + t * (p[k + 1, 0] - p[k, 0])
            y = p[k, 1] + t * (p[k + 1, 1] - p[k, 1])
            return float(x), float(y)
        acc += L
    return float(p[-1, 0]), float(p[-1, 1])


def generate_candidates(net: RoadNetwork, spacing_m: float = 200.0,
                        clearance_m: float = 50.0,
                        include_interior: bool = True) -> PointSet:
    """Candidate sites from a road network.

    Always includes every junction node. With ``include_interior`` (the
    macro tier), additional points are placed along each edge at arc-length
    multiples of ``spacing_m``, measured from the edge's lower-id endpoint,
    and any interior point within ``clearance_m`` of a junction is dropped.
    The micro tier uses junctions only.
    """
    if spacing_m <= 0:
        raise ValueError("spacing must be positive")
    if clearance_m < 0:
        raise ValueError("clearance must be non-negative")
    spacing = spacing_m / 1000.0
    clearance = clearance_m / 1000.0

    jmask = net.junction_mask()
    jidx = np.flatnonzero(jmask)
    ids = [f"j:{net.node_ids[i]}" for i in jidx]
    pts = [tuple(net.node_xy[i]) for i in jidx]
    junction_xy = net.node_xy[jidx] if len(jidx) else np.empty((0, 2))

    if include_interior:
        for e in net.edges:
            poly = e.polyline
            # measure from the lower-id endpoint so direction never matters
            if net.node_ids[e.u] > net.node_ids[e.v]:
                poly = poly[::-1]
            n_steps = int(math.floor(e.length / spacing))
            for k in range(1, n_steps + 1):
                s = k * spacing
                if s >= e.length:
                    break
                x, y = _interpolate_along(poly, s)
                if len(junction_xy):
                    dmin = float(np.hypot(junction_xy[:, 0] - x, junction_xy[:, 1] - y).min())
                    if dmin < clearance:
                        continue
                ids.append(f"p:{e.id}:{k}")
                pts.append((x, y))

    xy = np.asarray(pts, dtype=float).reshape(len(pts), 2)
    return PointSet(ids=tuple(ids), xy=xy)


def annulus_filter(candidates: PointSet, centers: PointSet,
                   r_min: float, r_max: float) -> PointSet:
    """Keep candidates lying within [r_min, r_max] of at least one center."""
    if r_min > r_max:
        raise ValueError("r_min must not exceed r_max")
    if len(centers) == 0:
        warnings.warn("annulus_filter: no centers given, result is empty", stacklevel=2)
        return PointSet(ids=(), xy=np.empty((0, 2)))
    d = euclidean_matrix(candidates.xy, centers.xy)
    keep = ((d >= r_min) & (d <= r_max)).any(axis=1)
    idx = np.flatnonzero(keep)
    return PointSet(ids=tuple(candidates.ids[i] for i in idx), xy=candidates.xy[idx])
