"""Seeded synthetic instances: clustered high-risk communities, a
grid-plus-jitter road network, pre-placed existing stations, candidate
pools and incident points. A desk-scale stand-in for real city data."""

from __future__ import annotations

import math

import numpy as np

from .formats import Instance
from .geometry import PointSet, euclidean_matrix
from .sizing import RoadEdge, RoadNetwork

PROFILES = ("tiny", "demo", "network")


def _grid_network(rng: np.random.Generator, side_km: float,
                  spacing: float, jitter: float) -> RoadNetwork:
    k = max(2, int(round(side_km / spacing)) + 1)
    xs = np.linspace(0, side_km, k)
    ids, xy = [], []
    for r in range(k):
        for c in range(k):
            ids.append(f"n{r}_{c}")
            xy.append((xs[c] + rng.uniform(-jitter, jitter),
                       xs[r] + rng.uniform(-jitter, jitter)))
    xy = np.asarray(xy)
    edges = []
    drop = rng.random((k, k, 2)) < 0.08  # sparse gaps keep the grid road-like
    for r in range(k):
        for c in range(k):
            u = r * k + c
            if c + 1 < k and not drop[r, c, 0]:
                v = r * k + c + 1
                poly = np.array([xy[u], xy[v]])
                edges.append(RoadEdge(id=f"e{u}_{v}", u=u, v=v, polyline=poly,
                                      length=RoadEdge.arc_length(poly)))
            if r + 1 < k and not drop[r, c, 1]:
                v = (r + 1) * k + c
                poly = np.array([xy[u], xy[v]])
                edges.append(RoadEdge(id=f"e{u}_{v}", u=u, v=v, polyline=poly,
                                      length=RoadEdge.arc_length(poly)))
    return RoadNetwork(node_ids=tuple(ids), node_xy=xy, edges=tuple(edges))


def _communities(rng: np.random.Generator, n: int, side: float,
                 centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    margin = 0.06 * side
    n_clustered = int(0.55 * n)
    pick = rng.integers(0, len(centers), size=n_clustered)
    clustered = centers[pick] + rng.normal(0, 0.10 * side, size=(n_clustered, 2))
    uniform = rng.uniform(margin, side - margin, size=(n - n_clustered, 2))
    xy = np.clip(np.concatenate([clustered, uniform]), margin, side - margin)

    near = euclidean_matrix(xy, centers).min(axis=1)
    heat = np.exp(-(near / (0.35 * side)) ** 2)
    accidents = rng.poisson(4 + 25 * heat)
    density = np.round(rng.gamma(2.0, 1.2, size=n) * (1 + 4 * heat), 3)
    return xy, accidents, density


def _incidents(rng: np.random.Generator, xy: np.ndarray, accidents: np.ndarray,
               side: float) -> np.ndarray:
    pts = []
    for (x, y), k in zip(xy, accidents):
        m = rng.poisson(max(1.0, k / 6.0))
        pts.append(np.column_stack([rng.normal(x, 0.25, m), rng.normal(y, 0.25, m)]))
    out = np.concatenate(pts) if pts else np.empty((0, 2))
    return np.clip(out, 0, side)


def _ring_points(rng: np.random.Generator, centers: np.ndarray, n: int,
                 r_lo: float, r_hi: float, side: float) -> np.ndarray:
    pick = rng.integers(0, len(centers), size=n)
    radius = rng.uniform(r_lo, r_hi, size=n)
    angle = rng.uniform(0, 2 * math.pi, size=n)
    pts = centers[pick] + np.column_stack([radius * np.cos(angle),
                                           radius * np.sin(angle)])
    return np.clip(pts, 0.15, side - 0.15)


def _pointset(prefix: str, xy: np.ndarray) -> PointSet:
    return PointSet(ids=tuple(f"{prefix}{k}" for k in range(len(xy))), xy=xy)


def generate_synthetic(n_communities: int = 30, seed: int = 0,
                       profile: str = "demo") -> Instance:
    """Build a fully seeded instance.

    ``tiny`` keeps candidate pools inside the exact-oracle guards
    (|macro| <= 15, |micro| <= 12), ``demo`` is the bundled desk-scale
    instance with explicit candidate pools, and ``network`` carries no
    explicit pools so candidates come from the road network.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    rng = np.random.default_rng(seed)

    if profile == "tiny":
        n_communities = min(n_communities, 10)
        side = 7.0
        existing_xy = np.array([[2.2, 3.5], [5.2, 3.5]])
        centers = existing_xy + rng.normal(0, 0.3, existing_xy.shape)
        xy, accidents, density = _communities(rng, n_communities, side, centers)
        macro_xy = _ring_points(rng, existing_xy, 14, 2.1, 3.4, side)
        # micro candidates hug the communities and stay inside the existing
        # stations' micro ring; a ring projection backstops every community
        # so the cap-free model is always coverable
        micro_xy = []
        for k in range(12):
            base = xy[k % n_communities]
            placed = None
            for _ in range(8):
                cand = base + rng.normal(0, 0.35, 2)
                d = np.hypot(*(existing_xy - cand).T)
                if ((d >= 0.8) & (d <= 2.7)).any() and np.hypot(*(cand - base)) <= 0.9:
                    placed = cand
                    break
            if placed is None:
                d = np.hypot(*(existing_xy - base).T)
                ai = int(np.argmin(d))
                direction = (base - existing_xy[ai]) / max(d[ai], 1e-9)
                placed = existing_xy[ai] + min(2.7, max(0.8, d[ai])) * direction
            micro_xy.append(placed)
        micro_xy = np.asarray(micro_xy)
        net = _grid_network(rng, side, spacing=2.3, jitter=0.1)
        area = 33.53  # sized so the area rule asks for 2 new macro stations
    elif profile == "demo":
        side = 5.6
        existing_xy = np.array([[side * 0.27, side * 0.30], [side * 0.73, side * 0.70]])
        centers = np.array([[side * 0.33, side * 0.37], [side * 0.71, side * 0.60],
                            [side * 0.66, side * 0.23]])
        xy, accidents, density = _communities(rng, n_communities, side, centers)
        macro_xy = _ring_points(rng, existing_xy, 40, 2.1, 3.5, side)
        # one candidate beside each community plus one eccentric candidate
        # pushed away from the local hot spot: its lighter service disk keeps
        # the calibrated workload cap attainable
        near_comm = np.clip(xy + rng.normal(0, 0.20, (n_communities, 2)),
                            0.2, side - 0.2)
        hot = centers[np.argmin(euclidean_matrix(xy, centers), axis=1)]
        away = xy - hot
        norm = np.hypot(away[:, 0], away[:, 1])[:, None]
        away = np.where(norm > 1e-9, away / np.maximum(norm, 1e-9),
                        np.array([1.0, 0.0]))
        edge = np.clip(xy + 0.9 * away + rng.normal(0, 0.06, (n_communities, 2)),
                       0.2, side - 0.2)
        micro_xy = np.concatenate([near_comm, edge])[:60]
        net = _grid_network(rng, side, spacing=1.0, jitter=0.12)
        area = float(side * side)
    else:
        side = max(6.0, round(math.sqrt(n_communities / 1.1), 1))
        k_centers = max(2, n_communities // 12)
        centers = rng.uniform(0.2 * side, 0.8 * side, size=(k_centers, 2))
        xy, accidents, density = _communities(rng, n_communities, side, centers)
        existing_xy = centers[:min(4, k_centers)] + rng.normal(0, 0.2, (min(4, k_centers), 2))
        macro_xy = None
        micro_xy = None
        net = _grid_network(rng, side, spacing=0.8, jitter=0.1)
        area = float(side * side)

    return Instance(
        demand=_pointset("c", xy),
        accidents=accidents,
        density=density,
        macro_candidates=_pointset("m", macro_xy) if macro_xy is not None else None,
        micro_candidates=_pointset("u", micro_xy) if micro_xy is not None else None,
        existing=_pointset("x", existing_xy),
        network=net,
        incidents=_pointset("f", _incidents(rng, xy, accidents, side)),
        area_km2=area,
    )
