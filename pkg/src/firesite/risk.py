"""Community fire-risk estimation: natural-breaks ranking and weighted fusion.

Accident counts and population densities are each ranked 1..k by an exact
(dynamic-programming) natural-breaks classification, then fused into one
demand value per community.
"""

from __future__ import annotations

import numpy as np


def natural_breaks(values, k: int) -> np.ndarray:
    """Rank each value 1..k by optimal natural-breaks classification.

    Classes are contiguous runs of the sorted sequence chosen to minimize
    the total within-class sum of squared deviations (the Jenks criterion),
    solved exactly by dynamic programming over the distinct values. Equal
    values therefore always land in the same class. Higher values get
    higher ranks.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValueError("values must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    distinct, inverse, counts = np.unique(vals, return_inverse=True, return_counts=True)
    m = distinct.size
    if k > m:
        raise ValueError(f"k={k} exceeds the {m} distinct values")
    if k == 1:
        return np.ones(vals.shape, dtype=int)

    w = counts.astype(float)
    # prefix sums for O(1) within-class SSD of distinct values l..r (inclusive)
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cwv = np.concatenate([[0.0], np.cumsum(w * distinct)])
    cwv2 = np.concatenate([[0.0], np.cumsum(w * distinct * distinct)])

    def ssd(l: int, r: int) -> float:
        tw = cw[r + 1] - cw[l]
        s = cwv[r + 1] - cwv[l]
        s2 = cwv2[r + 1] - cwv2[l]
        return s2 - s * s / tw

    INF = float("inf")
    # cost[c][r] = best total SSD splitting distinct[0..r] into c+1 classes
    cost = np.full((k, m), INF)
    split = np.zeros((k, m), dtype=int)
    for r in range(m):
        cost[0, r] = ssd(0, r)
    for c in range(1, k):
        for r in range(c, m):
            best, arg = INF, c
            for t in range(c, r + 1):
                cand = cost[c - 1, t - 1] + ssd(t, r)
                if cand < best:
                    best, arg = cand, t
            cost[c, r] = best
            split[c, r] = arg

    # recover class of each distinct value
    cls = np.empty(m, dtype=int)
    r = m - 1
    for c in range(k - 1, -1, -1):
        l = split[c, r] if c > 0 else 0
        cls[l:r + 1] = c + 1
        r = l - 1
    return cls[inverse].reshape(vals.shape)


def fuse_risk(r_a, r_p, gamma: float = 0.5):
    """Fuse accident rank and density rank into the demand value
    a = gamma * r_a + (1 - gamma) * r_p."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly inside (0, 1)")
    return gamma * np.asarray(r_a, dtype=float) + (1.0 - gamma) * np.asarray(r_p, dtype=float)


def risk_table(accidents, densities, k: int = 4, gamma: float = 0.5):
    """Rank both attributes and fuse them; returns (r_a, r_p, a)."""
    r_a = natural_breaks(accidents, k)
    r_p = natural_breaks(densities, k)
    return r_a, r_p, fuse_risk(r_a, r_p, gamma)
