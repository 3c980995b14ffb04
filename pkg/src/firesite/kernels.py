"""Hot numeric kernels: population evaluation for both tiers and
non-dominated sorting.

Each kernel exists twice: a loop version compiled with numba's @njit and a
vectorized pure-numpy version. The active implementation is chosen at
import time; set ``FIRESITE_PURE_NUMPY=1`` to force the numpy path (or it
is selected automatically when numba is unavailable). Both variants stay
importable for equivalence tests and benchmarks via the ``_nb``/``_np``
names.
"""

from __future__ import annotations

import os

import numpy as np

_PURE_NUMPY = os.environ.get("FIRESITE_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes")

try:
    if _PURE_NUMPY:
        raise ImportError("numpy path forced by FIRESITE_PURE_NUMPY")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    njit = None
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# macro tier: coverage fitness + adjacency-bound violation
# ---------------------------------------------------------------------------

def _eval_macro_loops(pop, cov, a, covered_existing, d_jj, d_jphi,
                      d_s1, d_h, n_required, card_penalty, all_pairs):
    P, J = pop.shape
    I = cov.shape[0]
    E = d_jphi.shape[1]
    fitness = np.zeros(P)
    violation = np.zeros(P)
    sel = np.empty(J, np.int64)
    for p in range(P):
        count = 0
        for j in range(J):
            if pop[p, j]:
                sel[count] = j
                count += 1
        if count != n_required:
            violation[p] += card_penalty * abs(count - n_required)

        for i in range(I):
            if covered_existing[i]:
                fitness[p] += a[i]
                continue
            for k in range(count):
                if cov[i, sel[k]]:
                    fitness[p] += a[i]
                    break

        if all_pairs:
            for k in range(count):
                j = sel[k]
                for l in range(k + 1, count):
                    d = d_jj[j, sel[l]]
                    if d < d_s1:
                        violation[p] += d_s1 - d
                    elif d > d_h:
                        violation[p] += d - d_h
                for e in range(E):
                    d = d_jphi[j, e]
                    if d < d_s1:
                        violation[p] += d_s1 - d
                    elif d > d_h:
                        violation[p] += d - d_h
        else:
            for k in range(count):
                j = sel[k]
                dn = np.inf
                for l in range(count):
                    if l != k and d_jj[j, sel[l]] < dn:
                        dn = d_jj[j, sel[l]]
                for e in range(E):
                    if d_jphi[j, e] < dn:
                        dn = d_jphi[j, e]
                if np.isfinite(dn):
                    if dn < d_s1:
                        violation[p] += d_s1 - dn
                    elif dn > d_h:
                        violation[p] += dn - d_h
    return fitness, violation


def eval_macro_population_np(pop, cov, a, covered_existing, d_jj, d_jphi,
                             d_s1, d_h, n_required, card_penalty, all_pairs):
    pop_b = pop.astype(bool)
    counts = pop_b.sum(axis=1)
    violation = card_penalty * np.abs(counts - n_required).astype(float)

    hits = (pop.astype(np.float64) @ cov.T.astype(np.float64)) > 0  # (P, I)
    covered = hits | covered_existing[None, :]
    fitness = covered @ a

    P = pop.shape[0]
    for p in range(P):
        sel = np.flatnonzero(pop_b[p])
        if sel.size == 0:
            continue
        if all_pairs:
            if sel.size >= 2:
                sub = d_jj[np.ix_(sel, sel)]
                iu = np.triu_indices(sel.size, k=1)
                d = sub[iu]
                violation[p] += np.maximum(0.0, d_s1 - d).sum()
                violation[p] += np.maximum(0.0, d - d_h).sum()
            if d_jphi.shape[1]:
                d = d_jphi[sel].ravel()
                violation[p] += np.maximum(0.0, d_s1 - d).sum()
                violation[p] += np.maximum(0.0, d - d_h).sum()
        else:
            sub = d_jj[np.ix_(sel, sel)].copy()
            np.fill_diagonal(sub, np.inf)
            dn = sub.min(axis=1)
            if d_jphi.shape[1]:
                dn = np.minimum(dn, d_jphi[sel].min(axis=1))
            finite = np.isfinite(dn)
            violation[p] += np.maximum(0.0, d_s1 - dn[finite]).sum()
            violation[p] += np.maximum(0.0, dn[finite] - d_h).sum()
    return fitness, violation


# ---------------------------------------------------------------------------
# micro tier: (count, risk-weighted assignment distance, -mean adjacency)
# ---------------------------------------------------------------------------

def _eval_micro_loops(pop, cov, a, d_ij, d_jj, eta_load, cap, ring_dev):
    P, J = pop.shape
    I = cov.shape[0]
    f1 = np.zeros(P)
    f2 = np.zeros(P)
    f3 = np.zeros(P)
    violation = np.zeros(P)
    sel = np.empty(J, np.int64)
    for p in range(P):
        count = 0
        for j in range(J):
            if pop[p, j]:
                sel[count] = j
                count += 1
                violation[p] += ring_dev[j]
                if eta_load[j] > cap:
                    violation[p] += eta_load[j] - cap
        f1[p] = count

        uncovered = 0
        for i in range(I):
            dmin = np.inf
            for k in range(count):
                j = sel[k]
                if cov[i, j] and d_ij[i, j] < dmin:
                    dmin = d_ij[i, j]
            if np.isfinite(dmin):
                f2[p] += a[i] * dmin
            else:
                uncovered += 1
        violation[p] += uncovered

        if count >= 2:
            total = 0.0
            for k in range(count):
                j = sel[k]
                dn = np.inf
                for l in range(count):
                    if l != k and d_jj[j, sel[l]] < dn:
                        dn = d_jj[j, sel[l]]
                total += dn
            f3[p] = -total / count
    return f1, f2, f3, violation


def eval_micro_population_np(pop, cov, a, d_ij, d_jj, eta_load, cap, ring_dev):
    pop_b = pop.astype(bool)
    P = pop.shape[0]
    f1 = pop_b.sum(axis=1).astype(float)
    f2 = np.zeros(P)
    f3 = np.zeros(P)
    violation = pop_b @ ring_dev + pop_b @ np.maximum(0.0, eta_load - cap)

    d_cov = np.where(cov, d_ij, np.inf)
    for p in range(P):
        sel = np.flatnonzero(pop_b[p])
        if sel.size:
            dmin = d_cov[:, sel].min(axis=1)
            covered = np.isfinite(dmin)
            f2[p] = (a[covered] * dmin[covered]).sum()
            violation[p] += np.count_nonzero(~covered)
        else:
            violation[p] += cov.shape[0]
        if sel.size >= 2:
            sub = d_jj[np.ix_(sel, sel)].copy()
            np.fill_diagonal(sub, np.inf)
            f3[p] = -sub.min(axis=1).sum() / sel.size
    return f1, f2, f3, violation


# ---------------------------------------------------------------------------
# constraint-dominated fast non-dominated sorting
# ---------------------------------------------------------------------------

def _nd_ranks_loops(objs, viol):
    n, m = objs.shape
    dom = np.zeros((n, n), np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if viol[i] == 0.0 and viol[j] > 0.0:
                dom[i, j] = True
            elif viol[i] > 0.0 and viol[j] > 0.0:
                dom[i, j] = viol[i] < viol[j]
            elif viol[i] == 0.0 and viol[j] == 0.0:
                not_worse = True
                better = False
                for k in range(m):
                    if objs[i, k] > objs[j, k]:
                        not_worse = False
                        break
                    if objs[i, k] < objs[j, k]:
                        better = True
                dom[i, j] = not_worse and better

    rank = np.full(n, -1, np.int64)
    n_dominators = np.zeros(n, np.int64)
    for j in range(n):
        c = 0
        for i in range(n):
            if dom[i, j]:
                c += 1
        n_dominators[j] = c

    current = 0
    assigned = 0
    while assigned < n:
        found = False
        for i in range(n):
            if rank[i] == -1 and n_dominators[i] == 0:
                rank[i] = current
                found = True
        if not found:
            break
        for i in range(n):
            if rank[i] == current:
                assigned += 1
                for j in range(n):
                    if dom[i, j]:
                        n_dominators[j] -= 1
        current += 1
    return rank


def nondominated_ranks_np(objs, viol):
    n = objs.shape[0]
    feas = viol == 0.0
    le = (objs[:, None, :] <= objs[None, :, :]).all(axis=2)
    lt = (objs[:, None, :] < objs[None, :, :]).any(axis=2)
    both_feas = feas[:, None] & feas[None, :]
    dom = (both_feas & le & lt)
    dom |= feas[:, None] & ~feas[None, :]
    dom |= (~feas[:, None] & ~feas[None, :]) & (viol[:, None] < viol[None, :])
    np.fill_diagonal(dom, False)

    rank = np.full(n, -1, dtype=np.int64)
    n_dominators = dom.sum(axis=0)
    current = 0
    remaining = np.ones(n, dtype=bool)
    while remaining.any():
        front = remaining & (n_dominators == 0)
        if not front.any():
            break
        rank[front] = current
        n_dominators = n_dominators - dom[front].sum(axis=0)
        remaining &= ~front
        current += 1
    return rank


if USING_NUMBA:
    eval_macro_population_nb = njit(cache=True)(_eval_macro_loops)
    eval_micro_population_nb = njit(cache=True)(_eval_micro_loops)
    nondominated_ranks_nb = njit(cache=True)(_nd_ranks_loops)
    eval_macro_population = eval_macro_population_nb
    eval_micro_population = eval_micro_population_nb
    nondominated_ranks = nondominated_ranks_nb
else:
    eval_macro_population_nb = None
    eval_micro_population_nb = None
    nondominated_ranks_nb = None
    eval_macro_population = eval_macro_population_np
    eval_micro_population = eval_micro_population_np
    nondominated_ranks = nondominated_ranks_np


def warmup():
    """Trigger JIT compilation on tiny inputs so timing loops stay honest."""
    pop = np.array([[1, 0], [0, 1]], dtype=np.uint8)
    cov = np.array([[True, False]])
    a = np.ones(1)
    d2 = np.zeros((2, 2))
    eval_macro_population(pop, cov, a, np.zeros(1, bool), d2,
                          np.zeros((2, 0)), 0.0, 10.0, 1, 1.0, False)
    eval_micro_population(pop, cov, a, np.ones((1, 2)), d2,
                          np.zeros(2), np.inf, np.zeros(2))
    nondominated_ranks(np.zeros((2, 3)), np.zeros(2))
