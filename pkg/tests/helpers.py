"""Independent reference computations used across the tests."""

import itertools
import math

import numpy as np

from outlierfl import Instance, MetricView, Variant


def explicit(f, c, variant="plain", coverage=None, penalties=None):
    c = np.asarray(c, dtype=float)
    return Instance(np.asarray(f, dtype=float), MetricView("explicit", c.shape[0], c.shape[1], matrix=c),
                    Variant(variant), coverage, None if penalties is None else np.asarray(penalties, dtype=float))


def graph(nf, nc, edges, f=None, variant="plain", coverage=None, penalties=None):
    f = np.zeros(nf) if f is None else np.asarray(f, dtype=float)
    return Instance(f, MetricView("implicit", nf, nc, edges=np.asarray(edges, dtype=float)), Variant(variant),
                    coverage, None if penalties is None else np.asarray(penalties, dtype=float))


def bisect_root(fn, f, hi=None, iters=200):
    """Smallest r >= 0 with fn(r) >= f for a non-decreasing continuous fn, by bisection."""
    if f <= 0:
        return 0.0
    lo, hi = 0.0, hi if hi is not None else 1.0
    while fn(hi) < f:
        hi *= 2
        if hi > 1e15:
            return math.inf
    for _ in range(iters):
        mid = (lo + hi) / 2
        if fn(mid) >= f:
            hi = mid
        else:
            lo = mid
    return hi


def floyd_warshall(n, edges):
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    for u, v, w in edges:
        u, v = int(u), int(v)
        d[u, v] = min(d[u, v], w)
        d[v, u] = min(d[v, u], w)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def naive_opt(inst):
    """Enumerate facility subsets and (robust) client subsets explicitly."""
    c = inst.dist
    f = inst.opening_cost
    best = math.inf
    nf, nc = inst.n_facilities, inst.n_clients
    for size in range(nf + 1):
        for S in itertools.combinations(range(nf), size):
            fs = sum(f[i] for i in S)
            d = c[list(S)].min(axis=0) if S else np.full(nc, math.inf)
            if inst.variant is Variant.PENALTY:
                best = min(best, fs + sum(min(d[j], inst.penalties[j]) for j in range(nc)))
            elif inst.variant is Variant.ROBUST:
                for CS in itertools.combinations(range(nc), inst.coverage):
                    val = fs + sum(d[j] for j in CS) if CS else fs
                    best = min(best, val)
            else:
                best = min(best, fs + d.sum())
    return best
