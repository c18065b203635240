"""Exact optima of tiny instances by enumerating facility subsets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardError, InfeasibleError, StructuralError
from .model import Instance, Solution, Variant, make_solution

MAX_FACILITIES = 20
LOW_BITS = 10


@dataclass
class OptResult:
    opt_cost: float
    witness: Solution
    enumerated: int


def _subset_tables(costs: np.ndarray, dist: np.ndarray, bits: int):
    """Opening cost and per-client nearest distance for every subset of the first ``bits`` facilities."""
    m = 1 << bits
    fsum = np.zeros(m)
    dmin = np.full((m, dist.shape[1]), math.inf)
    for mask in range(1, m):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        fsum[mask] = fsum[rest] + costs[low]
        dmin[mask] = np.minimum(dmin[rest], dist[low])
    return fsum, dmin


def _enumerate(inst: Instance, score):
    """Yield-free scan: ``score(fsum, dmin) -> per-subset costs``; returns best (cost, mask, count)."""
    nf = inst.n_facilities
    if nf > MAX_FACILITIES:
        raise GuardError(f"{nf} facilities exceed the enumeration guard of {MAX_FACILITIES}")
    costs = inst.opening_cost
    dist = inst.dist
    lb = min(nf, LOW_BITS)
    fl, dl = _subset_tables(costs[:lb], dist[:lb], lb)
    fh, dh = _subset_tables(costs[lb:], dist[lb:], nf - lb)
    best, best_mask = math.inf, 0
    for hi in range(len(fh)):
        with np.errstate(invalid="ignore"):
            vals = score(fl + fh[hi], np.minimum(dl, dh[hi]))
        vals = np.where(np.isnan(vals), math.inf, vals)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_mask = float(vals[k]), (hi << lb) | k
    return best, best_mask, 1 << nf


def _mask_set(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def opt_robust(inst: Instance) -> OptResult:
    """Optimal robust solution: for a fixed open set the ``p`` nearest clients are served."""
    if inst.variant is not Variant.ROBUST:
        raise StructuralError("opt_robust needs a robust instance")
    p = inst.coverage
    if p > inst.n_clients:
        raise InfeasibleError("coverage exceeds the number of clients")

    def score(fsum, dmin):
        if p == 0:
            return fsum
        part = np.partition(dmin, p - 1, axis=1)[:, :p]
        out = fsum + part.sum(axis=1)
        return out

    best, mask, count = _enumerate(inst, score)
    if p == 0:
        # serving nobody with nothing open is free
        return OptResult(0.0, make_solution(inst, [], []), count)
    if math.isinf(best):
        raise InfeasibleError("no facility subset reaches the coverage requirement")
    opened = _mask_set(mask)
    d = inst.dist[opened].min(axis=0)
    served = sorted(inst.clients, key=lambda j: (d[j], j))[:p]
    return OptResult(best, make_solution(inst, opened, served), count)


def opt_penalty(inst: Instance) -> OptResult:
    """Optimal penalty solution: each client pays the smaller of its distance and its penalty."""
    if inst.variant is not Variant.PENALTY:
        raise StructuralError("opt_penalty needs a penalty instance")
    pen = inst.penalties

    def score(fsum, dmin):
        return fsum + np.minimum(dmin, pen).sum(axis=1)

    best, mask, count = _enumerate(inst, score)
    opened = _mask_set(mask)
    if opened:
        d = inst.dist[opened].min(axis=0)
        served = [j for j in inst.clients if d[j] < pen[j]]
    else:
        served = []
    return OptResult(best, make_solution(inst, opened, served), count)


def opt_plain(inst: Instance) -> OptResult:
    """Optimal plain facility location (every client served)."""

    def score(fsum, dmin):
        return fsum + dmin.sum(axis=1)

    best, mask, count = _enumerate(inst, score)
    if mask == 0 or math.isinf(best):
        raise InfeasibleError("some client is unreachable from every facility")
    opened = _mask_set(mask)
    return OptResult(best, make_solution(inst.__class__(inst.opening_cost, inst.metric), opened, inst.clients), count)
