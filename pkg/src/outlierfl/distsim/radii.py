"""Approximate radii from ring-count estimates.

Radii live on the grid ``(1+eps)^(t-1)``: ``t`` is the first ring index at
which a lower bound on the facility's clipped surplus, built from ring
counts, exceeds its opening cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nbd import ring_index


@dataclass
class ApproxRadiusTable:
    radii: np.ndarray
    kind: str = "plain"
    t: np.ndarray | None = None

    @property
    def removed(self) -> np.ndarray:
        return np.isinf(self.radii)


def ring_widths(rings: int, eps: float) -> np.ndarray:
    """``(1+eps)^(i+1) - (1+eps)^i`` for ``i = 0 .. rings-1``."""
    b = (1.0 + eps) ** np.arange(rings + 1, dtype=float)
    return np.diff(b)


def penalty_class(p, eps: float) -> np.ndarray:
    """Class ``b = floor(log_{1+eps} p)`` of each penalty; ``-1`` for zero penalties.

    Penalties in ``(0, 1)`` land in class ``0`` as well, which keeps the
    class lower bound ``(1+eps)^b`` valid once values are normalized to be
    at least one.
    """
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, -1, dtype=np.int64)
    pos = p > 0
    if pos.any():
        base = 1.0 + eps
        b = np.floor(np.log(np.maximum(p[pos], 1.0)) / math.log(base)).astype(np.int64)
        b = np.where(base ** b > np.maximum(p[pos], 1.0), b - 1, b)
        b = np.where(base ** (b + 1) <= p[pos], b + 1, b)
        out[pos] = np.maximum(b, 0)
    return out


def lambda_bound(counts: np.ndarray, t: int, b: int | None, eps: float) -> float:
    """Lower bound on a facility's surplus at radius ``(1+eps)^t`` from class ``b`` clients.

    Every class-``b`` client pays at least ``(1+eps)^b``, so its clipped
    surplus is at least ``(1+eps)^min(t,b) - d``.  Summing ring counts times
    ring widths up to that cap never exceeds the true surplus.  ``b=None``
    means no penalty cap.
    """
    m = t if b is None else min(t, b)
    if m <= 0:
        return 0.0
    return float(np.dot(counts[:m], ring_widths(m, eps)))


def _first_exceeding(cum: np.ndarray, f: float) -> int | None:
    """Smallest ``t >= 1`` with ``cum[t] > f``."""
    hit = np.flatnonzero(cum[1:] > f)
    return int(hit[0]) + 1 if len(hit) else None


def approx_radii(estimates, opening_cost, eps: float, kind: str = "plain", facilities=None,
                 class_estimates: dict | None = None) -> ApproxRadiusTable:
    """Grid radii for the facility vertices.

    Plain: ``r = (1+eps)^(t-1)`` for the smallest ``t >= 1`` with
    ``sum_{i<=t} q_i * width_i > f``; ``f = 0`` gives ``r = 0``.
    Penalty: ``class_estimates`` maps each class ``b`` to its estimates and the
    per-class bounds from ``lambda_bound`` are summed; no qualifying ``t``
    gives ``r = inf`` (facility removed).  ``+inf`` opening costs stay removed.
    """
    f = np.asarray(opening_cost, dtype=float)
    facilities = np.arange(len(f)) if facilities is None else np.asarray(facilities)
    radii = np.full(len(f), math.inf)
    ts = np.full(len(f), -1, dtype=np.int64)
    src = estimates if estimates is not None else next(iter(class_estimates.values()), None)
    for i, v in enumerate(facilities):
        fi = f[i]
        if math.isinf(fi):
            continue
        if fi <= 0:
            radii[i], ts[i] = 0.0, 0
            continue
        if kind == "plain":
            row = estimates.dist[v]
            fin = row[np.isfinite(row)]
            if len(fin) == 0:
                continue
            rings = int(ring_index(np.array([fin.max()]), eps)[0]) + 2
            q = estimates.ring_counts(v, rings)
            cum = np.cumsum(q * ring_widths(rings, eps))
            t = _first_exceeding(cum, fi)
            if t is None:
                # beyond the farthest participant the count is constant
                total = q[-1]
                if total <= 0:
                    continue
                base = 1.0 + eps
                need = (fi - cum[-1]) / total + base ** rings
                t = max(rings, math.ceil(math.log(need) / math.log(base)) - 1)
                while cum[-1] + total * (base ** (t + 1) - base ** rings) <= fi:
                    t += 1
                while t - 1 >= rings and cum[-1] + total * (base ** t - base ** rings) > fi:
                    t -= 1
        else:
            if not class_estimates:
                continue
            max_b = max(class_estimates)
            row_max = 0.0
            for est in class_estimates.values():
                row = est.dist[v]
                fin = row[np.isfinite(row)]
                if len(fin):
                    row_max = max(row_max, fin.max())
            rings = max(int(ring_index(np.array([row_max]), eps)[0]), max_b) + 2
            total = np.zeros(rings)
            for b, est in class_estimates.items():
                q = est.ring_counts(v, rings)
                w = q * ring_widths(rings, eps)
                w[b:] = 0.0  # cap at (1+eps)^b
                total += w
            cum = np.concatenate([[0.0], np.cumsum(total)])  # cum[t] = bound at radius (1+eps)^t
            t = _first_exceeding(cum, fi)
            if t is None:
                continue
        radii[i] = (1.0 + eps) ** (t - 1)
        ts[i] = t
    return ApproxRadiusTable(radii, kind, ts)
