"""Neighborhood-size estimates from min-rank sketches.

Every participant draws a uniform rank per repetition, rounded down to a
geometric grid.  The smallest rank inside a ball is about ``1/(size+1)``, so
averaging it over many repetitions and inverting estimates the ball size.
Ranks are kept as integer grid indices; comparing indices is the same as
comparing the rounded ranks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def ring_index(d: np.ndarray, eps: float) -> np.ndarray:
    """Smallest ``i >= 0`` with ``d <= (1+eps)^i`` (``-1`` for ``inf``)."""
    d = np.asarray(d, dtype=float)
    out = np.full(d.shape, -1, dtype=np.int64)
    fin = np.isfinite(d)
    small = fin & (d <= 1.0)
    out[small] = 0
    big = fin & ~small
    if big.any():
        base = 1.0 + eps
        i = np.ceil(np.log(d[big]) / math.log(base)).astype(np.int64)
        # fix log rounding at ring edges
        i = np.where(base ** (i - 1) >= d[big], i - 1, i)
        i = np.where(base ** i < d[big], i + 1, i)
        out[big] = i
    return out


def ring_radius(i, eps: float):
    return (1.0 + eps) ** np.asarray(i, dtype=float)


@dataclass
class NbdEstimates:
    """Sketch state: participants, their grid-rounded ranks and the reported distance rows."""

    eps: float
    eps_prime: float
    reps: int
    grid: int
    n: int
    participants: np.ndarray
    rank_idx: np.ndarray  # reps x participants
    dist: np.ndarray      # reported distances, all vertices x participants

    def restrict(self, mask: np.ndarray) -> "NbdEstimates":
        """Same ranks, fewer participants (one penalty class)."""
        return NbdEstimates(self.eps, self.eps_prime, self.reps, self.grid, self.n,
                            self.participants[mask], self.rank_idx[:, mask], self.dist[:, mask])

    def rank_values(self, idx: np.ndarray) -> np.ndarray:
        return (1.0 + self.eps_prime) ** idx.astype(float) / float(self.n) ** 2

    def ring_counts(self, v: int, rings: int) -> np.ndarray:
        """Estimated ``|B(v, (1+eps)^i)|`` among participants for ``i = 0 .. rings-1``."""
        out = np.zeros(rings)
        if len(self.participants) == 0 or rings == 0:
            return out
        ri = ring_index(self.dist[v], self.eps)
        ok = (ri >= 0) & (ri < rings)
        if not ok.any():
            return out
        order = np.argsort(ri[ok], kind="stable")
        cols = np.flatnonzero(ok)[order]
        rings_sorted = ri[cols]
        starts = np.flatnonzero(np.r_[True, rings_sorted[1:] != rings_sorted[:-1]])
        mins = np.minimum.reduceat(self.rank_idx[:, cols], starts, axis=1)
        mins = np.minimum.accumulate(mins, axis=1)
        est = 1.0 / self.rank_values(mins).mean(axis=0) - 1.0
        first = rings_sorted[starts]
        # rings between distinct participant rings repeat the previous estimate
        pos = np.searchsorted(first, np.arange(rings), side="right") - 1
        out = np.where(pos >= 0, est[np.maximum(pos, 0)], 0.0)
        return out

    def query(self, v: int, r: float) -> float:
        """Estimated number of participants within reported distance ``r`` of ``v``."""
        inside = self.dist[v] <= r
        if not inside.any():
            return 0.0
        m = self.rank_idx[:, inside].min(axis=1)
        return float(1.0 / self.rank_values(m).mean() - 1.0)


@dataclass
class ExactCounts:
    """Drop-in replacement for the sketch that reports true ball sizes."""

    eps: float
    participants: np.ndarray
    dist: np.ndarray

    def restrict(self, mask: np.ndarray) -> "ExactCounts":
        return ExactCounts(self.eps, self.participants[mask], self.dist[:, mask])

    def ring_counts(self, v: int, rings: int) -> np.ndarray:
        ri = ring_index(self.dist[v], self.eps)
        ri = ri[ri >= 0]
        return np.cumsum(np.bincount(ri[ri < rings], minlength=rings)[:rings]).astype(float)

    def query(self, v: int, r: float) -> float:
        return float((self.dist[v] <= r).sum())


def sketch_size(n: int, eps: float, c: float = 8.0) -> tuple[float, int, int]:
    """``(eps', repetitions, grid size)`` for ``n`` vertices."""
    ep = eps / (eps + 4.0)
    ln = math.log(max(n, 2))
    reps = math.ceil(c * ln / ep**2)
    grid = math.ceil(2.0 * math.log(max(n, 2)) / math.log1p(ep))
    return ep, reps, grid


def nbd_size_estimates(sim, eps: float, participants, seed: int = 0, c: float = 8.0,
                       name: str = "nbd") -> NbdEstimates:
    """Draw the rank sketch for ``participants`` and bill one shortest-path call per (repetition, grid value)."""
    oracle = sim.oracle
    n = oracle.n
    ep, reps, grid = sketch_size(n, eps, c)
    part = np.asarray(sorted(int(u) for u in participants), dtype=int)
    rng = np.random.default_rng([seed, 1])
    # ranks are drawn for every vertex so a participant's rank does not depend on who else participates
    u = rng.random((reps, n))
    u = np.clip(u, 1.0 / n**2, 1.0)
    idx = np.floor(np.log(u * n**2) / math.log1p(ep) ).astype(np.int64)
    idx = np.clip(idx, 0, grid).astype(np.int16)
    est = NbdEstimates(eps, ep, reps, grid, n, part, idx[:, part], np.asarray(oracle.matrix)[:, part])
    if len(part):
        rounds = sim.charge_model.mssp_rounds(n, sim.cluster.k, eps)
        sim.charge(name + ":mssp", rounds, 2 * int(sim.cluster.load(range(n)).max()), times=reps * (grid + 1))
    return est


def exact_counts(sim, eps: float, participants) -> ExactCounts:
    part = np.asarray(sorted(int(u) for u in participants), dtype=int)
    return ExactCounts(eps, part, np.asarray(sim.oracle.matrix)[:, part])
