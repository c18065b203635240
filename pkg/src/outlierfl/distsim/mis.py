"""Distance-d independent sets with slack, by Luby-style random marking."""

from __future__ import annotations

import math

import numpy as np


def approximate_mis(sim, W, d: float, eps: float, seed: int = 0, c: float = 2.0, tag: int = 0) -> list[int]:
    """Independent set of ``W`` at distance ``d`` with ``(1+eps)`` slack.

    Phase ``i`` marks every remaining vertex with probability ``2^i / n``.
    Marked vertices whose nearest other marked vertex is farther than ``d``
    join the set, and everything within ``(1+eps) d`` of them leaves ``W``.
    Vertices still left after the last phase are settled one at a time in
    id order.  Distances are the simulator's reported distances.
    """
    W = np.unique(np.asarray(list(W), dtype=int))
    if len(W) == 0:
        return []
    n = sim.oracle.n
    rng = np.random.default_rng([seed, 2, tag])
    phases = math.ceil(math.log2(max(n, 2)))
    iters = math.ceil(c * math.log(max(n, 2)))
    chosen: list[int] = []
    alive = W.copy()
    reach = (1.0 + eps) * d
    for i in range(phases + 1):
        prob = min(1.0, 2.0**i / n)
        for _ in range(iters):
            sim.aggregate("mis:alive")
            if len(alive) == 0:
                return sorted(chosen)
            marked = alive[rng.random(len(alive)) < prob]
            if len(marked) == 0:
                continue
            if len(marked) == 1:
                winners = marked
            else:
                src, _, dist = sim.exclusive_mssp(marked, name="mis:exclusive")
                winners = src[dist > d]
            if len(winners) == 0:
                continue
            chosen.extend(int(v) for v in winners)
            _, dist = sim.mssp(winners, alive, name="mis:cover")
            alive = alive[~(dist <= reach)]
    while len(alive):
        v = int(alive[0])
        chosen.append(v)
        _, dist = sim.mssp([v], alive, name="mis:sweep")
        alive = alive[~(dist <= reach)]
    return sorted(chosen)


def check_mis(dist: np.ndarray, W, I, d: float, sep: float, dom: float) -> tuple[bool, bool]:
    """Post-hoc clause check on exact distances.

    Separation: every pair in ``I`` is at least ``d / sep`` apart.
    Domination: every vertex of ``W`` is within ``d * dom`` of ``I``.
    """
    W = np.asarray(list(W), dtype=int)
    I = np.asarray(list(I), dtype=int)
    if len(I) == 0:
        return True, len(W) == 0
    sub = np.array(dist[np.ix_(I, I)])
    np.fill_diagonal(sub, math.inf)
    tol = 1e-9 * max(1.0, d)
    separated = bool(sub.min(initial=math.inf) >= d / sep - tol)
    dominated = bool((dist[np.ix_(I, W)].min(axis=0) <= d * dom + tol).all()) if len(W) else True
    return separated, dominated
