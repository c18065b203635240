"""Sequential greedy solvers: plain, robust (coverage) and penalty facility location.

All three share the same skeleton.  Every facility gets a radius that
balances its opening cost against the clipped surplus it offers nearby
clients; facilities are scanned in radius order and one is opened unless an
already-open facility sits within twice its radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, StructuralError
from .metric import DistanceOracle
from .model import (
    Instance,
    Solution,
    Variant,
    anchor_candidates,
    evaluate_cost,
    make_solution,
    modify_opening_costs,
)


# -- radii ------------------------------------------------------------------

def clipped_root(f: float, starts: np.ndarray, ends: np.ndarray) -> float:
    """Smallest ``r >= 0`` with ``sum_j clip(r - a_j, 0, b_j - a_j) == f``.

    ``starts``/``ends`` are the breakpoints ``a_j <= b_j`` (``b_j`` may be
    ``inf``).  The left side is continuous, piecewise linear and
    non-decreasing, so one sorted sweep over breakpoints finds the root
    exactly.  Returns ``inf`` when the function never reaches ``f``.
    """
    if math.isinf(f):
        raise StructuralError("radius of a removed (+inf) facility is undefined")
    if f <= 0:
        return 0.0
    a = np.asarray(starts, dtype=float)
    b = np.asarray(ends, dtype=float)
    keep = np.isfinite(a) & (b > a)
    a, b = a[keep], b[keep]
    # events: +1 slope at a_j, -1 slope at b_j
    pos = np.concatenate([a, b[np.isfinite(b)]])
    kind = np.concatenate([np.ones(len(a)), -np.ones(int(np.isfinite(b).sum()))])
    if len(pos) == 0:
        return math.inf
    order = np.lexsort((kind, pos))
    pos, kind = pos[order], kind[order]
    ends_fin = b[np.isfinite(b)]
    # S(r) on a segment = active * r - sum_active_a + sum_done (b - a)
    active = 0
    sum_a = 0.0
    done = 0.0
    ai = bi = 0
    a_sorted = np.sort(a)
    a_of_end = a[np.isfinite(b)][np.argsort(ends_fin, kind="stable")]
    for x, k in zip(pos, kind):
        if active > 0:
            r = (f - done + sum_a) / active
            if r <= x:
                return max(r, 0.0)
        if k > 0:
            active += 1
            sum_a += a_sorted[ai]
            ai += 1
        else:
            active -= 1
            aj = a_of_end[bi]
            sum_a -= aj
            done += x - aj
            bi += 1
    if active > 0:
        return max((f - done + sum_a) / active, 0.0)
    return math.inf


def plain_radius(f: float, dists) -> float:
    d = np.asarray(dists, dtype=float)
    return clipped_root(f, d, np.full_like(d, math.inf))


def penalty_radius(f: float, dists, penalties) -> float:
    """Penalty-capped radius; ``inf`` marks a facility whose capped surplus cannot pay ``f``."""
    if math.isinf(f):
        return math.inf
    d = np.asarray(dists, dtype=float)
    p = np.asarray(penalties, dtype=float)
    fin = np.isfinite(d)
    cap = float(np.maximum(p[fin] - d[fin], 0.0).sum())
    if cap < f:
        return math.inf
    return clipped_root(f, d, np.maximum(p, d))


def plain_surplus(r: float, dists) -> float:
    d = np.asarray(dists, dtype=float)
    return float(np.maximum(r - d[np.isfinite(d)], 0.0).sum())


def penalty_surplus(r: float, dists, penalties) -> float:
    d = np.asarray(dists, dtype=float)
    p = np.asarray(penalties, dtype=float)
    fin = np.isfinite(d)
    return float(np.maximum(np.minimum(r - d[fin], p[fin] - d[fin]), 0.0).sum())


@dataclass
class RadiusTable:
    radii: np.ndarray
    kind: str = "plain"

    @property
    def removed(self) -> np.ndarray:
        return np.isinf(self.radii)


def solve_radius_plain(inst: Instance, i: int) -> float:
    return plain_radius(float(inst.opening_cost[i]), inst.dist[i])


def solve_radius_penalty(inst: Instance, i: int) -> float:
    if inst.penalties is None:
        raise StructuralError("penalty radius needs penalties")
    return penalty_radius(float(inst.opening_cost[i]), inst.dist[i], inst.penalties)


def radius_table(inst: Instance, kind: str = "plain") -> RadiusTable:
    """Radii of every facility; removed (``+inf`` cost) facilities get ``inf``."""
    r = np.full(inst.n_facilities, math.inf)
    for i in inst.facilities:
        if math.isinf(inst.opening_cost[i]):
            continue
        r[i] = solve_radius_plain(inst, i) if kind == "plain" else solve_radius_penalty(inst, i)
    return RadiusTable(r, kind)


# -- greedy opening ----------------------------------------------------------

@dataclass
class GreedyTrace:
    order: list
    radii: np.ndarray
    opened: list = field(default_factory=list)
    closed_by: dict = field(default_factory=dict)
    served_at: np.ndarray | None = None  # iteration that first served each client, -1 if never
    processed: int = 0

    def served_after(self, it: int) -> frozenset:
        """Clients served once the first ``it + 1`` facilities were processed (``C_i``)."""
        return frozenset(int(j) for j in np.flatnonzero((self.served_at >= 0) & (self.served_at <= it)))

    @property
    def served(self) -> frozenset:
        return frozenset(int(j) for j in np.flatnonzero(self.served_at >= 0))


def greedy_open(radii: RadiusTable, oracle: DistanceOracle, stop=None) -> GreedyTrace:
    """Scan facilities by radius (ties by id) and open each one with no open facility within ``2 r``.

    After each step every client within the current radius of some processed
    facility counts as served.  ``stop(served_mask)`` ends the scan early.
    """
    nf = oracle.nf
    ff = oracle.matrix[:nf, :nf]
    fc = oracle.matrix[:nf, nf:]
    r = radii.radii
    order = [int(i) for i in np.lexsort((np.arange(nf), r)) if np.isfinite(r[i])]
    nc = fc.shape[1]
    trace = GreedyTrace(order=order, radii=r, served_at=np.full(nc, -1, dtype=int))
    mind = np.full(nc, math.inf)
    for it, i in enumerate(order):
        blockers = [o for o in trace.opened if ff[o, i] <= 2 * r[i]]
        if blockers:
            trace.closed_by[i] = min(blockers, key=lambda o: (ff[o, i], o))
        else:
            trace.opened.append(i)
        np.minimum(mind, fc[i], out=mind)
        newly = (mind <= r[i]) & (trace.served_at < 0)
        trace.served_at[newly] = it
        trace.processed = it + 1
        if stop is not None and stop(trace.served_at >= 0):
            break
    return trace


# -- drivers -----------------------------------------------------------------

def _nearest_open(inst: Instance, opened) -> np.ndarray:
    if not opened:
        return np.full(inst.n_clients, math.inf)
    return inst.dist[np.array(sorted(opened))].min(axis=0)


def determine_outliers(inst: Instance, opened, served) -> frozenset:
    """Resize the served set to exactly ``p`` clients.

    Too many outliers: the closest outliers to the open set join the served
    set.  Too few: the farthest served clients become outliers.  Ties by id.
    """
    ell = inst.ell
    d = _nearest_open(inst, opened)
    served = set(served)
    outl = [j for j in inst.clients if j not in served]
    if len(outl) > ell:
        outl.sort(key=lambda j: (d[j], j))
        served.update(outl[: len(outl) - ell])
    elif len(outl) < ell:
        cs = sorted(served, key=lambda j: (-d[j], j))
        served.difference_update(cs[: ell - len(outl)])
    return frozenset(served)


def prune_unused(inst: Instance, sol: Solution) -> Solution:
    """Close open facilities that serve nobody; the cost can only drop."""
    used = set(sol.assignment.values())
    if used == set(sol.open):
        return sol
    return make_solution(inst, used, sol.served, anchor=sol.anchor)


@dataclass
class RobustTrial:
    anchor: int
    modified: Instance
    radii: RadiusTable
    trace: GreedyTrace
    pre_outlier_served: frozenset
    solution: Solution | None
    cost: float
    cost_modified: float


def robust_trial(inst: Instance, anchor: int, oracle: DistanceOracle | None = None) -> RobustTrial:
    mod = modify_opening_costs(inst, anchor)
    oracle = oracle or DistanceOracle(inst.metric)
    radii = radius_table(mod, "plain")
    ell, nc = inst.ell, inst.n_clients
    trace = greedy_open(radii, oracle, stop=lambda s: nc - int(s.sum()) <= ell)
    pre = trace.served
    served = determine_outliers(inst, trace.opened, pre)
    d = _nearest_open(inst, trace.opened)
    if any(math.isinf(d[j]) for j in served):
        return RobustTrial(anchor, mod, radii, trace, pre, None, math.inf, math.inf)
    sol = prune_unused(inst, make_solution(inst, trace.opened, served, anchor=anchor))
    return RobustTrial(anchor, mod, radii, trace, pre, sol, sol.cost, evaluate_cost(mod, sol))


def robust_facloc_trials(inst: Instance, eps: float, oracle: DistanceOracle | None = None) -> list[RobustTrial]:
    if inst.variant is not Variant.ROBUST:
        raise StructuralError("robust solver needs a robust instance")
    reach = np.isfinite(inst.dist).any(axis=0).sum()
    if reach < inst.coverage:
        raise InfeasibleError(f"only {reach} clients reachable, coverage {inst.coverage}")
    oracle = oracle or DistanceOracle(inst.metric)
    return [robust_trial(inst, a, oracle) for a in anchor_candidates(inst, eps)]


def best_trial(trials):
    best = min(range(len(trials)), key=lambda t: (trials[t].cost, t))
    if math.isinf(trials[best].cost):
        raise InfeasibleError("no anchor yields a solution meeting the coverage requirement")
    return trials[best]


def robust_facloc(inst: Instance, eps: float) -> Solution:
    """Cheapest solution over all anchor guesses; serves exactly ``p`` clients."""
    return best_trial(robust_facloc_trials(inst, eps)).solution


@dataclass
class PenaltyRun:
    radii: RadiusTable
    trace: GreedyTrace
    solution: Solution


def penalty_facloc_run(inst: Instance, oracle: DistanceOracle | None = None) -> PenaltyRun:
    if inst.variant is not Variant.PENALTY:
        raise StructuralError("penalty solver needs a penalty instance")
    oracle = oracle or DistanceOracle(inst.metric)
    radii = radius_table(inst, "penalty")
    trace = greedy_open(radii, oracle)
    d = _nearest_open(inst, trace.opened)
    served = [j for j in inst.clients if d[j] <= inst.penalties[j]]
    return PenaltyRun(radii, trace, make_solution(inst, trace.opened, served))


def penalty_facloc(inst: Instance) -> Solution:
    """Open greedily by penalty-capped radii; serve a client iff its distance is at most its penalty."""
    return penalty_facloc_run(inst).solution


def mettu_plaxton(inst: Instance) -> Solution:
    """Plain facility location: every client is served."""
    oracle = DistanceOracle(inst.metric)
    radii = radius_table(inst, "plain")
    trace = greedy_open(radii, oracle)
    if not np.isfinite(_nearest_open(inst, trace.opened)).all():
        raise InfeasibleError("some client is unreachable from every open facility")
    return make_solution(inst, trace.opened, inst.clients)
