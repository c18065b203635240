"""Combinatorial dual solutions and their verification.

The duals are built directly from the radii: ``w_ij`` is the clipped surplus
client ``j`` offers facility ``i`` and ``v_j`` is the cheapest
``c_ij + w_ij``.  Feasibility is checked by scanning every constraint, so a
passing certificate is a lower bound on the optimum that does not depend on
the correctness of the construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError
from .model import TOL, Instance, Variant


@dataclass
class RobustDual:
    v: np.ndarray
    w: np.ndarray  # facilities x clients, rows of removed facilities are zero
    q: float
    ell: int
    v_prime: np.ndarray | None = None
    slack: float = 1.0

    @property
    def objective(self) -> float:
        return float(self.v.sum() - self.ell * self.q)


@dataclass
class PenaltyDual:
    v: np.ndarray
    w: np.ndarray
    v_prime: np.ndarray | None = None
    slack: float = 1.0

    @property
    def objective(self) -> float:
        return float(self.v.sum())


def _active(inst: Instance, radii) -> np.ndarray:
    return np.isfinite(inst.opening_cost) & np.isfinite(np.asarray(radii, dtype=float))


def robust_v_prime(inst: Instance, radii) -> tuple[np.ndarray, np.ndarray]:
    """``w_ij = max(0, r_i - c_ij)`` and ``v'_j = min_i max(r_i, c_ij)`` over non-removed facilities."""
    r = np.asarray(radii, dtype=float)
    act = _active(inst, r)
    c = inst.dist
    w = np.zeros_like(c)
    w[act] = np.maximum(0.0, r[act, None] - c[act])
    vp = np.maximum(r[act, None], c[act]).min(axis=0) if act.any() else np.full(inst.n_clients, math.inf)
    return w, vp


def analysis_served_set(v_prime: np.ndarray, served, p: int) -> list[int]:
    """Resize the greedy's served set to ``p`` clients by ``v'`` order.

    Missing clients are taken from the outliers with smallest ``v'``; extra
    ones are dropped starting from the largest ``v'``.  Ties by client id.
    """
    served = sorted(served)
    outl = sorted(set(range(len(v_prime))) - set(served))
    if len(served) < p:
        outl.sort(key=lambda j: (v_prime[j], j))
        served = served + outl[: p - len(served)]
    elif len(served) > p:
        served.sort(key=lambda j: (-v_prime[j], -j))
        served = served[len(served) - p:]
    return sorted(served)


def build_robust_dual(inst_modified: Instance, radii, served, slack: float = 1.0) -> RobustDual:
    """Dual of the coverage LP on the anchor-modified instance.

    ``served`` is the greedy's served set before outliers were determined;
    it is resized to exactly ``p`` clients by ``v'`` order.  Those clients get
    ``v_j = v'_j / slack``; the rest get ``q``, the largest such value.
    """
    inst = inst_modified
    if inst.variant is not Variant.ROBUST:
        raise StructuralError("robust dual needs a robust instance")
    w, vp = robust_v_prime(inst, radii)
    p = inst.coverage
    keep = analysis_served_set(vp, served, p)
    q = float(vp[keep].max() / slack) if keep else 0.0
    v = np.full(inst.n_clients, q)
    if keep:
        v[keep] = vp[keep] / slack
    return RobustDual(v=v, w=w, q=q, ell=inst.ell, v_prime=vp, slack=slack)


def build_penalty_dual(inst: Instance, radii, slack: float = 1.0) -> PenaltyDual:
    """Dual of the penalty LP.

    ``w_ij = max(min(r_i - c_ij, p_j - c_ij), 0)`` where removed facilities
    (``r = inf``) keep ``w_ij = max(p_j - c_ij, 0)``; ``v_j`` is the cheapest
    ``c_ij + w_ij``, which never exceeds ``p_j``.
    """
    if inst.variant is not Variant.PENALTY:
        raise StructuralError("penalty dual needs a penalty instance")
    r = np.asarray(radii, dtype=float)
    c = inst.dist
    pen = inst.penalties
    with np.errstate(invalid="ignore"):
        w = np.maximum(np.minimum(r[:, None] - c, pen[None, :] - c), 0.0)
    w = np.where(np.isfinite(c), w, 0.0)
    reach = c + w
    vp = reach.min(axis=0) if inst.n_facilities else np.zeros(inst.n_clients)
    # a client nobody can reach is capped by its own penalty
    vp = np.minimum(vp, pen)
    return PenaltyDual(v=vp / slack, w=w, v_prime=vp, slack=slack)


@dataclass
class FeasibilityReport:
    ok: bool
    worst: float
    violations: list = field(default_factory=list)
    binding: list = field(default_factory=list)


def check_dual_feasible(dual, inst: Instance, tol: float = TOL) -> FeasibilityReport:
    """Scan every dual constraint; ``ok`` iff no violation exceeds ``tol * max(1, |rhs|)``."""
    nf, nc = inst.n_facilities, inst.n_clients
    v = np.asarray(dual.v, dtype=float)
    w = np.asarray(dual.w, dtype=float)
    if v.shape != (nc,) or w.shape != (nf, nc):
        raise StructuralError(f"dual shapes {v.shape}, {w.shape} do not match instance {nf}x{nc}")
    viol: list = []
    binding: list = []
    worst = 0.0

    def record(kind, idx, lhs, rhs):
        nonlocal worst
        gap = lhs - rhs
        scale = max(1.0, abs(rhs)) if math.isfinite(rhs) else 1.0
        if gap > tol * scale:
            viol.append({"constraint": kind, "index": idx, "lhs": float(lhs), "rhs": float(rhs)})
        elif abs(gap) <= tol * scale:
            binding.append((kind, idx))
        worst = max(worst, gap / scale)

    c = inst.dist
    f = inst.opening_cost
    for i in range(nf):
        if math.isinf(f[i]):
            continue  # removed facility: any w pays for it
        for j in range(nc):
            record("v<=c+w", (i, j), v[j], c[i, j] + w[i, j])
        record("sum_w<=f", i, w[i].sum(), f[i])
    for j in range(nc):
        record("v>=0", j, -v[j], 0.0)
    neg = np.argwhere(w < 0)
    for i, j in neg:
        record("w>=0", (int(i), int(j)), -w[i, j], 0.0)
    if isinstance(dual, RobustDual):
        for j in range(nc):
            record("v<=q", j, v[j], dual.q)
        record("q>=0", None, -dual.q, 0.0)
    else:
        for j in range(nc):
            record("v<=p", j, v[j], inst.penalties[j])
    return FeasibilityReport(ok=not viol, worst=float(worst), violations=viol, binding=binding)


@dataclass
class BoundReport:
    ok: bool
    cost: float
    limit: float
    margin: float


def bound_limit(dual, kind: str, anchor_cost: float = 0.0, eps: float = 0.0, distributed: bool = False) -> float:
    if kind == "robust":
        factor = 3 * (1 + eps) ** 8 if distributed else 3.0
        return factor * dual.objective + anchor_cost
    if kind == "penalty":
        factor = 3 * (1 + eps) ** 4 if distributed else 3.0
        return factor * dual.objective
    raise ValueError(f"unknown bound kind {kind!r}")


def check_bound(sol_cost: float, dual, kind: str, anchor_cost: float = 0.0, eps: float = 0.0,
                distributed: bool = False, tol: float = TOL) -> BoundReport:
    """Robust: ``cost <= 3 obj + f_anchor``; penalty: ``cost <= 3 obj`` (``(1+eps)`` powers when distributed)."""
    limit = bound_limit(dual, kind, anchor_cost, eps, distributed)
    ok = sol_cost <= limit + tol * max(1.0, abs(limit))
    return BoundReport(ok=bool(ok), cost=float(sol_cost), limit=float(limit), margin=float(limit - sol_cost))


# -- JSON --------------------------------------------------------------------

def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def dual_to_dict(dual, report: FeasibilityReport | None = None) -> dict:
    w = np.asarray(dual.w)
    ii, jj = np.nonzero(w)
    d = {
        "kind": "robust" if isinstance(dual, RobustDual) else "penalty",
        "v": [_num(x) for x in dual.v],
        "w": [[int(i), int(j), float(w[i, j])] for i, j in zip(ii, jj)],
        "objective": dual.objective,
        "slack": dual.slack,
    }
    if isinstance(dual, RobustDual):
        d["q"] = dual.q
        d["ell"] = dual.ell
    if report is not None:
        d["feasible"] = report.ok
        d["violations"] = report.violations
    return d


def dual_from_dict(d: dict, inst: Instance):
    w = np.zeros((inst.n_facilities, inst.n_clients))
    for i, j, x in d["w"]:
        if not (0 <= i < inst.n_facilities and 0 <= j < inst.n_clients):
            raise StructuralError(f"w entry ({i},{j}) outside the instance")
        w[int(i), int(j)] = x
    v = np.array([math.inf if x is None else x for x in d["v"]], dtype=float)
    if d.get("kind", "robust") == "robust":
        return RobustDual(v=v, w=w, q=float(d["q"]), ell=int(d["ell"]), slack=float(d.get("slack", 1.0)))
    return PenaltyDual(v=v, w=w, slack=float(d.get("slack", 1.0)))


def dump_certificate(dual, report, path) -> None:
    with open(path, "w") as fh:
        json.dump(dual_to_dict(dual, report), fh, indent=1)
        fh.write("\n")
