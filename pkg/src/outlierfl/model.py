"""Problem instances, solutions and cost evaluation.

Vertex numbering follows the JSON schema: facilities are ``0 .. nf-1`` and
clients are ``nf .. nf+nc-1``.  Inside the solvers facilities and clients are
addressed by their local index (``0 .. nf-1`` and ``0 .. nc-1``); the metric
exposes the facility/client blocks of the vertex distance matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InfeasibleError, StructuralError

TOL = 1e-9


def leq(a, b, tol=TOL):
    """``a <= b`` up to an absolute tolerance scaled by ``max(1, |b|)``."""
    return a <= b + tol * np.maximum(1.0, np.abs(b))


class Variant(str, Enum):
    PLAIN = "plain"
    ROBUST = "robust"
    PENALTY = "penalty"


def _dedupe_edges(edges: np.ndarray) -> np.ndarray:
    # coo -> csr sums duplicates, so keep the lightest parallel edge first
    if len(edges) == 0:
        return edges
    u = np.minimum(edges[:, 0], edges[:, 1])
    v = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((edges[:, 2], v, u))
    e = np.column_stack([u, v, edges[:, 2]])[order]
    keep = np.ones(len(e), dtype=bool)
    keep[1:] = (e[1:, 0] != e[:-1, 0]) | (e[1:, 1] != e[:-1, 1])
    e = e[keep]
    return e[e[:, 0] != e[:, 1]]


@dataclass(frozen=True, eq=False)
class MetricView:
    """Either an explicit facility x client matrix or a weighted graph on F u C.

    An explicit ``nf x nc`` matrix is read as a complete bipartite graph and
    closed under shortest paths, which also defines facility-facility and
    client-client distances.  A square ``(nf+nc) x (nf+nc)`` matrix is taken
    as the full vertex metric.  Unreachable pairs are ``inf``.
    """

    mode: str
    n_facilities: int
    n_clients: int
    matrix: np.ndarray | None = None
    edges: np.ndarray | None = None

    def __post_init__(self):
        nf, nc = self.n_facilities, self.n_clients
        if self.mode == "explicit":
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape not in {(nf, nc), (nf + nc, nf + nc)}:
                raise StructuralError(f"explicit matrix has shape {m.shape}, expected {(nf, nc)}")
            if np.any(m < 0) or np.any(np.isnan(m)):
                raise StructuralError("distances must be non-negative")
            object.__setattr__(self, "matrix", m)
        elif self.mode == "implicit":
            e = np.asarray(self.edges, dtype=float).reshape(-1, 3)
            if len(e) and (np.any(e[:, :2] < 0) or np.any(e[:, :2] >= nf + nc)):
                raise StructuralError("edge endpoint outside vertex range")
            if len(e) and (np.any(e[:, 2] < 0) or not np.all(np.isfinite(e[:, 2]))):
                raise StructuralError("edge weights must be finite and non-negative")
            object.__setattr__(self, "edges", e)
        else:
            raise StructuralError(f"unknown metric mode {self.mode!r}")

    @property
    def n(self) -> int:
        return self.n_facilities + self.n_clients

    def graph_edges(self) -> np.ndarray:
        """Edge list ``(u, v, w)`` of the underlying graph, one row per undirected edge."""
        nf, nc = self.n_facilities, self.n_clients
        if self.mode == "implicit":
            return _dedupe_edges(self.edges)
        m = self.matrix
        if m.shape == (nf, nc):
            ii, jj = np.nonzero(np.isfinite(m))
            e = np.column_stack([ii, jj + nf, m[ii, jj]]).astype(float)
        else:
            ii, jj = np.nonzero(np.isfinite(m) & (np.arange(self.n)[:, None] < np.arange(self.n)))
            e = np.column_stack([ii, jj, m[ii, jj]]).astype(float)
        return _dedupe_edges(e)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for u, v, w in self.graph_edges():
            adj[int(u)].append((int(v), float(w)))
            adj[int(v)].append((int(u), float(w)))
        return adj

    @cached_property
    def full(self) -> np.ndarray:
        """Exact ``n x n`` shortest-path distances between all vertices."""
        if self.mode == "explicit" and self.matrix.shape == (self.n, self.n) and self.n_clients:
            m = self.matrix
            if not np.allclose(m, m.T):
                raise StructuralError("square explicit matrix must be symmetric")
        e = self.graph_edges()
        n = self.n
        g = csr_matrix((e[:, 2], (e[:, 0].astype(int), e[:, 1].astype(int))), shape=(n, n))
        d = dijkstra(g, directed=False)
        d.setflags(write=False)
        return d

    @property
    def fc(self) -> np.ndarray:
        """Facility x client block (``c_ij``)."""
        return self.full[: self.n_facilities, self.n_facilities:]

    @property
    def ff(self) -> np.ndarray:
        return self.full[: self.n_facilities, : self.n_facilities]

    def scaled(self, factor: float) -> "MetricView":
        if self.mode == "explicit":
            return MetricView("explicit", self.n_facilities, self.n_clients, matrix=self.matrix * factor)
        e = self.edges.copy()
        e[:, 2] *= factor
        return MetricView("implicit", self.n_facilities, self.n_clients, edges=e)

    def positive_min(self) -> float:
        vals = self.matrix.ravel() if self.mode == "explicit" else self.edges[:, 2]
        vals = vals[np.isfinite(vals) & (vals > 0)]
        return float(vals.min()) if len(vals) else math.inf


@dataclass(frozen=True, eq=False)
class Instance:
    opening_cost: np.ndarray
    metric: MetricView
    variant: Variant = Variant.PLAIN
    coverage: int | None = None
    penalties: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.opening_cost, dtype=float)
        object.__setattr__(self, "opening_cost", f)
        object.__setattr__(self, "variant", Variant(self.variant))
        if f.shape != (self.metric.n_facilities,):
            raise StructuralError("one opening cost per facility expected")
        if np.any(np.isnan(f)) or np.any(f < 0):
            raise StructuralError("opening costs must be non-negative")
        if self.metric.n_facilities == 0:
            raise StructuralError("instance needs at least one facility")
        if self.variant is Variant.ROBUST:
            if self.coverage is None:
                raise StructuralError("robust instance needs a coverage requirement")
            if not 0 <= int(self.coverage) <= self.n_clients:
                raise InfeasibleError(f"coverage {self.coverage} outside [0, {self.n_clients}]")
            object.__setattr__(self, "coverage", int(self.coverage))
        elif self.coverage is not None:
            raise StructuralError("coverage is only meaningful for the robust variant")
        if self.variant is Variant.PENALTY:
            if self.penalties is None:
                raise StructuralError("penalty instance needs penalties")
            p = np.asarray(self.penalties, dtype=float)
            if p.shape != (self.n_clients,) or np.any(p < 0) or not np.all(np.isfinite(p)):
                raise StructuralError("penalties must be finite, non-negative, one per client")
            object.__setattr__(self, "penalties", p)
        elif self.penalties is not None:
            raise StructuralError("penalties are only meaningful for the penalty variant")

    @property
    def n_facilities(self) -> int:
        return self.metric.n_facilities

    @property
    def n_clients(self) -> int:
        return self.metric.n_clients

    @property
    def facilities(self) -> range:
        return range(self.n_facilities)

    @property
    def clients(self) -> range:
        return range(self.n_clients)

    @property
    def ell(self) -> int:
        """Number of clients allowed to stay unserved (``|C| - p``)."""
        if self.variant is Variant.ROBUST:
            return self.n_clients - self.coverage
        return 0

    @property
    def removed(self) -> np.ndarray:
        """Facilities carrying the ``+inf`` sentinel from cost modification."""
        return np.isinf(self.opening_cost)

    @property
    def dist(self) -> np.ndarray:
        return self.metric.fc


@dataclass(frozen=True, eq=False)
class Solution:
    open: frozenset
    served: frozenset
    outliers: frozenset
    assignment: dict = field(default_factory=dict)
    cost: float = 0.0
    anchor: int | None = None

    def to_dict(self) -> dict:
        return {
            "open": sorted(int(i) for i in self.open),
            "served": sorted(int(j) for j in self.served),
            "outliers": sorted(int(j) for j in self.outliers),
            "assignment": {str(int(j)): int(i) for j, i in sorted(self.assignment.items())},
            "cost": self.cost,
            "anchor": self.anchor,
        }


def _check_structure(inst: Instance, open_, served, outliers, assignment):
    nc = inst.n_clients
    if served & outliers:
        raise StructuralError("a client is both served and an outlier")
    if (served | outliers) != frozenset(range(nc)):
        raise StructuralError("served and outlier sets must partition the clients")
    if any(not 0 <= i < inst.n_facilities for i in open_):
        raise StructuralError("open facility id out of range")
    for j in served:
        if j not in assignment:
            raise StructuralError(f"served client {j} has no assignment")
        if assignment[j] not in open_:
            raise StructuralError(f"client {j} assigned to closed facility {assignment[j]}")
    if any(np.isinf(inst.opening_cost[i]) for i in open_):
        raise StructuralError("a removed (+inf) facility is open")


def evaluate_cost(inst: Instance, sol: Solution) -> float:
    """Objective value of ``sol`` under exact metric distances."""
    open_ = frozenset(sol.open)
    served, outliers = frozenset(sol.served), frozenset(sol.outliers)
    _check_structure(inst, open_, served, outliers, sol.assignment)
    if inst.variant is Variant.ROBUST and len(served) < inst.coverage:
        raise InfeasibleError(f"{len(served)} served clients < coverage {inst.coverage}")
    if inst.variant is Variant.PLAIN and outliers:
        raise StructuralError("plain facility location serves every client")
    cost = float(sum(inst.opening_cost[i] for i in open_))
    if served:
        cols = np.fromiter(served, dtype=int)
        rows = np.fromiter(open_, dtype=int)
        cost += float(inst.dist[np.ix_(rows, cols)].min(axis=0).sum())
    if inst.variant is Variant.PENALTY and outliers:
        cost += float(inst.penalties[np.fromiter(outliers, dtype=int)].sum())
    return cost


def make_solution(inst: Instance, open_, served, anchor=None) -> Solution:
    """Assign each served client to its nearest open facility (ties to lowest id) and price it."""
    open_ = frozenset(int(i) for i in open_)
    served = frozenset(int(j) for j in served)
    outliers = frozenset(range(inst.n_clients)) - served
    assignment = {}
    if served and open_:
        rows = np.array(sorted(open_))
        cols = np.array(sorted(served))
        sub = inst.dist[np.ix_(rows, cols)]
        best = rows[np.argmin(sub, axis=0)]
        assignment = {int(j): int(i) for j, i in zip(cols, best)}
    sol = Solution(open_, served, outliers, assignment, 0.0, anchor)
    return replace(sol, cost=evaluate_cost(inst, sol))


def modify_opening_costs(inst: Instance, anchor: int) -> Instance:
    """Anchor-based cost modification: pricier facilities become ``+inf``, the anchor free."""
    if not 0 <= anchor < inst.n_facilities:
        raise StructuralError(f"anchor {anchor} is not a facility")
    f = inst.opening_cost
    fa = f[anchor]
    g = np.where(f > fa, math.inf, f)
    g[anchor] = 0.0
    return replace(inst, opening_cost=g)


def cost_bucket(f: float, eps: float) -> int | None:
    """Index ``t`` with ``(1+eps)^t <= f < (1+eps)^(t+1)``; ``None`` for zero cost."""
    if f <= 0:
        return None
    base = 1.0 + eps
    t = math.floor(math.log(f) / math.log(base))
    # guard against log rounding at bucket edges
    while base ** t > f:
        t -= 1
    while base ** (t + 1) <= f:
        t += 1
    return t


def anchor_candidates(inst: Instance, eps: float) -> list[int]:
    """Most expensive facility of every non-empty geometric cost bucket.

    Zero-cost facilities form a bucket of their own.  Ties inside a bucket go
    to the lowest facility id.  Removed (``+inf``) facilities never qualify.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    f = inst.opening_cost
    ok = np.flatnonzero(np.isfinite(f))
    if len(ok) == 0:
        raise StructuralError("no facility to anchor on")
    best: dict = {}
    for i in ok:
        b = cost_bucket(f[i], eps)
        if b not in best or f[i] > f[best[b]]:
            best[b] = int(i)
    return sorted(best.values(), key=lambda i: (f[i], i))


def normalize(inst: Instance) -> tuple[Instance, float]:
    """Scale costs, distances and penalties so the smallest positive value is 1.

    Returns the scaled instance and the factor applied (multiply to go back
    with ``1/factor``).
    """
    vals = [inst.metric.positive_min()]
    f = inst.opening_cost
    pos = f[np.isfinite(f) & (f > 0)]
    if len(pos):
        vals.append(float(pos.min()))
    if inst.penalties is not None:
        pp = inst.penalties[inst.penalties > 0]
        if len(pp):
            vals.append(float(pp.min()))
    m = min(vals)
    if not math.isfinite(m) or m <= 0:
        return inst, 1.0
    factor = 1.0 / m
    return (
        replace(
            inst,
            opening_cost=f * factor,
            metric=inst.metric.scaled(factor),
            penalties=None if inst.penalties is None else inst.penalties * factor,
        ),
        factor,
    )


# -- JSON -------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    m = inst.metric
    if m.mode == "explicit":
        metric = {"mode": "explicit", "matrix": m.matrix.tolist()}
    else:
        metric = {"mode": "implicit", "edges": [[int(u), int(v), _num(w)] for u, v, w in m.edges]}
    d = {
        "variant": inst.variant.value,
        "facilities": inst.n_facilities,
        "clients": inst.n_clients,
        "opening_costs": [_num(x) for x in inst.opening_cost],
        "metric": metric,
    }
    if inst.coverage is not None:
        d["coverage"] = inst.coverage
    if inst.penalties is not None:
        d["penalties"] = [_num(x) for x in inst.penalties]
    return d


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def instance_from_dict(d: dict) -> Instance:
    try:
        nf, nc = int(d["facilities"]), int(d["clients"])
        md = d["metric"]
        if md["mode"] == "explicit":
            metric = MetricView("explicit", nf, nc, matrix=np.array(md["matrix"], dtype=float))
        else:
            metric = MetricView("implicit", nf, nc, edges=np.array(md["edges"], dtype=float))
        return Instance(
            opening_cost=np.array(d["opening_costs"], dtype=float),
            metric=metric,
            variant=Variant(d.get("variant", "plain")),
            coverage=d.get("coverage"),
            penalties=None if d.get("penalties") is None else np.array(d["penalties"], dtype=float),
        )
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"malformed instance: {exc}") from exc


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), sort_keys=True) + "\n")
