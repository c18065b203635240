"""Distance queries over a metric view, exact or with bounded multiplicative slack."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import StructuralError, UnknownVertexError
from .model import MetricView

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def splitmix64(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def pair_hash(seed: int, u, v) -> np.ndarray:
    """Symmetric 64-bit hash of a vertex pair."""
    u = np.asarray(u, dtype=np.uint64)
    v = np.asarray(v, dtype=np.uint64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    with np.errstate(over="ignore"):
        h = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        h = splitmix64(h ^ lo)
        return splitmix64(h ^ (hi * np.uint64(0x100000001B3)))


def dijkstra_heap(adj, source: int) -> np.ndarray:
    """Binary-heap Dijkstra over an adjacency list; unreachable vertices get ``inf``."""
    dist = np.full(len(adj), math.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(len(adj), dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclass(frozen=True)
class BallQuery:
    center: int
    radius: float
    members: frozenset


class DistanceOracle:
    """Distance oracle over all ``nf + nc`` vertices.

    ``backend="exact"`` reports true shortest-path distances.  ``"rounded"``
    multiplies each pair's distance by ``1 + eps * h / 2**64`` where ``h`` is a
    seeded symmetric hash of the pair, so every report lies in
    ``[d, (1+eps) d]``.
    """

    def __init__(self, view: MetricView, eps: float = 0.0, backend: str = "exact", seed: int = 0):
        if backend not in ("exact", "rounded"):
            raise ValueError(f"unknown backend {backend!r}")
        if eps < 0:
            raise ValueError("eps must be non-negative")
        self.view = view
        self.eps = float(eps) if backend == "rounded" else 0.0
        self.backend = backend
        self.seed = int(seed)

    @property
    def n(self) -> int:
        return self.view.n

    @property
    def nf(self) -> int:
        return self.view.n_facilities

    def _check(self, v):
        v = np.asarray(v)
        if v.size and (np.any(v < 0) or np.any(v >= self.n)):
            raise UnknownVertexError(f"vertex outside 0..{self.n - 1}")

    def multiplier(self, u, v) -> np.ndarray:
        if self.backend == "exact":
            return np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape)
        h = pair_hash(self.seed, u, v)
        return 1.0 + self.eps * (h.astype(np.float64) / 2.0**64)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Reported distances between all vertex pairs."""
        d = np.array(self.view.full, dtype=float)
        if self.backend == "rounded":
            idx = np.arange(self.n)
            with np.errstate(invalid="ignore"):
                d = d * self.multiplier(idx[:, None], idx[None, :])
            np.fill_diagonal(d, 0.0)
        d.setflags(write=False)
        return d

    @property
    def exact(self) -> np.ndarray:
        return self.view.full

    def distance(self, u: int, v: int) -> float:
        self._check([u, v])
        return float(self.matrix[u, v])

    def sssp(self, source: int) -> np.ndarray:
        """Distances from ``source`` to every vertex, computed by heap Dijkstra."""
        self._check(source)
        d = dijkstra_heap(self._adj, int(source))
        if self.backend == "rounded":
            with np.errstate(invalid="ignore"):
                d = d * self.multiplier(source, np.arange(self.n))
            d[source] = 0.0
        return d

    @cached_property
    def _adj(self):
        return self.view.adjacency()

    def mssp(self, sources, targets=None) -> tuple[np.ndarray, np.ndarray]:
        """Nearest source and its reported distance for every target vertex.

        Ties go to the lowest source id.  Returns ``(nearest, dist)`` aligned
        with ``targets`` (all vertices by default); ``nearest`` is ``-1`` where
        no source is reachable.
        """
        src = np.unique(np.asarray(list(sources), dtype=int))
        if len(src) == 0:
            raise StructuralError("mssp needs at least one source")
        self._check(src)
        tg = np.arange(self.n) if targets is None else np.asarray(targets, dtype=int)
        self._check(tg)
        sub = self.matrix[np.ix_(src, tg)]
        k = np.argmin(sub, axis=0)
        dist = sub[k, np.arange(len(tg))]
        nearest = np.where(np.isfinite(dist), src[k], -1)
        return nearest, dist

    def exclusive_mssp(self, sources) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nearest *other* source for each source: ``(sources, nearest, dist)``."""
        src = np.unique(np.asarray(list(sources), dtype=int))
        if len(src) < 2:
            raise StructuralError("exclusive mssp needs at least two sources")
        self._check(src)
        sub = np.array(self.matrix[np.ix_(src, src)])
        np.fill_diagonal(sub, math.inf)
        k = np.argmin(sub, axis=0)
        dist = sub[k, np.arange(len(src))]
        nearest = np.where(np.isfinite(dist), src[k], -1)
        return src, nearest, dist

    def ball(self, center: int, radius: float, clients_only: bool = False) -> BallQuery:
        if radius < 0:
            raise ValueError("radius must be non-negative")
        self._check(center)
        row = self.matrix[center]
        idx = np.flatnonzero(row <= radius)
        if clients_only:
            idx = idx[idx >= self.nf]
        return BallQuery(int(center), float(radius), frozenset(int(i) for i in idx))
