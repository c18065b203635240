"""Seeded random instance families.

Explicit matrices are produced as shortest-path closures of random weighted
graphs, so they are metrics by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import Instance, MetricView, Variant


def random_tree_graph(n: int, m: int, w_max: int, rng: np.random.Generator) -> np.ndarray:
    """Connected graph: a random spanning tree plus ``m - (n-1)`` extra edges, integer weights in ``1..w_max``."""
    if n < 1:
        raise ValueError("need at least one vertex")
    perm = rng.permutation(n)
    edges = []
    for k in range(1, n):
        edges.append((perm[k], perm[rng.integers(0, k)]))
    extra = max(0, m - (n - 1))
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.append((u, v))
    e = np.array(edges, dtype=float).reshape(-1, 2)
    w = rng.integers(1, w_max + 1, size=len(e)).astype(float)
    return np.column_stack([e, w])


def _variant_extras(variant, nc, rng, coverage=None, pen_max=None):
    variant = Variant(variant)
    cov = pens = None
    if variant is Variant.ROBUST:
        cov = int(rng.integers(0, nc + 1)) if coverage is None else int(coverage)
    elif variant is Variant.PENALTY:
        hi = pen_max if pen_max is not None else 10.0
        pens = rng.integers(0, int(hi) + 1, size=nc).astype(float)
    return variant, cov, pens


@dataclass
class RandomGraph:
    """Implicit metric: connected random graph on ``n`` vertices, about half facilities."""

    n: int
    m: int
    w_max: int = 10
    seed: int = 0
    facility_fraction: float = 0.5

    def build(self, variant="plain", coverage=None, f_max=10, pen_max=None) -> Instance:
        rng = np.random.default_rng(self.seed)
        nf = max(1, min(self.n - 1, int(round(self.n * self.facility_fraction)))) if self.n > 1 else 1
        nc = self.n - nf
        edges = random_tree_graph(self.n, self.m, self.w_max, rng)
        f = rng.integers(0, f_max + 1, size=nf).astype(float)
        variant, cov, pens = _variant_extras(variant, nc, rng, coverage, pen_max)
        return Instance(f, MetricView("implicit", nf, nc, edges=edges), variant, cov, pens)


@dataclass
class RandomMetric:
    """Explicit ``nf x nc`` matrix: metric closure of a random graph on ``F u C``."""

    n_f: int
    n_c: int
    seed: int = 0
    w_max: int = 10
    density: float = 1.5

    def build(self, variant="plain", coverage=None, f_max=10, pen_max=None) -> Instance:
        rng = np.random.default_rng(self.seed)
        n = self.n_f + self.n_c
        edges = random_tree_graph(n, int(self.density * n), self.w_max, rng)
        graph = MetricView("implicit", self.n_f, self.n_c, edges=edges)
        f = rng.integers(0, f_max + 1, size=self.n_f).astype(float)
        variant, cov, pens = _variant_extras(variant, self.n_c, rng, coverage, pen_max)
        matrix = np.array(graph.fc)
        return Instance(f, MetricView("explicit", self.n_f, self.n_c, matrix=matrix), variant, cov, pens)


@dataclass
class PlantedClusters:
    """Star clusters: each center is a facility hub, members hang off it at distance ``spread``.

    Hubs are chained by edges of weight ``gap``; every cluster gets one extra
    facility among its members.
    """

    centers: int
    spread: float = 1.0
    seed: int = 0
    size: int = 4
    gap: float = 20.0

    def build(self, variant="plain", coverage=None, f_max=10, pen_max=None) -> Instance:
        rng = np.random.default_rng(self.seed)
        nf = 2 * self.centers
        nc = self.centers * self.size
        edges = []
        for c in range(self.centers):
            hub, alt = 2 * c, 2 * c + 1
            edges.append((hub, alt, self.spread))
            for k in range(self.size):
                edges.append((hub, nf + c * self.size + k, self.spread))
            if c:
                edges.append((2 * (c - 1), hub, self.gap))
        f = rng.integers(0, f_max + 1, size=nf).astype(float)
        variant, cov, pens = _variant_extras(variant, nc, rng, coverage, pen_max)
        return Instance(f, MetricView("implicit", nf, nc, edges=np.array(edges, dtype=float)), variant, cov, pens)


def tiny_instance(seed: int, variant="robust", max_f=6, max_c=8) -> Instance:
    """One member of the small oracle-checkable corpus (even seeds explicit, odd seeds implicit)."""
    rng = np.random.default_rng(seed)
    nf = int(rng.integers(1, max_f + 1))
    nc = int(rng.integers(1, max_c + 1))
    n = nf + nc
    edges = random_tree_graph(n, int(rng.integers(n - 1, 2 * n + 1)), 10, rng)
    f = rng.integers(0, 11, size=nf).astype(float)
    variant, cov, pens = _variant_extras(variant, nc, rng)
    view = MetricView("implicit", nf, nc, edges=edges)
    if seed % 2 == 0:
        view = MetricView("explicit", nf, nc, matrix=np.array(view.fc))
    return Instance(f, view, variant, cov, pens)
