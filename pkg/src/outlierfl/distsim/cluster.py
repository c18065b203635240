"""Machines, vertex partition and the per-round word ledger.

Two kinds of rounds are tracked.  Executed rounds move concrete message
volumes between machines and are checked against the per-link bandwidth.
Charged rounds stand in for primitives whose result is computed centrally
(shortest paths) and are billed by a configurable formula.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import AccountingError, StructuralError
from ..metric import DistanceOracle


@dataclass
class Cluster:
    k: int
    partition: np.ndarray
    bandwidth_words: int = 16
    rng_seed: int = 0
    mode: str = "random"

    @property
    def n(self) -> int:
        return len(self.partition)

    def hosted(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.partition == m)

    def load(self, vertices) -> np.ndarray:
        """Number of the given vertices hosted on each machine."""
        v = np.asarray(list(vertices), dtype=int)
        return np.bincount(self.partition[v], minlength=self.k) if len(v) else np.zeros(self.k, dtype=int)


def make_cluster(n_vertices: int, k: int, seed: int = 0, bandwidth_words: int = 16,
                 congested_clique: bool = False) -> Cluster:
    """Uniform random vertex-to-machine assignment, or a bijection in congested-clique mode."""
    if k < 1:
        raise StructuralError("need at least one machine")
    if bandwidth_words < 1:
        raise StructuralError("bandwidth must be at least one word")
    if congested_clique:
        if k != n_vertices:
            raise StructuralError("congested clique needs one machine per vertex")
        return Cluster(k, np.arange(n_vertices), bandwidth_words, seed, "congested-clique")
    rng = np.random.default_rng([seed, 0])
    return Cluster(k, rng.integers(0, k, size=n_vertices), bandwidth_words, seed, "random")


@dataclass
class ChargeModel:
    """Rounds billed for one shortest-path primitive: ``ceil(c1 * (n/k) * log2(n)^2 / eps^eps_power)``."""

    c1: float = 1.0
    eps_power: float = 0.0

    def mssp_rounds(self, n: int, k: int, eps: float) -> int:
        lg = math.log2(max(n, 2))
        scale = eps ** self.eps_power if eps > 0 else 1.0
        return max(1, math.ceil(self.c1 * (n / k) * lg * lg / scale))


@dataclass
class SimTranscript:
    k: int
    bandwidth_words: int
    seed: int
    rounds_executed: int = 0
    charged_only: int = 0
    sent: list = field(default_factory=list)
    received: list = field(default_factory=list)
    primitive_log: list = field(default_factory=list)

    @property
    def charged_rounds(self) -> int:
        return self.rounds_executed + self.charged_only

    def violations(self) -> int:
        cap = (self.k - 1) * self.bandwidth_words
        return int(sum(int((s > cap).sum() + (r > cap).sum()) for s, r in zip(self.sent, self.received)))

    def to_dict(self) -> dict:
        return {
            "charged_rounds": self.charged_rounds,
            "executed_rounds": self.rounds_executed,
            "per_primitive": [
                {"name": e["name"], "rounds": e["rounds"], "max_machine_load_words": e["load"]}
                for e in self.primitive_log
            ],
            "bandwidth_violations": self.violations(),
            "seed": self.seed,
            "k": self.k,
            "B": self.bandwidth_words,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


class Simulator:
    """One simulation run: a cluster, a distance oracle and the transcript they fill."""

    def __init__(self, cluster: Cluster, oracle: DistanceOracle, eps: float,
                 charge: ChargeModel | None = None, mssp_backend: str = "charged"):
        if mssp_backend not in ("charged", "bellman-ford"):
            raise ValueError(f"unknown mssp backend {mssp_backend!r}")
        if cluster.n != oracle.n:
            raise StructuralError("cluster and metric disagree on the vertex count")
        self.cluster = cluster
        self.oracle = oracle
        self.eps = eps
        self.charge_model = charge or ChargeModel()
        self.backend = mssp_backend
        self.t = SimTranscript(cluster.k, cluster.bandwidth_words, cluster.rng_seed)
        self._adj = None

    # -- ledger --------------------------------------------------------------
    def charge(self, name: str, rounds: int, load: int = 0, times: int = 1) -> None:
        self.t.charged_only += rounds * times
        self.t.primitive_log.append({"name": name, "rounds": rounds * times, "load": int(load)})

    def exchange(self, name: str, words: np.ndarray) -> int:
        """Deliver a ``k x k`` matrix of words, splitting links over as many rounds as bandwidth needs."""
        k, B = self.cluster.k, self.cluster.bandwidth_words
        words = np.array(words, dtype=np.int64)
        np.fill_diagonal(words, 0)  # local delivery is free
        rounds = max(1, math.ceil(words.max() / B)) if words.size else 1
        left = words
        for _ in range(rounds):
            now = np.minimum(left, B)
            left = left - now
            self.t.sent.append(now.sum(axis=1).astype(np.int32))
            self.t.received.append(now.sum(axis=0).astype(np.int32))
        self.t.rounds_executed += rounds
        self.t.primitive_log.append({"name": name, "rounds": rounds, "load": int(words.sum(axis=1).max(initial=0))})
        return rounds

    def broadcast(self, name: str, source_vertex: int, words: int = 1) -> int:
        k = self.cluster.k
        m = np.zeros((k, k), dtype=np.int64)
        m[self.cluster.partition[source_vertex], :] = words
        return self.exchange(name, m)

    def aggregate(self, name: str, words: int = 1) -> int:
        """Convergecast a per-machine value to machine 0 and broadcast the total back."""
        k = self.cluster.k
        up = np.zeros((k, k), dtype=np.int64)
        up[:, 0] = words
        down = np.zeros((k, k), dtype=np.int64)
        down[0, :] = words
        return self.exchange(name + ":up", up) + self.exchange(name + ":down", down)

    # -- shortest paths ------------------------------------------------------
    def mssp(self, sources, targets=None, name="mssp"):
        if self.backend == "bellman-ford":
            nearest, dist, _, _ = self._bellman_ford(sources, name)
            tg = np.arange(self.oracle.n) if targets is None else np.asarray(targets, dtype=int)
            return nearest[tg], dist[tg]
        return charged_mssp(self, sources, targets, name)

    def exclusive_mssp(self, sources, name="exclusive_mssp"):
        src = np.unique(np.asarray(list(sources), dtype=int))
        if self.backend == "bellman-ford":
            if len(src) < 2:
                raise StructuralError("exclusive mssp needs at least two sources")
            n1, d1, n2, d2 = self._bellman_ford(src, name)
            own = n1[src] == src
            return src, np.where(own, n2[src], n1[src]), np.where(own, d2[src], d1[src])
        res = self.oracle.exclusive_mssp(src)
        self._bill_mssp(name, len(self.cluster.partition))
        return res

    def _bill_mssp(self, name, n_results):
        c = self.cluster
        rounds = self.charge_model.mssp_rounds(c.n, c.k, self.eps)
        payload = 2 * np.bincount(c.partition, minlength=c.k)
        if payload.max() > rounds * c.k * c.bandwidth_words:
            raise AccountingError(f"{name}: payload {payload.max()} words exceeds {rounds} charged rounds")
        self.charge(name, rounds, int(payload.max()))
        return rounds

    def _bellman_ford(self, sources, name):
        """Distributed Bellman-Ford keeping the two best labels from distinct sources."""
        if self._adj is None:
            self._adj = self.oracle.view.adjacency()
        adj = self._adj
        part = self.cluster.partition
        k = self.cluster.k
        n = len(adj)
        inf = math.inf
        lab = [[(inf, -1), (inf, -1)] for _ in range(n)]
        changed = set()
        for s in np.unique(np.asarray(list(sources), dtype=int)):
            lab[s][0] = (0.0, int(s))
            changed.add(int(s))
        while changed:
            words = np.zeros((k, k), dtype=np.int64)
            for u in changed:
                for m in {int(part[v]) for v, _ in adj[u]}:
                    words[part[u], m] += 4
            self.exchange(name + ":bf", words)
            nxt = set()
            snapshot = {u: list(lab[u]) for u in changed}
            for u, labels in snapshot.items():
                for v, w in adj[u]:
                    for du, su in labels:
                        if su < 0:
                            continue
                        if _offer(lab[v], du + w, su):
                            nxt.add(v)
            changed = nxt
        n1 = np.array([l[0][1] for l in lab])
        d1 = np.array([l[0][0] for l in lab])
        n2 = np.array([l[1][1] for l in lab])
        d2 = np.array([l[1][0] for l in lab])
        return n1, d1, n2, d2


def _offer(labels, d, s) -> bool:
    """Insert ``(d, s)`` into a best-two list with distinct sources; report whether it changed."""
    key = (d, s)
    if labels[0][1] == s:
        if key < labels[0]:
            labels[0] = key
            return True
        return False
    if labels[1][1] == s:
        if key < labels[1]:
            labels[1] = key
            if labels[1] < labels[0]:
                labels[0], labels[1] = labels[1], labels[0]
            return True
        return False
    if key < labels[0]:
        labels[1] = labels[0]
        labels[0] = key
        return True
    if key < labels[1]:
        labels[1] = key
        return True
    return False


def charged_mssp(sim: Simulator, sources, targets=None, name="mssp"):
    """Nearest source per target computed by the oracle, with rounds billed by the charge model.

    Each target learns a (source, distance) pair, two words; the busiest
    machine's result volume must fit in the billed rounds or an
    ``AccountingError`` is raised.
    """
    res = sim.oracle.mssp(sources, targets)
    sim._bill_mssp(name, len(res[0]))
    return res
