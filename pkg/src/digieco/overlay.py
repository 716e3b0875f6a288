"""Ecosystem overlay topologies.

Three families are generated from an :class:`RngStream`: near-uniform degree
random graphs (pairing with restarts), Watts-Strogatz small worlds and
Barabasi-Albert scale-free graphs. Graphs are immutable; node ids are
``0..n-1``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, TextIO

from .simcore import RngStream


class GenerationFailed(RuntimeError):
    pass


class Topology(str, Enum):
    RANDOM_REGULAR = "random-regular"
    SMALL_WORLD = "small-world"
    SCALE_FREE = "scale-free"


@dataclass(frozen=True)
class OverlayGraph:
    n: int
    adj: tuple[tuple[int, ...], ...]
    topology: Topology | None = None
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        topology: Topology | None = None,
        params: dict[str, Any] | None = None,
    ) -> "OverlayGraph":
        if n < 1:
            raise ValueError(f"graph needs at least one node, got n={n}")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if v in nbrs[u]:
                raise ValueError(f"parallel edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs), topology, dict(params or {}))

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adj]

    def bfs(self, source: int) -> dict[int, int]:
        """Hop distance from ``source`` to every reachable node."""
        dist = {source: 0}
        frontier = deque([source])
        while frontier:
            u = frontier.popleft()
            for v in self.adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    frontier.append(v)
        return dist

    def is_connected(self) -> bool:
        return len(self.bfs(0)) == self.n

    def diameter(self) -> int:
        if not self.is_connected():
            raise ValueError("diameter is undefined for a disconnected graph")
        return max(max(self.bfs(u).values()) for u in range(self.n))

    def eccentricity(self, u: int) -> int:
        return max(self.bfs(u).values())


def _check_pos_int(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")


def gen_random_regular(n: int, d: int, rng: RngStream, max_restarts: int = 200) -> OverlayGraph:
    """Random graph where every node has degree ``d``.

    If ``n * d`` is odd the last node gets degree ``d - 1``. Stubs are paired
    at random, rejecting pairs that would form loops or parallel edges; when
    no admissible pair is left the attempt restarts from scratch.
    """
    _check_pos_int("n", n)
    _check_pos_int("d", d)
    if not n > d >= 1:
        raise ValueError(f"random-regular requires n > d >= 1, got n={n}, d={d}")
    want = [d] * n
    if (n * d) % 2:
        want[-1] = d - 1

    for _ in range(max_restarts):
        stubs = [u for u in range(n) for _ in range(want[u])]
        nbrs: list[set[int]] = [set() for _ in range(n)]
        ok = True
        while stubs:
            pair = _pick_pair(stubs, nbrs, rng)
            if pair is None:
                ok = False
                break
            i, j = pair
            u, v = stubs[i], stubs[j]
            nbrs[u].add(v)
            nbrs[v].add(u)
            for k in sorted((i, j), reverse=True):
                stubs[k] = stubs[-1]
                stubs.pop()
        if ok:
            edges = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
            return OverlayGraph.from_edges(n, edges, Topology.RANDOM_REGULAR, {"d": d})
    raise GenerationFailed(f"no simple {d}-regular graph on {n} nodes after {max_restarts} restarts")


def _pick_pair(stubs: list[int], nbrs: list[set[int]], rng: RngStream) -> tuple[int, int] | None:
    s = len(stubs)
    for _ in range(4 * s + 16):
        i = rng.randbelow(s)
        j = rng.randbelow(s)
        u, v = stubs[i], stubs[j]
        if i != j and u != v and v not in nbrs[u]:
            return i, j
    # Random probing keeps failing: look for any admissible pair at all.
    admissible = [
        (i, j)
        for i in range(s)
        for j in range(i + 1, s)
        if stubs[i] != stubs[j] and stubs[j] not in nbrs[stubs[i]]
    ]
    if not admissible:
        return None
    return admissible[rng.randbelow(len(admissible))]


def gen_small_world(n: int, k: int, beta: float, rng: RngStream) -> OverlayGraph:
    """Watts-Strogatz: ring lattice of ``k`` nearest neighbours, then rewiring.

    For each offset ``j = 1..k/2`` and each node ``u`` in order, the lattice
    edge ``(u, u+j)`` is moved with probability ``beta`` to ``(u, w)`` with
    ``w`` uniform among nodes that would not create a loop or duplicate.
    """
    _check_pos_int("n", n)
    _check_pos_int("k", k)
    if not n > k >= 2 or k % 2:
        raise ValueError(f"small-world requires n > k >= 2 with k even, got n={n}, k={k}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
    if beta > 0:
        for j in range(1, k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                if v not in nbrs[u] or rng.random() >= beta:
                    continue
                if len(nbrs[u]) >= n - 1:
                    continue
                w = rng.randbelow(n)
                while w == u or w in nbrs[u]:
                    w = rng.randbelow(n)
                nbrs[u].discard(v)
                nbrs[v].discard(u)
                nbrs[u].add(w)
                nbrs[w].add(u)
    edges = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
    return OverlayGraph.from_edges(n, edges, Topology.SMALL_WORLD, {"k": k, "beta": beta})


def gen_scale_free(n: int, m: int, rng: RngStream) -> OverlayGraph:
    """Barabasi-Albert preferential attachment from an (m+1)-clique seed."""
    _check_pos_int("n", n)
    _check_pos_int("m", m)
    if not n > m >= 1:
        raise ValueError(f"scale-free requires n > m >= 1, got n={n}, m={m}")
    edges = [(u, v) for u in range(m + 1) for v in range(u + 1, m + 1)]
    # Each node appears once per incident edge, so uniform picks are degree-proportional.
    endpoints = [x for e in edges for x in e]
    for new in range(m + 1, n):
        targets: list[int] = []
        chosen: set[int] = set()
        while len(targets) < m:
            t = endpoints[rng.randbelow(len(endpoints))]
            if t not in chosen:
                chosen.add(t)
                targets.append(t)
        for t in targets:
            edges.append((t, new))
            endpoints.extend((t, new))
    return OverlayGraph.from_edges(n, edges, Topology.SCALE_FREE, {"m": m})


def generate(topology: Topology | str, n: int, rng: RngStream, **params: Any) -> OverlayGraph:
    topology = Topology(topology)
    if topology is Topology.RANDOM_REGULAR:
        return gen_random_regular(n, params["d"], rng)
    if topology is Topology.SMALL_WORLD:
        return gen_small_world(n, params["k"], params.get("beta", 0.0), rng)
    return gen_scale_free(n, params["m"], rng)


def write_edge_list(g: OverlayGraph, fh: TextIO) -> None:
    fh.write(f"n={g.n}\n")
    for u, v in g.edges():
        fh.write(f"{u} {v}\n")


def read_edge_list(fh: TextIO, topology: Topology | None = None) -> OverlayGraph:
    n = None
    edges = []
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            if not line.startswith("n="):
                raise ValueError(f"line {lineno}: expected header 'n=<n>', got {line!r}")
            n = int(line[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise ValueError("missing 'n=<n>' header")
    return OverlayGraph.from_edges(n, edges, topology)
