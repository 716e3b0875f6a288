"""Gossip dissemination over an overlay graph.

Three relay rules are supported:

* conditional broadcast: with probability ``p`` forward to every neighbour,
  otherwise to none;
* fixed probability: forward to each neighbour independently with
  probability ``p``;
* fixed fanout: forward to ``min(f, degree)`` distinct random neighbours.

Conventions (all runs follow them):

* The origin always sends to all of its neighbours; relay rules apply to
  relays only.
* A copy reaching a node after ``h`` hops has ``ttl - h`` hops left. It is
  counted for coverage regardless, and relayed only when hops remain. So
  ``ttl = 0`` means the origin sends nothing.
* Each hop takes one tick; delay is reported in hops.
* Every node keeps an LRU cache of message ids (receipt of a cached id
  refreshes it). A cached id is a duplicate and is dropped; an id that was
  evicted is accepted again and relayed again.
* Coverage counts the origin. Mean hops averages over covered nodes other
  than the origin.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, NamedTuple, Sequence

from .overlay import OverlayGraph, Topology, generate
from .simcore import EventQueue, RngStream, derive_stream

log = logging.getLogger(__name__)


class InvalidOrigin(ValueError):
    pass


class Protocol(str, Enum):
    CONDITIONAL_BROADCAST = "conditional-broadcast"
    FIXED_PROBABILITY = "fixed-probability"
    FIXED_FANOUT = "fixed-fanout"

    @property
    def uses_probability(self) -> bool:
        return self is not Protocol.FIXED_FANOUT


@dataclass(frozen=True)
class GossipParams:
    protocol: Protocol
    ttl: int
    cache_size: int = 1
    p: float | None = None
    fanout: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if isinstance(self.ttl, bool) or not isinstance(self.ttl, int) or self.ttl < 0:
            raise ValueError(f"ttl must be an integer >= 0, got {self.ttl!r}")
        if isinstance(self.cache_size, bool) or not isinstance(self.cache_size, int) or self.cache_size < 1:
            raise ValueError(f"cache size must be an integer >= 1, got {self.cache_size!r}")
        if self.protocol.uses_probability:
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"{self.protocol.value} needs p in [0, 1], got {self.p!r}")
        else:
            f = self.fanout
            if isinstance(f, bool) or not isinstance(f, int) or f < 0:
                raise ValueError(f"fixed-fanout needs an integer fanout >= 0, got {f!r}")


class Message(NamedTuple):
    """A copy in flight: ``hops + remaining ttl == initial ttl`` always."""

    mid: int
    hops: int
    ttl_left: int


@dataclass
class Metrics:
    n: int
    origin: int
    ttl: int
    hops: dict[int, int]  # first-receipt hop per covered node, origin at 0
    duplicates: int = 0
    transmissions: int = 0
    redundant_transmissions: int = 0
    reaccepted: int = 0

    @property
    def covered(self) -> int:
        return len(self.hops)

    @property
    def coverage(self) -> float:
        return len(self.hops) / self.n

    @property
    def mean_hops(self) -> float:
        others = [h for node, h in self.hops.items() if node != self.origin]
        return math.fsum(others) / len(others) if others else 0.0

    def hop_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for h in self.hops.values():
            hist[h] = hist.get(h, 0) + 1
        return dict(sorted(hist.items()))


def forward_decision(params: GossipParams, neighbors: Sequence[int], rng: RngStream) -> list[int]:
    """Neighbours a relay sends to, per the configured rule."""
    proto = params.protocol
    if proto is Protocol.CONDITIONAL_BROADCAST:
        return list(neighbors) if rng.random() < params.p else []
    if proto is Protocol.FIXED_PROBABILITY:
        p = params.p
        return [v for v in neighbors if rng.random() < p]
    f = params.fanout
    if f >= len(neighbors):
        return list(neighbors)
    return sorted(rng.sample(neighbors, f))


def _relay_rule(params: GossipParams, rng: RngStream) -> Callable[[Sequence[int]], Sequence[int]]:
    # Same semantics and draw order as forward_decision, minus per-call dispatch.
    proto = params.protocol
    rand = rng.random
    if proto is Protocol.CONDITIONAL_BROADCAST:
        p = params.p
        return lambda nbrs: nbrs if rand() < p else ()
    if proto is Protocol.FIXED_PROBABILITY:
        p = params.p
        return lambda nbrs: [v for v in nbrs if rand() < p]
    return lambda nbrs: forward_decision(params, nbrs, rng)


def run_concurrent(
    g: OverlayGraph,
    origins: Sequence[int],
    params: GossipParams,
    rng: RngStream,
    start_ticks: Sequence[int] | None = None,
) -> list[Metrics]:
    """Disseminate one message per origin, all sharing the nodes' caches.

    Message ``i`` starts at ``start_ticks[i]`` (default tick 0). Runs until
    the event queue drains and returns one :class:`Metrics` per message.
    """
    n = g.n
    for o in origins:
        if isinstance(o, bool) or not isinstance(o, int) or not 0 <= o < n:
            raise InvalidOrigin(f"origin {o!r} is not a node of the graph (n={n})")
    if start_ticks is None:
        start_ticks = [0] * len(origins)
    if len(start_ticks) != len(origins):
        raise ValueError("start_ticks must match origins")

    ttl = params.ttl
    cap = params.cache_size
    adj = g.adj
    relay = _relay_rule(params, rng)
    metrics = [Metrics(n, o, ttl, {}) for o in origins]
    caches: list[OrderedDict | None] = [None] * n
    forwarded: set[tuple[int, int]] = set()

    queue = EventQueue()
    for mid, (o, t0) in enumerate(zip(origins, start_ticks)):
        queue.schedule((o, Message(mid, 0, ttl), True), t0)

    while queue:
        now, (node, msg, created_here) = queue.pop()
        mid, hops, ttl_left = msg
        m = metrics[mid]
        cache = caches[node]
        if cache is None:
            cache = caches[node] = OrderedDict()
        if mid in cache:
            cache.move_to_end(mid)
            m.duplicates += 1
            continue
        cache[mid] = None
        if len(cache) > cap:
            cache.popitem(last=False)

        if node in m.hops:
            m.reaccepted += 1
        else:
            m.hops[node] = hops
        if ttl_left <= 0:
            continue
        targets = adj[node] if created_here else relay(adj[node])
        if not targets:
            continue
        key = (node, mid)
        if key in forwarded:
            m.redundant_transmissions += len(targets)
        else:
            forwarded.add(key)
        m.transmissions += len(targets)
        copy = Message(mid, hops + 1, ttl_left - 1)
        nxt = now + 1
        for v in targets:
            queue.schedule((v, copy, False), nxt)

    assert queue.processed == queue.scheduled
    return metrics


def run_dissemination(g: OverlayGraph, origin: int, params: GossipParams, rng: RngStream) -> Metrics:
    """Broadcast a single message from ``origin``."""
    return run_concurrent(g, [origin], params, rng)[0]


def run_trials(
    g: OverlayGraph,
    params: GossipParams,
    trials: int,
    master: int,
    origin: int | None = None,
    stream_base: int = 0,
) -> list[Metrics]:
    """Independent runs on one graph; trial ``t`` uses stream ``stream_base + t``.

    With ``origin=None`` each trial first draws a uniform origin from its
    stream.
    """
    out = []
    for t in range(trials):
        rng = derive_stream(master, stream_base + t)
        o = rng.randbelow(g.n) if origin is None else origin
        out.append(run_dissemination(g, o, params, rng))
    return out


# ---------------------------------------------------------------- sweeps

SWEEP_CSV_HEADER = [
    "protocol", "n", "topology", "param_p", "param_f", "ttl", "cache", "trials",
    "mean_coverage", "sd_coverage", "mean_hops", "sd_hops", "mean_duplicates",
]

_RUN_STREAM_BASE = 1 << 32


@dataclass(frozen=True)
class OverlaySpec:
    topology: Topology
    n: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "topology", Topology(self.topology))

    def build(self, rng: RngStream) -> OverlayGraph:
        return generate(self.topology, self.n, rng, **self.params)


@dataclass(frozen=True)
class SweepRow:
    protocol: Protocol
    n: int
    topology: Topology
    p: float | None
    fanout: int | None
    ttl: int
    cache: int
    trials: int
    mean_coverage: float
    sd_coverage: float
    mean_hops: float
    sd_hops: float
    mean_duplicates: float
    error: str | None = None

    def csv_row(self) -> list[str]:
        def num(x: float | None) -> str:
            return "" if x is None else repr(float(x))

        return [
            self.protocol.value, str(self.n), self.topology.value,
            num(self.p), "" if self.fanout is None else str(self.fanout),
            str(self.ttl), str(self.cache), str(self.trials),
            num(self.mean_coverage), num(self.sd_coverage),
            num(self.mean_hops), num(self.sd_hops), num(self.mean_duplicates),
        ]


def sweep_cells(protocol: Protocol, values: Sequence[float], ttls: Sequence[int], caches: Sequence[int]) -> list[GossipParams]:
    protocol = Protocol(protocol)
    cells = []
    for value in values:
        for ttl in ttls:
            for cache in caches:
                if protocol.uses_probability:
                    cells.append(GossipParams(protocol, ttl, cache, p=float(value)))
                else:
                    cells.append(GossipParams(protocol, ttl, cache, fanout=int(value)))
    return cells


def _sweep_chunk(spec: OverlaySpec, cells: list[GossipParams], trial_ids: range, master: int):
    """Per-trial results for a block of trials; keyed by trial id."""
    results: dict[int, list[tuple[float, float, int] | str]] = {}
    for t in trial_ids:
        try:
            g = spec.build(derive_stream(master, t))
        except Exception as exc:  # recorded per cell, not fatal to the sweep
            results[t] = [f"{type(exc).__name__}: {exc}"] * len(cells)
            continue
        row: list[tuple[float, float, int] | str] = []
        for params in cells:
            rng = derive_stream(master, _RUN_STREAM_BASE + t)
            try:
                origin = rng.randbelow(g.n)
                m = run_dissemination(g, origin, params, rng)
                row.append((m.coverage, m.mean_hops, m.duplicates))
            except Exception as exc:
                row.append(f"{type(exc).__name__}: {exc}")
        results[t] = row
    return results


def _mean_sd(xs: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(xs)
    sd = statistics.stdev(xs) if len(xs) > 1 else 0.0
    return mean, sd


def sweep(
    spec: OverlaySpec,
    protocol: Protocol | str,
    values: Sequence[float],
    ttls: Sequence[int],
    caches: Sequence[int],
    trials: int,
    master: int,
    workers: int = 1,
) -> list[SweepRow]:
    """Mean/stddev of coverage and hops for every parameter tuple.

    Trial ``t`` builds its graph from stream ``t`` and runs every cell on a
    fresh copy of stream ``2**32 + t``, drawing a uniform origin first. Cells
    therefore share graphs, origins and random numbers trial by trial, so
    differences between rows come from the parameters alone. Results are
    merged in trial order; the table is the same for any ``workers``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if trials >= _RUN_STREAM_BASE:
        raise ValueError("too many trials")
    cells = sweep_cells(Protocol(protocol), values, ttls, caches)

    if workers > 1 and trials > 1:
        bounds = [round(i * trials / workers) for i in range(workers + 1)]
        chunks = [range(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        results: dict[int, Any] = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_chunk, spec, cells, ch, master) for ch in chunks]
            for fut in futures:
                results.update(fut.result())
    else:
        results = _sweep_chunk(spec, cells, range(trials), master)

    rows = []
    for c, params in enumerate(cells):
        per_trial = [results[t][c] for t in range(trials)]
        errors = [r for r in per_trial if isinstance(r, str)]
        common = dict(
            protocol=params.protocol, n=spec.n, topology=spec.topology,
            p=params.p, fanout=params.fanout, ttl=params.ttl, cache=params.cache_size,
            trials=trials,
        )
        if errors:
            log.error("sweep cell %d failed in %d trial(s): %s", c, len(errors), errors[0])
            nan = float("nan")
            rows.append(SweepRow(**common, mean_coverage=nan, sd_coverage=nan, mean_hops=nan,
                                 sd_hops=nan, mean_duplicates=nan, error=errors[0]))
            continue
        cov_mean, cov_sd = _mean_sd([r[0] for r in per_trial])
        hop_mean, hop_sd = _mean_sd([r[1] for r in per_trial])
        dup_mean = statistics.fmean([float(r[2]) for r in per_trial])
        rows.append(SweepRow(**common, mean_coverage=cov_mean, sd_coverage=cov_sd,
                             mean_hops=hop_mean, sd_hops=hop_sd, mean_duplicates=dup_mean))
    return rows
