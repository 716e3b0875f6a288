"""Always-best-connected interface selection and handover traces.

Each criterion is min-max normalised over the current candidate set so that
1.0 is best. When all candidates share the same raw value the criterion is
1.0 for everyone.

The battery criterion couples the device's charge with an interface's
energy draw: ``1 - (1 - battery) * draw_badness``, where ``draw_badness`` is
the min-max position of the draw (0 for the thriftiest interface). A full
battery makes draw irrelevant; an empty one ranks purely by draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .devices import NetIface


class NoCandidates(ValueError):
    pass


@dataclass(frozen=True)
class SelectionWeights:
    bandwidth: float = 1.0
    cost: float = 1.0
    battery: float = 1.0
    stability: float = 1.0

    def __post_init__(self) -> None:
        values = (self.bandwidth, self.cost, self.battery, self.stability)
        if any(v < 0 for v in values):
            raise ValueError(f"selection weights must be >= 0, got {values}")
        if not any(v > 0 for v in values):
            raise ValueError("at least one selection weight must be positive")

    def normalized(self) -> tuple[float, float, float, float]:
        total = self.bandwidth + self.cost + self.battery + self.stability
        return (self.bandwidth / total, self.cost / total, self.battery / total, self.stability / total)


def _goodness(value: float, lo: float, hi: float, higher_better: bool) -> float:
    if hi == lo:
        return 1.0
    pos = (value - lo) / (hi - lo)
    return pos if higher_better else 1.0 - pos


def score_iface(
    iface: NetIface,
    battery: float,
    weights: SelectionWeights,
    peers: Sequence[NetIface],
) -> float:
    """Utility in [0, 1] of ``iface`` relative to the candidate set ``peers``."""
    if not peers:
        raise NoCandidates("score_iface needs a non-empty candidate set")
    if iface not in peers:
        raise ValueError(f"interface {iface.id!r} is not among the candidates")
    w_bw, w_cost, w_batt, w_stab = weights.normalized()

    bws = [p.bandwidth for p in peers]
    costs = [p.cost for p in peers]
    draws = [p.energy for p in peers]
    stabs = [p.stability for p in peers]

    bw_term = _goodness(iface.bandwidth, min(bws), max(bws), True)
    cost_term = _goodness(iface.cost, min(costs), max(costs), False)
    draw_badness = 1.0 - _goodness(iface.energy, min(draws), max(draws), False)
    batt_term = 1.0 - (1.0 - battery) * draw_badness
    stab_term = _goodness(iface.stability, min(stabs), max(stabs), True)

    utility = w_bw * bw_term + w_cost * cost_term + w_batt * batt_term + w_stab * stab_term
    return min(1.0, max(0.0, utility))


def select_best(
    ifaces: Sequence[NetIface],
    at: int,
    battery: float,
    weights: SelectionWeights,
) -> str | None:
    """Id of the highest-utility interface available at tick ``at``."""
    candidates = [i for i in ifaces if i.available(at)]
    if not candidates:
        return None
    best = min(candidates, key=lambda i: (-score_iface(i, battery, weights, candidates), i.id))
    return best.id


@dataclass(frozen=True)
class PacketRecord:
    tick: int
    iface: str | None
    delivered: bool
    latency_ms: float | None
    handover: bool


@dataclass(frozen=True)
class HandoverEvent:
    tick: int
    src: str
    dst: str


@dataclass(frozen=True)
class HandoverTrace:
    packets: tuple[PacketRecord, ...]
    handovers: tuple[HandoverEvent, ...]

    @property
    def drops(self) -> int:
        return sum(1 for p in self.packets if not p.delivered)

    def latencies(self, iface_id: str) -> list[float]:
        return [p.latency_ms for p in self.packets if p.delivered and p.iface == iface_id]

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for p in self.packets:
            rows.append([
                str(p.tick),
                p.iface or "",
                "1" if p.delivered else "0",
                "" if p.latency_ms is None else repr(float(p.latency_ms)),
                "1" if p.handover else "0",
            ])
        return rows


HANDOVER_CSV_HEADER = ["tick", "iface", "delivered", "latency_ms", "handover_flag"]


def simulate_handover(
    ifaces: Sequence[NetIface],
    duration: int,
    period: int,
    weights: SelectionWeights,
    penalty_ms: float,
    battery: float = 1.0,
) -> HandoverTrace:
    """Send one packet every ``period`` ticks over the best available interface.

    A proxy keeps the session alive across switches; each switch adds
    ``penalty_ms`` to the first packet on the new interface. The comparison
    is against the last interface that actually carried a packet, so a gap
    with no connectivity followed by a different interface still counts as
    one handover.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    by_id = {i.id: i for i in ifaces}
    packets = []
    handovers = []
    current: str | None = None
    for tick in range(0, duration, period):
        chosen = select_best(ifaces, tick, battery, weights)
        if chosen is None:
            packets.append(PacketRecord(tick, None, False, None, False))
            continue
        switched = current is not None and chosen != current
        latency = by_id[chosen].latency + (penalty_ms if switched else 0.0)
        if switched:
            handovers.append(HandoverEvent(tick, current, chosen))
        packets.append(PacketRecord(tick, chosen, True, latency, switched))
        current = chosen
    return HandoverTrace(tuple(packets), tuple(handovers))
