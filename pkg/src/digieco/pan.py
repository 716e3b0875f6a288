"""Auto-configuration of a personal area network.

Every device discovers same-user siblings on each of its technologies,
exchanges profiles, and the organism derives an intra-PAN overlay plus a
coordinator (resource manager) and a gateway (outside traffic).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .devices import (
    ComponentRoles,
    ConfigWarning,
    DeviceProfile,
    DigitalOrganism,
    PanEdge,
    TechClass,
)
from .netselect import SelectionWeights, score_iface

log = logging.getLogger(__name__)


class NoDevices(ValueError):
    pass


class NoGatewayCandidate(ValueError):
    pass


@dataclass(frozen=True)
class DiscoveryResult:
    device: str
    buckets: dict[TechClass, frozenset[str]]

    def reachable(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for ids in self.buckets.values():
            out |= ids
        return out


@dataclass(frozen=True)
class PanOverlay:
    devices: tuple[str, ...]
    edges: tuple[PanEdge, ...]
    components: tuple[tuple[str, ...], ...]

    def component_of(self, device_id: str) -> tuple[str, ...]:
        for comp in self.components:
            if device_id in comp:
                return comp
        raise KeyError(device_id)


def discover(dev: DeviceProfile, all_devices: Sequence[DeviceProfile]) -> DiscoveryResult:
    if not any(d.id == dev.id for d in all_devices):
        raise ValueError(f"device {dev.id!r} is not in the device list")
    buckets = {}
    for tech in sorted(dev.techs, key=lambda t: t.value):
        buckets[tech] = frozenset(
            d.id for d in all_devices
            if d.id != dev.id and d.uid == dev.uid and tech in d.techs
        )
    return DiscoveryResult(dev.id, buckets)


def _check_same_user(devs: Sequence[DeviceProfile]) -> None:
    uids = {d.uid for d in devs}
    if len(uids) > 1:
        raise ValueError(f"devices belong to several users: {sorted(uids)}")
    ids = [d.id for d in devs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate device ids")


def build_pan_overlay(devs: Sequence[DeviceProfile]) -> PanOverlay:
    """One edge per shared technology between each device pair.

    Devices carrying several technologies bridge the islands they touch.
    A partitioned PAN is returned as several components, not rejected.
    """
    _check_same_user(devs)
    ordered = sorted(devs, key=lambda d: d.id)
    edges = set()
    for dev in ordered:
        for tech, peers in discover(dev, ordered).buckets.items():
            edges.update(PanEdge(dev.id, peer, tech) for peer in peers)
    edges = sorted(edges, key=lambda e: (e.a, e.b, e.tech.value))

    parent = {d.id: d.id for d in ordered}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        ra, rb = find(e.a), find(e.b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[str, list[str]] = {}
    for d in ordered:
        groups.setdefault(find(d.id), []).append(d.id)
    components = tuple(sorted(tuple(g) for g in groups.values()))
    return PanOverlay(tuple(d.id for d in ordered), tuple(edges), components)


def exchange_profiles(overlay: PanOverlay) -> dict[str, frozenset[str]]:
    """Profiles each device holds after flooding over the overlay."""
    known = {}
    for comp in overlay.components:
        members = frozenset(comp)
        for d in comp:
            known[d] = members
    return known


def _tiebreak_key(score: float, dev: DeviceProfile) -> tuple:
    # min() over this key: best score, then fuller battery, then smallest id
    return (-score, -dev.battery, dev.id)


def elect_coordinator(profiles: Iterable[DeviceProfile]) -> str:
    profiles = list(profiles)
    if not profiles:
        raise NoDevices("cannot elect a coordinator among zero devices")
    return min(profiles, key=lambda d: _tiebreak_key(d.compute, d)).id


def gateway_scores(
    profiles: Iterable[DeviceProfile],
    weights: SelectionWeights | None = None,
) -> dict[str, float]:
    """Battery-weighted best-interface utility for every gateway candidate.

    Interfaces are scored against the pooled outward-facing interfaces of all
    candidates, so utilities are comparable across devices.
    """
    weights = weights or SelectionWeights()
    candidates = [d for d in profiles if any(i.tech.reaches_outside for i in d.interfaces)]
    pool = [i for d in candidates for i in d.interfaces if i.tech.reaches_outside]
    scores = {}
    for d in candidates:
        best = max(score_iface(i, d.battery, weights, pool) for i in d.interfaces if i.tech.reaches_outside)
        scores[d.id] = d.battery * best
    return scores


def elect_gateway(profiles: Iterable[DeviceProfile], weights: SelectionWeights | None = None) -> str:
    profiles = list(profiles)
    if not profiles:
        raise NoDevices("cannot elect a gateway among zero devices")
    scores = gateway_scores(profiles, weights)
    if not scores:
        raise NoGatewayCandidate(
            f"none of {sorted(d.id for d in profiles)} has a local or wide-area interface"
        )
    by_id = {d.id: d for d in profiles}
    return min(scores, key=lambda did: _tiebreak_key(scores[did], by_id[did]))


def configure(
    devs: Sequence[DeviceProfile],
    weights: SelectionWeights | None = None,
    invoking: str | None = None,
) -> DigitalOrganism:
    """Run the whole configuration phase for one user's devices.

    Roles are elected in every component. The organism-level coordinator and
    gateway are those of the component holding ``invoking`` (by default the
    device with the smallest id, which keeps the result independent of input
    order).
    """
    devs = list(devs)
    if not devs:
        raise NoDevices("cannot configure an organism without devices")
    _check_same_user(devs)
    by_id = {d.id: d for d in devs}
    if invoking is None:
        invoking = min(by_id)
    elif invoking not in by_id:
        raise ValueError(f"invoking device {invoking!r} is not in the device list")

    overlay = build_pan_overlay(devs)
    known = exchange_profiles(overlay)

    warnings = []
    if len(overlay.components) > 1:
        warnings.append(ConfigWarning(
            "PartitionedPAN",
            f"{len(overlay.components)} components: "
            + " | ".join(" ".join(c) for c in overlay.components),
        ))
    roles = []
    for comp in overlay.components:
        members = [by_id[i] for i in sorted(known[comp[0]])]
        coordinator = elect_coordinator(members)
        try:
            gateway = elect_gateway(members, weights)
        except NoGatewayCandidate as exc:
            gateway = None
            warnings.append(ConfigWarning("NoGatewayCandidate", str(exc)))
        roles.append(ComponentRoles(comp, coordinator, gateway))
    for w in warnings:
        log.warning("%s: %s", w.code, w.message)

    mine = next(r for r in roles if invoking in r.members)
    return DigitalOrganism(
        uid=devs[0].uid,
        devices=tuple(sorted(devs, key=lambda d: d.id)),
        edges=overlay.edges,
        coordinator=mine.coordinator,
        gateway=mine.gateway,
        components=tuple(roles),
        warnings=tuple(warnings),
    )
