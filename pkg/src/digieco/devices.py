"""Devices, network interfaces and digital organisms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable


class ProfileError(ValueError):
    """A profile or interface violates one of its invariants."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class TechGroup(str, Enum):
    SHORT_RANGE = "short-range"
    LOCAL = "local"
    WIDE_AREA = "wide-area"


class TechClass(str, Enum):
    BLUETOOTH = "bluetooth"
    ZIGBEE = "zigbee"
    INFRARED = "infrared"
    WIFI = "wifi"
    UMTS = "umts"

    @property
    def group(self) -> TechGroup:
        return TECH_GROUPS[self]

    @property
    def reaches_outside(self) -> bool:
        """True for technologies that can carry traffic out of the PAN."""
        return TECH_GROUPS[self] is not TechGroup.SHORT_RANGE


TECH_GROUPS = {
    TechClass.BLUETOOTH: TechGroup.SHORT_RANGE,
    TechClass.ZIGBEE: TechGroup.SHORT_RANGE,
    TechClass.INFRARED: TechGroup.SHORT_RANGE,
    TechClass.WIFI: TechGroup.LOCAL,
    TechClass.UMTS: TechGroup.WIDE_AREA,
}

Interval = tuple[int, int]


def _finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ProfileError(name, f"must be a finite number, got {value!r}")


@dataclass(frozen=True)
class NetIface:
    """One network attachment of a device.

    ``availability`` lists half-open ``[start, end)`` tick intervals; ``None``
    means the interface is always available.
    """

    id: str
    tech: TechClass
    bandwidth: float  # Mbit/s
    cost: float = 0.0  # cost units per MB
    energy: float = 0.0  # battery units per MB
    latency: float = 1.0  # ms
    stability: float = 1.0
    availability: tuple[Interval, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ProfileError("id", "interface id must be a non-empty string")
        try:
            object.__setattr__(self, "tech", TechClass(self.tech))
        except ValueError:
            raise ProfileError("tech", f"unknown technology {self.tech!r}") from None
        for name in ("bandwidth", "cost", "energy", "latency", "stability"):
            _finite(name, getattr(self, name))
        if self.bandwidth <= 0:
            raise ProfileError("bandwidth", f"must be > 0, got {self.bandwidth}")
        if self.latency <= 0:
            raise ProfileError("latency", f"must be > 0, got {self.latency}")
        if self.cost < 0:
            raise ProfileError("cost", f"must be >= 0, got {self.cost}")
        if self.energy < 0:
            raise ProfileError("energy", f"must be >= 0, got {self.energy}")
        if not 0.0 <= self.stability <= 1.0:
            raise ProfileError("stability", f"must lie in [0, 1], got {self.stability}")
        if self.availability is not None:
            intervals = tuple((int(s), int(e)) for s, e in self.availability)
            prev_end = None
            for start, end in intervals:
                if start >= end:
                    raise ProfileError("availability", f"empty or reversed interval [{start}, {end})")
                if prev_end is not None and start < prev_end:
                    raise ProfileError("availability", "intervals must be sorted and disjoint")
                prev_end = end
            object.__setattr__(self, "availability", intervals)

    def available(self, tick: int) -> bool:
        if self.availability is None:
            return True
        return any(start <= tick < end for start, end in self.availability)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "tech": self.tech.value,
            "bandwidth": self.bandwidth,
            "cost": self.cost,
            "energy": self.energy,
            "latency": self.latency,
            "stability": self.stability,
            "availability": None if self.availability is None else [list(iv) for iv in self.availability],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NetIface":
        data = dict(data)
        avail = data.pop("availability", None)
        if avail is not None:
            avail = tuple(tuple(iv) for iv in avail)
        return cls(availability=avail, **data)


@dataclass(frozen=True)
class DeviceProfile:
    """The technical profile a device shares with its siblings."""

    id: str
    uid: str
    compute: float  # abstract ops/s
    battery: float  # level, fraction of capacity
    capacity: float  # battery units
    interfaces: tuple[NetIface, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ProfileError("id", "device id must be a non-empty string")
        if not isinstance(self.uid, str) or not self.uid:
            raise ProfileError("uid", "user id must be a non-empty string")
        for name in ("compute", "battery", "capacity"):
            _finite(name, getattr(self, name))
        if self.compute <= 0:
            raise ProfileError("compute", f"must be > 0, got {self.compute}")
        if not 0.0 <= self.battery <= 1.0:
            raise ProfileError("battery", f"must lie in [0, 1], got {self.battery}")
        if self.capacity <= 0:
            raise ProfileError("capacity", f"must be > 0, got {self.capacity}")
        ifaces = tuple(self.interfaces)
        if not ifaces:
            raise ProfileError("interfaces", f"device {self.id!r} needs at least one interface")
        seen = set()
        for iface in ifaces:
            if iface.id in seen:
                raise ProfileError("interfaces", f"duplicate interface id {iface.id!r}")
            seen.add(iface.id)
        object.__setattr__(self, "interfaces", ifaces)

    @property
    def techs(self) -> frozenset[TechClass]:
        return frozenset(i.tech for i in self.interfaces)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "uid": self.uid,
            "compute": self.compute,
            "battery": self.battery,
            "capacity": self.capacity,
            "interfaces": [i.to_dict() for i in self.interfaces],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DeviceProfile":
        data = dict(data)
        ifaces = tuple(NetIface.from_dict(i) for i in data.pop("interfaces"))
        return cls(interfaces=ifaces, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DeviceProfile":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PanEdge:
    a: str
    b: str
    tech: TechClass

    def __post_init__(self) -> None:
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class ConfigWarning:
    code: str  # "PartitionedPAN" or "NoGatewayCandidate"
    message: str


@dataclass(frozen=True)
class ComponentRoles:
    members: tuple[str, ...]
    coordinator: str
    gateway: str | None


@dataclass(frozen=True)
class DigitalOrganism:
    """A user's devices plus the configuration derived for them."""

    uid: str
    devices: tuple[DeviceProfile, ...]
    edges: tuple[PanEdge, ...] = ()
    coordinator: str | None = None
    gateway: str | None = None
    components: tuple[ComponentRoles, ...] = ()
    warnings: tuple[ConfigWarning, ...] = field(default=())

    def __post_init__(self) -> None:
        by_id = {d.id: d for d in self.devices}
        if len(by_id) != len(self.devices):
            raise ProfileError("devices", "duplicate device id in organism")
        for d in self.devices:
            if d.uid != self.uid:
                raise ProfileError("uid", f"device {d.id!r} belongs to {d.uid!r}, not {self.uid!r}")
        for role in ("coordinator", "gateway"):
            ref = getattr(self, role)
            if ref is not None and ref not in by_id:
                raise ProfileError(role, f"{ref!r} is not a device of this organism")
        for e in self.edges:
            for end in (e.a, e.b):
                if end not in by_id:
                    raise ProfileError("edges", f"edge endpoint {end!r} is not a device of this organism")
            if e.tech not in by_id[e.a].techs or e.tech not in by_id[e.b].techs:
                raise ProfileError("edges", f"{e.a}-{e.b} labelled {e.tech.value} but not shared")

    def device(self, device_id: str) -> DeviceProfile:
        for d in self.devices:
            if d.id == device_id:
                return d
        raise KeyError(device_id)


def total_battery(devices: DigitalOrganism | Iterable[DeviceProfile]) -> float:
    """Remaining charge summed over devices, in battery units."""
    if isinstance(devices, DigitalOrganism):
        devices = devices.devices
    return math.fsum(d.battery * d.capacity for d in devices)
