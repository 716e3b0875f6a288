"""Scenario files: strict YAML schema and conversion to domain objects.

Every problem is reported as a :class:`ScenarioError` carrying a stable code,
the file, the line and the dotted key path of the offending entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .devices import DeviceProfile, NetIface, ProfileError
from .gossip import GossipParams, OverlaySpec, Protocol
from .netselect import SelectionWeights
from .overlay import Topology

E_SYNTAX = "E_SYNTAX"
E_SCHEMA = "E_SCHEMA"
E_RANGE = "E_RANGE"
E_DUPLICATE_ID = "E_DUPLICATE_ID"
E_REFERENCE = "E_REFERENCE"
E_MISSING = "E_MISSING"

_RANGE_ERRORS = {"greater_than", "greater_than_equal", "less_than", "less_than_equal"}

U64_MAX = (1 << 64) - 1


class ScenarioError(Exception):
    def __init__(self, code: str, message: str, source: str = "<scenario>",
                 line: int | None = None, key: str | None = None):
        self.code = code
        self.message = message
        self.source = source
        self.line = line
        self.key = key
        super().__init__(str(self))

    def __str__(self) -> str:
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        key = f" {self.key}:" if self.key else ""
        return f"{where}: {self.code}:{key} {self.message}"


class _Strict(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")


class IfaceModel(_Strict):
    id: str = Field(min_length=1)
    tech: Literal["bluetooth", "zigbee", "infrared", "wifi", "umts"]
    bandwidth: float = Field(gt=0)
    cost: float = Field(default=0.0, ge=0)
    energy: float = Field(default=0.0, ge=0)
    latency: float = Field(gt=0)
    stability: float = Field(default=1.0, ge=0, le=1)
    availability: list[Annotated[list[int], Field(min_length=2, max_length=2)]] | None = None


class DeviceModel(_Strict):
    id: str = Field(min_length=1)
    compute: float = Field(gt=0)
    battery: float = Field(ge=0, le=1)
    capacity: float = Field(gt=0)
    interfaces: list[IfaceModel] = Field(min_length=1)


class OrganismModel(_Strict):
    uid: str = Field(min_length=1)
    devices: list[DeviceModel] = Field(min_length=1)


class WeightsModel(_Strict):
    bandwidth: float = Field(default=1.0, ge=0)
    cost: float = Field(default=1.0, ge=0)
    battery: float = Field(default=1.0, ge=0)
    stability: float = Field(default=1.0, ge=0)


class HandoverModel(_Strict):
    device: str | None = None
    interfaces: list[IfaceModel] | None = None
    battery: float | None = Field(default=None, ge=0, le=1)
    duration: int = Field(gt=0)
    period: int = Field(default=1, ge=1)
    penalty_ms: float = Field(default=0.0, ge=0)


class OverlayModel(_Strict):
    topology: Literal["random-regular", "small-world", "scale-free"]
    n: int = Field(ge=2)
    d: int | None = Field(default=None, ge=1)
    k: int | None = Field(default=None, ge=2)
    beta: float | None = Field(default=None, ge=0, le=1)
    m: int | None = Field(default=None, ge=1)


class GossipModel(_Strict):
    protocol: Literal["conditional-broadcast", "fixed-probability", "fixed-fanout"]
    p: float | None = Field(default=None, ge=0, le=1)
    fanout: int | None = Field(default=None, ge=0)
    ttl: int = Field(ge=0)
    cache: int = Field(default=1, ge=1)
    origin: int | None = Field(default=None, ge=0)


class SweepModel(_Strict):
    protocol: Literal["conditional-broadcast", "fixed-probability", "fixed-fanout"]
    p: list[float] | None = None
    fanout: list[int] | None = None
    ttl: list[int] = Field(min_length=1)
    cache: list[int] = Field(min_length=1)
    workers: int = Field(default=1, ge=1)


class ScenarioModel(_Strict):
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    trials: int = Field(default=1, ge=1)
    weights: WeightsModel = Field(default_factory=WeightsModel)
    organisms: list[OrganismModel] = Field(default_factory=list)
    handover: HandoverModel | None = None
    overlay: OverlayModel | None = None
    gossip: GossipModel | None = None
    sweep: SweepModel | None = None


@dataclass(frozen=True)
class HandoverSpec:
    interfaces: tuple[NetIface, ...]
    battery: float
    duration: int
    period: int
    penalty_ms: float


@dataclass(frozen=True)
class SweepSpec:
    protocol: Protocol
    values: tuple[float, ...]
    ttls: tuple[int, ...]
    caches: tuple[int, ...]
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    seed: int
    trials: int
    weights: SelectionWeights
    organisms: dict[str, tuple[DeviceProfile, ...]]
    handover: HandoverSpec | None = None
    overlay: OverlaySpec | None = None
    gossip: GossipParams | None = None
    gossip_origin: int | None = None
    sweep: SweepSpec | None = None


class _Locator:
    """Maps key paths to source lines using the composed YAML node tree."""

    def __init__(self, root: yaml.Node | None):
        self.root = root

    def line(self, loc: tuple) -> int | None:
        node = self.root
        best = None if node is None else node.start_mark.line + 1
        for part in loc:
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == str(part):
                        best = k.start_mark.line + 1
                        node = v
                        break
                else:
                    return best
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                node = node.value[part]
                best = node.start_mark.line + 1
            else:
                return best
        return best


def _dotted(loc: tuple) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _check_duplicate_keys(node: yaml.Node | None, source: str, path: tuple = ()) -> None:
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for k, v in node.value:
            if k.value in seen:
                raise ScenarioError(E_SCHEMA, f"duplicate key {k.value!r}", source,
                                    k.start_mark.line + 1, _dotted(path + (k.value,)))
            seen.add(k.value)
            _check_duplicate_keys(v, source, path + (k.value,))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _check_duplicate_keys(v, source, path + (i,))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Validate a YAML scenario document and build the domain objects."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(E_SYNTAX, str(getattr(exc, "problem", exc)), source, line) from None
    _check_duplicate_keys(root, source)
    loc = _Locator(root)

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError(E_SCHEMA, "top level must be a mapping", source, 1)

    try:
        model = ScenarioModel.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        code = E_RANGE if err["type"] in _RANGE_ERRORS else E_SCHEMA
        if err["type"] == "missing":
            code = E_MISSING
        where = tuple(err["loc"])
        msg = err["msg"]
        if "input" in err and err["type"] != "missing" and not isinstance(err["input"], (dict, list)):
            msg += f" (got {err['input']!r})"
        raise ScenarioError(code, msg, source, loc.line(where), _dotted(where)) from None

    return _build(model, source, loc)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(E_SYNTAX, f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(path))


def _build(model: ScenarioModel, source: str, loc: _Locator) -> Scenario:
    def fail(code: str, message: str, where: tuple) -> ScenarioError:
        return ScenarioError(code, message, source, loc.line(where), _dotted(where))

    seen_devices: dict[str, tuple] = {}
    seen_ifaces: dict[str, tuple] = {}

    def claim(registry: dict, ident: str, kind: str, where: tuple) -> None:
        if ident in registry:
            raise fail(E_DUPLICATE_ID, f"{kind} id {ident!r} already defined at {_dotted(registry[ident])}", where)
        registry[ident] = where

    def make_iface(im: IfaceModel, where: tuple) -> NetIface:
        claim(seen_ifaces, im.id, "interface", where + ("id",))
        try:
            avail = None if im.availability is None else tuple((a, b) for a, b in im.availability)
            return NetIface(im.id, im.tech, im.bandwidth, im.cost, im.energy, im.latency, im.stability, avail)
        except ProfileError as exc:
            raise fail(E_RANGE, str(exc), where + (exc.field,)) from None

    organisms: dict[str, tuple[DeviceProfile, ...]] = {}
    devices_by_id: dict[str, DeviceProfile] = {}
    for oi, om in enumerate(model.organisms):
        where_o = ("organisms", oi)
        if om.uid in organisms:
            raise fail(E_DUPLICATE_ID, f"organism uid {om.uid!r} defined twice", where_o + ("uid",))
        devs = []
        for di, dm in enumerate(om.devices):
            where_d = where_o + ("devices", di)
            claim(seen_devices, dm.id, "device", where_d + ("id",))
            ifaces = tuple(make_iface(im, where_d + ("interfaces", ii)) for ii, im in enumerate(dm.interfaces))
            try:
                dev = DeviceProfile(dm.id, om.uid, dm.compute, dm.battery, dm.capacity, ifaces)
            except ProfileError as exc:
                raise fail(E_RANGE, str(exc), where_d + (exc.field,)) from None
            devs.append(dev)
            devices_by_id[dev.id] = dev
        organisms[om.uid] = tuple(devs)

    w = model.weights
    try:
        weights = SelectionWeights(w.bandwidth, w.cost, w.battery, w.stability)
    except ValueError as exc:
        raise fail(E_RANGE, str(exc), ("weights",)) from None

    handover = None
    if model.handover is not None:
        hm = model.handover
        where_h = ("handover",)
        if (hm.device is None) == (hm.interfaces is None):
            raise fail(E_SCHEMA, "give exactly one of 'device' or 'interfaces'", where_h)
        if hm.device is not None:
            if hm.device not in devices_by_id:
                raise fail(E_REFERENCE, f"unknown device {hm.device!r}", where_h + ("device",))
            dev = devices_by_id[hm.device]
            ifaces = dev.interfaces
            battery = dev.battery if hm.battery is None else hm.battery
        else:
            ifaces = tuple(make_iface(im, where_h + ("interfaces", i)) for i, im in enumerate(hm.interfaces))
            battery = 1.0 if hm.battery is None else hm.battery
        handover = HandoverSpec(ifaces, battery, hm.duration, hm.period, hm.penalty_ms)

    overlay = None
    if model.overlay is not None:
        om_ = model.overlay
        where_v = ("overlay",)
        topo = Topology(om_.topology)
        needed = {Topology.RANDOM_REGULAR: ("d",), Topology.SMALL_WORLD: ("k", "beta"), Topology.SCALE_FREE: ("m",)}[topo]
        params: dict[str, Any] = {}
        for key in ("d", "k", "beta", "m"):
            value = getattr(om_, key)
            if key in needed:
                if value is None:
                    raise fail(E_MISSING, f"{topo.value} requires '{key}'", where_v)
                params[key] = value
            elif value is not None:
                raise fail(E_SCHEMA, f"'{key}' does not apply to {topo.value}", where_v + (key,))
        if topo is Topology.RANDOM_REGULAR and not om_.n > params["d"]:
            raise fail(E_RANGE, f"need n > d, got n={om_.n}, d={params['d']}", where_v + ("d",))
        if topo is Topology.SMALL_WORLD and (not om_.n > params["k"] or params["k"] % 2):
            raise fail(E_RANGE, f"need even k < n, got n={om_.n}, k={params['k']}", where_v + ("k",))
        if topo is Topology.SCALE_FREE and not om_.n > params["m"]:
            raise fail(E_RANGE, f"need n > m, got n={om_.n}, m={params['m']}", where_v + ("m",))
        overlay = OverlaySpec(topo, om_.n, params)

    gossip = None
    origin = None
    if model.gossip is not None:
        gm = model.gossip
        where_g = ("gossip",)
        proto = Protocol(gm.protocol)
        _check_protocol_params(proto, gm.p, gm.fanout, where_g, fail)
        if proto.uses_probability:
            gossip = GossipParams(proto, gm.ttl, gm.cache, p=gm.p)
        else:
            gossip = GossipParams(proto, gm.ttl, gm.cache, fanout=gm.fanout)
        origin = gm.origin
        if origin is not None and overlay is not None and origin >= overlay.n:
            raise fail(E_RANGE, f"origin {origin} outside 0..{overlay.n - 1}", where_g + ("origin",))

    sweep = None
    if model.sweep is not None:
        sm = model.sweep
        where_s = ("sweep",)
        proto = Protocol(sm.protocol)
        _check_protocol_params(proto, sm.p, sm.fanout, where_s, fail)
        values = tuple(sm.p) if proto.uses_probability else tuple(sm.fanout)
        if not values:
            raise fail(E_SCHEMA, "parameter grid is empty", where_s)
        for i, v in enumerate(values):
            bad = not 0.0 <= v <= 1.0 if proto.uses_probability else v < 0
            if bad:
                key = "p" if proto.uses_probability else "fanout"
                raise fail(E_RANGE, f"grid value {v!r} out of range", where_s + (key, i))
        for key, grid, lo in (("ttl", sm.ttl, 0), ("cache", sm.cache, 1)):
            for i, v in enumerate(grid):
                if v < lo:
                    raise fail(E_RANGE, f"must be >= {lo} (got {v})", where_s + (key, i))
        sweep = SweepSpec(proto, values, tuple(sm.ttl), tuple(sm.cache), sm.workers)

    return Scenario(model.seed, model.trials, weights, organisms, handover, overlay, gossip, origin, sweep)


def _check_protocol_params(proto: Protocol, p: Any, fanout: Any, where: tuple, fail) -> None:
    # Parameters of the other rule are ignored, only the relevant one is required.
    if proto.uses_probability and p is None:
        raise fail(E_MISSING, f"{proto.value} requires 'p'", where)
    if not proto.uses_probability and fanout is None:
        raise fail(E_MISSING, "fixed-fanout requires 'fanout'", where)
