import textwrap

import pytest

from digieco.gossip import Protocol
from digieco.overlay import Topology
from digieco.scenario import (
    E_DUPLICATE_ID,
    E_MISSING,
    E_RANGE,
    E_REFERENCE,
    E_SCHEMA,
    E_SYNTAX,
    ScenarioError,
    load_scenario,
    parse_scenario,
)

MINIMAL = """\
seed: 3
organisms:
  - uid: u
    devices:
      - id: d
        compute: 1
        battery: 0.5
        capacity: 10
        interfaces:
          - {id: d-wifi, tech: wifi, bandwidth: 10, latency: 5}
"""


def parse(text):
    return parse_scenario(textwrap.dedent(text), "test.yaml")


def error_of(text):
    with pytest.raises(ScenarioError) as err:
        parse(text)
    return err.value


def test_minimal_scenario():
    s = parse(MINIMAL)
    assert s.seed == 3 and s.trials == 1
    [dev] = s.organisms["u"]
    assert dev.uid == "u" and dev.interfaces[0].tech.value == "wifi"


def test_empty_document_gets_defaults():
    s = parse("")
    assert s.seed == 0 and s.organisms == {} and s.gossip is None


def test_duplicate_device_id():
    text = MINIMAL + """\
  - uid: v
    devices:
      - id: d
        compute: 1
        battery: 0.5
        capacity: 10
        interfaces:
          - {id: other, tech: umts, bandwidth: 1, latency: 300}
"""
    err = error_of(text)
    assert err.code == E_DUPLICATE_ID and "'d'" in err.message
    assert err.line == 13 and err.key == "organisms[1].devices[0].id"


def test_duplicate_interface_id():
    err = error_of(MINIMAL.replace("{id: d-wifi, tech: wifi, bandwidth: 10, latency: 5}",
                                   "{id: x, tech: wifi, bandwidth: 10, latency: 5}\n          - {id: x, tech: umts, bandwidth: 1, latency: 5}"))
    assert err.code == E_DUPLICATE_ID and "'x'" in err.message


def test_probability_out_of_range():
    err = error_of("gossip: {protocol: fixed-probability, p: 1.5, ttl: 3}\n")
    assert err.code == E_RANGE and err.key == "gossip.p" and err.line == 1
    assert "1.5" in str(err)


def test_battery_out_of_range_names_line():
    err = error_of(MINIMAL.replace("battery: 0.5", "battery: 2"))
    assert err.code == E_RANGE and err.line == 7 and err.key == "organisms[0].devices[0].battery"


def test_unknown_key_rejected():
    err = error_of(MINIMAL + "colour: blue\n")
    assert err.code == E_SCHEMA and err.key == "colour" and err.line == 11


def test_duplicate_yaml_key_rejected():
    err = error_of("seed: 1\nseed: 2\n")
    assert err.code == E_SCHEMA and err.line == 2


def test_wrong_type():
    err = error_of("seed: many\n")
    assert err.code == E_SCHEMA and err.key == "seed"


def test_syntax_error():
    err = error_of("seed: [1, 2\n")
    assert err.code == E_SYNTAX and err.line is not None


def test_missing_required_field():
    err = error_of("gossip: {protocol: fixed-fanout, ttl: 3}\n")
    assert err.code == E_MISSING


def test_availability_overlap():
    err = error_of("""\
        handover:
          duration: 10
          interfaces:
            - {id: w, tech: wifi, bandwidth: 1, latency: 1, availability: [[0, 10], [5, 20]]}
        """)
    assert err.code == E_RANGE and err.key.endswith("availability")


def test_handover_reference():
    err = error_of(MINIMAL + "handover: {device: nope, duration: 10}\n")
    assert err.code == E_REFERENCE
    s = parse(MINIMAL + "handover: {device: d, duration: 10, penalty_ms: 5}\n")
    assert s.handover.battery == 0.5 and s.handover.interfaces[0].id == "d-wifi"
    err = error_of(MINIMAL + "handover: {duration: 10}\n")
    assert err.code == E_SCHEMA


def test_overlay_and_sweep():
    s = parse("""\
        seed: 9
        trials: 4
        overlay: {topology: small-world, n: 50, k: 4, beta: 0.1}
        sweep: {protocol: fixed-fanout, fanout: [1, 2, 3], ttl: [5], cache: [1, 8]}
        """)
    assert s.overlay.topology is Topology.SMALL_WORLD and s.overlay.params == {"k": 4, "beta": 0.1}
    assert s.sweep.protocol is Protocol.FIXED_FANOUT and s.sweep.values == (1, 2, 3)


@pytest.mark.parametrize("overlay, code", [
    ("{topology: small-world, n: 50, k: 3, beta: 0.1}", E_RANGE),
    ("{topology: small-world, n: 50, k: 4}", E_MISSING),
    ("{topology: scale-free, n: 5, m: 5}", E_RANGE),
    ("{topology: random-regular, n: 5, d: 2, m: 1}", E_SCHEMA),
    ("{topology: lattice, n: 5}", E_SCHEMA),
])
def test_overlay_errors(overlay, code):
    assert error_of(f"overlay: {overlay}\n").code == code


def test_sweep_grid_range():
    err = error_of("sweep: {protocol: fixed-probability, p: [0.5, 1.2], ttl: [3], cache: [1]}\n")
    assert err.code == E_RANGE and err.key == "sweep.p[1]"


def test_gossip_ignores_other_rules_parameter():
    s = parse("gossip: {protocol: fixed-fanout, fanout: 2, p: 0.3, ttl: 4}\n")
    assert s.gossip.fanout == 2 and s.gossip.p is None


def test_load_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.yaml")


def test_shipped_scenarios_parse():
    from pathlib import Path

    for path in sorted(Path(__file__).parent.parent.joinpath("scenarios").glob("*.yaml")):
        load_scenario(path)
