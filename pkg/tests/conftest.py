import pytest

from digieco.devices import DeviceProfile, NetIface


def iface(iid, tech, **kw):
    defaults = {"bandwidth": 10.0, "latency": 20.0}
    defaults.update(kw)
    return NetIface(iid, tech, **defaults)


def device(did, techs, uid="u1", compute=100.0, battery=0.5, capacity=100.0, **iface_kw):
    ifaces = tuple(iface(f"{did}-{t}", t, **iface_kw) for t in techs)
    return DeviceProfile(did, uid, compute, battery, capacity, ifaces)


@pytest.fixture
def wifi_umts():
    wifi = NetIface("wifi0", "wifi", bandwidth=54, cost=0, energy=0.5, latency=20, stability=0.6,
                    availability=((0, 30), (60, 90)))
    umts = NetIface("umts0", "umts", bandwidth=2, cost=5, energy=1.0, latency=300, stability=0.95,
                    availability=((0, 90),))
    return wifi, umts


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_ac" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        terminalreporter.write_line(f"{_acceptance[name]}  {name}")
