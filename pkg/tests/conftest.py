import math

import pytest

from qlink.constants import ARCSEC
from qlink.geometry import CircularOrbit, PassGeometry
from qlink.link_budget import OpticalChain, TargetSpec, TransmitterSpec


@pytest.fixture
def lageos_orbit():
    return CircularOrbit(5.9e6)


@pytest.fixture
def overhead_pass(lageos_orbit):
    return PassGeometry(lageos_orbit, math.pi / 2)


@pytest.fixture
def lageos_pass(lageos_orbit):
    return PassGeometry(lageos_orbit, math.radians(60.0))


@pytest.fixture
def mlro_laser():
    return TransmitterSpec(pulse_energy=0.1, wavelength=532e-9, divergence=ARCSEC, rep_rate=10.0)


@pytest.fixture
def lageos_target():
    return TargetSpec(effective_diameter=0.6, active_retro_fraction=0.1,
                      return_divergence=3 * ARCSEC)


@pytest.fixture
def unit_chain():
    return OpticalChain()


# --- acceptance reporting ---------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "details": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["details"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] else "FAIL"
        detail = "; ".join(e["details"])
        terminalreporter.write_line(f"{status}  {number:2d}  {e['title']}" +
                                    (f"  [{detail}]" if detail else ""))
    n_pass = sum(e["passed"] for e in _CRITERIA.values())
    terminalreporter.write_line(f"{n_pass}/{len(_CRITERIA)} criteria passed")
