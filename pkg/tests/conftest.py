from __future__ import annotations

from pathlib import Path

import pytest

from evplan.io import load_network, load_stations
from evplan.netcore import RangeConfig, build_distance_table

DATA = Path(__file__).resolve().parent.parent / "src" / "evplan" / "data"
RANGE = RangeConfig(10.0, 0.5)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def worked():
    net = load_network(DATA / "worked_example" / "network.json")
    return net, build_distance_table(net)


@pytest.fixture(scope="session")
def bexar():
    net = load_network(DATA / "bexar" / "network.json")
    stations = load_stations(DATA / "bexar" / "stations.json", net)
    return net, build_distance_table(net), stations


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marks = getattr(report, "criterion", None)
    if marks is None:
        return
    n, title = marks
    _CRITERIA[n] = (title, "PASS" if report.passed else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, verdict = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {verdict}: {title}")
