from pathlib import Path

import numpy as np
import pytest


SYNTHETIC = Path(__file__).resolve().parents[1] / "src" / "discotree" / "data" / "synthetic"

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _criteria.get(label, "PASS")
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if prev == "FAIL" or (prev == "SKIP" and outcome == "PASS"):
            outcome = prev
        _criteria[label] = outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0].rstrip("."))):
        terminalreporter.write_line(f"{_criteria[label]:<5} {label}")


@pytest.fixture
def synthetic_corpus():
    return SYNTHETIC


@pytest.fixture
def rng():
    return np.random.default_rng(20220714)
