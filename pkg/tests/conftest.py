"""Shared fixtures and the per-criterion acceptance summary."""
from __future__ import annotations

import pytest

CRITERIA = {
    1: "Luxemburg norm agrees with classical closed forms",
    2: "half-unit indicator is Weyl-null",
    3: "power-weight threshold for the half-unit indicator",
    4: "orthant indicator: difference-mass bound and class verdicts",
    5: "Bohr-Fourier coefficients, shifts and cube agreement",
    6: "empty spectrum of the half-unit indicator",
    7: "metric calculus on random piecewise-constant triples",
    8: "limit closure for the square-root frequency series",
    9: "constant-coefficient variants coincide",
    10: "heat semigroup multiplier, Young transfer, lattice sum",
    11: "d'Alembert solution, residual order, period transfer",
    12: "evolution kernel reduction, covariance, weight transfer",
    13: "determinism and replay",
}

_outcomes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): test belongs to acceptance criterion k")


def pytest_runtest_logreport(report):
    k = getattr(report, "criterion", None)
    if k is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(k, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        tr.write_line(f"criterion {k:2d}  {status:7s}  {title}  ({len(results or [])} tests)")
