from __future__ import annotations

import math

import pytest
from hypothesis import HealthCheck, settings

from anosov_models.affine_flow import reentry_time_lower_bound
from anosov_models.geometry import ModelParams
from anosov_models.sections import catmap_params

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CATMAP_HALVINGS = 7


@pytest.fixture
def toy_params() -> ModelParams:
    """The worked example used across the module docs: lam = 1/2, r1 = 0.4, r2 = 0.1."""
    return ModelParams(0.5, 1, -1, 1, 0.4, 0.1)


@pytest.fixture(scope="session")
def catmap_feasible() -> tuple[ModelParams, float]:
    """Cat-map parameters after the halvings the search settles on, with their T1."""
    params = catmap_params(r1=0.5 / 2**CATMAP_HALVINGS)
    return params, reentry_time_lower_bound(params.r1, 0.5, params.lam)


def close(a: float, b: float, tol: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)


# ------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict, seconds = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title} ({seconds:.2f} s)")
