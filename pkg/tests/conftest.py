"""Shared fixtures and the per-criterion pass/fail summary."""
from fractions import Fraction
import itertools
import math
import os

import pytest
from hypothesis import HealthCheck, settings

from cachezf.placement import NetworkConfig

settings.register_profile("ci", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_CRITERIA: dict[int, list[tuple[str, str]]] = {}
_TITLES: dict[int, str] = {}


def integer_configs(max_k=4, include_saturated=False):
    """Integer replication factors with ``N = K_R``."""
    for kt in range(1, max_k + 1):
        for kr in range(1, max_k + 1):
            N = kr
            for t_t in range(1, kt + 1):
                for t_r in range(0, kr + 1):
                    if t_t + t_r > kr and not include_saturated:
                        continue
                    yield NetworkConfig(kt, kr, N, Fraction(t_t * N, kt), Fraction(t_r * N, kr))


def distinct_demands(cfg):
    return list(itertools.permutations(range(1, cfg.n_files + 1), cfg.k_r))


@pytest.fixture
def demo_cfg():
    return NetworkConfig(3, 3, 3, Fraction(2), Fraction(1), 9)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        num, title = marker
        _TITLES[num] = title
        _CRITERIA.setdefault(num, []).append((report.nodeid, report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            item.user_properties.append(("criterion", (m.args[0], m.kwargs.get("title", ""))))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        outcomes = [o for _, o in _CRITERIA[num]]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict}  {_TITLES[num]} ({len(outcomes)} checks)")
