import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stormkl import detect, evaluate, extract, scenario  # noqa: E402

ACCEPTANCE_LINES = []

STUDY_SPEC = scenario.ScenarioSpec(seed=20050715)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line[1])


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""
    def _report(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return _report


def small_grid(n_t=3, lat=(30.0, 32.0), lon=(-110.0, -107.0), res=1.0, lwtup=None, prectot=None):
    lat_axis = scenario.GridAxis(np.arange(lat[0], lat[1] + res / 2, res), "lat")
    lon_axis = scenario.GridAxis(np.arange(lon[0], lon[1] + res / 2, res), "lon")
    times = np.datetime64("2005-07-15T00:00:00", "s") + np.arange(n_t) * np.timedelta64(1800, "s")
    shape = (n_t, len(lat_axis), len(lon_axis))
    lw = np.full(shape, 250.0) if lwtup is None else lwtup
    pr = np.zeros(shape) if prectot is None else prectot
    return scenario.NatureRunGrid(lat_axis, lon_axis, times, {"LWTUP": lw, "PRECTOT": pr})


@pytest.fixture
def make_grid():
    return small_grid


@pytest.fixture(scope="session")
def study():
    """The 62-day synthetic scenario with a 17:00 local storm peak, fully detected."""
    grid = scenario.generate_synthetic_scenario(STUDY_SPEC)
    clusters = extract.extract_attributes(detect.detect_clusters(grid), grid)
    return {"grid": grid, "clusters": clusters, "configs": evaluate.bundled_manifest()}


@pytest.fixture(scope="session")
def study_results(study):
    return evaluate.evaluate_study(study["configs"], study["clusters"], study["grid"].time_range)
