import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cell_area_quadrature
from stormkl import detect, scenario
from stormkl.scenario import DataFormatError, GridAxis, ScenarioSpec

EQUATOR_CELL_KM2 = 12364.15  # quadrature oracle, 1x1 deg centred on the equator


def test_cell_area_equator():
    assert scenario.cell_area(-0.5, 0.5, 0.0, 1.0) == pytest.approx(EQUATOR_CELL_KM2, abs=1.0)


def test_cell_area_matches_quadrature_at_60n():
    ratio = scenario.cell_area(59.5, 60.5, 10.0, 11.0) / scenario.cell_area(-0.5, 0.5, 10.0, 11.0)
    assert ratio == pytest.approx(0.5, rel=0.01)
    assert scenario.cell_area(59.5, 60.5, 10.0, 11.0) == pytest.approx(
        cell_area_quadrature(59.5, 60.5, 10.0, 11.0), rel=1e-9)


@pytest.mark.parametrize("bounds", [(0, 1, 5, 5), (1, 0, 0, 1), (0, 1, 2, 1), (-91, 0, 0, 1)])
def test_cell_area_rejects_bad_bounds(bounds):
    with pytest.raises(ValueError):
        scenario.cell_area(*bounds)


def test_cell_areas_cover_the_sphere():
    total = scenario.cell_areas(np.arange(-90, 91, 3.0), np.arange(-180, 181, 5.0)).sum()
    assert total == pytest.approx(4 * math.pi * 6371.0 ** 2, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(lat=st.floats(0, 88), width=st.floats(0.1, 2.0))
def test_cell_area_decreases_poleward(lat, width):
    lo = scenario.cell_area(lat, lat + width, 0, width)
    hi = scenario.cell_area(min(lat + 1.0, 90 - width), min(lat + 1.0, 90 - width) + width, 0, width)
    assert hi <= lo * (1 + 1e-12)


def test_axis_invariants():
    with pytest.raises(ValueError):
        GridAxis([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        GridAxis([-100.0, 0.0], "lat")
    assert np.allclose(GridAxis([0.0, 1.0, 3.0]).centers, [0.5, 2.0])


def test_grid_rejects_negative_precip(make_grid):
    pr = np.zeros((3, 2, 3))
    pr[0, 0, 0] = -1.0
    with pytest.raises(ValueError, match="PRECTOT"):
        make_grid(prectot=pr)


def test_grid_is_immutable(make_grid):
    g = make_grid()
    with pytest.raises(ValueError):
        g.variables["LWTUP"][0, 0, 0] = 1.0


# .nrg format ---------------------------------------------------------------

def _write_nrg(path, rows, timestamps=("2005-07-15T00:00:00Z", "2005-07-15T00:30:00Z")):
    meta = {"lat_edges": [30.0, 31.0, 32.0], "lon_edges": [-110.0, -109.0, -108.0],
            "timestamps": list(timestamps),
            "variables": [{"name": "PRECTOT", "units": "kg m-2 s-1"}]}
    path.write_text("NRG1\n" + json.dumps(meta) + "\n" + "\n".join(rows) + "\n")
    return path


def test_load_well_formed(tmp_path):
    p = _write_nrg(tmp_path / "ok.nrg", ["0,1,2,3", "4,5,6,7"])
    g = scenario.load_dataset(p)
    assert g.shape == (2, 2, 2)
    assert g.variables["PRECTOT"][1, 1, 0] == 6.0
    assert g.units["PRECTOT"] == "kg m-2 s-1"


def test_load_row_count_mismatch(tmp_path):
    p = _write_nrg(tmp_path / "short.nrg", ["0,1,2,3"])
    with pytest.raises(DataFormatError, match="shape mismatch"):
        scenario.load_dataset(p)


def test_load_row_width_mismatch_reports_line(tmp_path):
    p = _write_nrg(tmp_path / "wide.nrg", ["0,1,2,3", "4,5,6"])
    with pytest.raises(DataFormatError, match=r":4: shape mismatch"):
        scenario.load_dataset(p)


def test_load_negative_precip(tmp_path):
    p = _write_nrg(tmp_path / "neg.nrg", ["0,-1,2,3", "4,5,6,7"])
    with pytest.raises(DataFormatError, match="non-negative"):
        scenario.load_dataset(p)


def test_load_non_monotonic_times(tmp_path):
    p = _write_nrg(tmp_path / "t.nrg", ["0,1,2,3", "4,5,6,7"],
                   timestamps=("2005-07-15T00:30:00Z", "2005-07-15T00:00:00Z"))
    with pytest.raises(DataFormatError, match="not strictly increasing"):
        scenario.load_dataset(p)


def test_load_bad_header(tmp_path):
    p = tmp_path / "bad.nrg"
    p.write_text("NRG2\n{}\n")
    with pytest.raises(DataFormatError, match=":1:"):
        scenario.load_dataset(p)
    p.write_text("NRG1\n{not json\n")
    with pytest.raises(DataFormatError, match=":2:"):
        scenario.load_dataset(p)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        scenario.load_dataset(tmp_path / "nope.nrg")


def test_round_trip_bit_exact(tmp_path):
    spec = ScenarioSpec(end="2005-07-17T00:00:00Z", resolution_deg=1.0, seed=3)
    g = scenario.generate_synthetic_scenario(spec)
    back = scenario.load_dataset(scenario.save_dataset(g, tmp_path / "g.nrg"))
    assert np.array_equal(back.timestamps, g.timestamps)
    for name in g.variables:
        assert np.array_equal(back.variables[name], g.variables[name])


# synthetic generator ------------------------------------------------------

def test_zero_rate_is_clear():
    spec = ScenarioSpec(end="2005-07-16T00:00:00Z", storm_rate=0.0)
    g = scenario.generate_synthetic_scenario(spec)
    assert g.variables["LWTUP"].min() > detect.temperature_to_flux(220.0)
    assert not g.variables["PRECTOT"].any()


def test_generation_is_deterministic():
    spec = ScenarioSpec(end="2005-07-18T00:00:00Z", seed=42)
    a = scenario.generate_synthetic_scenario(spec)
    b = scenario.generate_synthetic_scenario(spec)
    for name in a.variables:
        assert a.variables[name].tobytes() == b.variables[name].tobytes()


def test_cold_cells_carry_rain():
    g = scenario.generate_synthetic_scenario(ScenarioSpec(end="2005-07-18T00:00:00Z", seed=1))
    cold = g.variables["LWTUP"] < detect.temperature_to_flux(220.0)
    assert cold.any()
    assert np.all(g.variables["PRECTOT"][cold] > 0)


def test_diurnal_peak_of_storm_cells():
    # ~1000 storms: 10 days at 2.1 storms per 30-min step
    spec = ScenarioSpec(end="2005-07-25T00:00:00Z", storm_rate=2.1, peak_local_hour=17.0,
                        concentration=2.0, seed=11)
    g = scenario.generate_synthetic_scenario(spec)
    cold = g.variables["LWTUP"] < detect.temperature_to_flux(220.0)
    t_idx, _, i_idx = np.nonzero(cold)
    utc_h = (g.timestamps[t_idx].astype(np.int64) % 86400) / 3600.0
    local = np.mod(utc_h + g.lon_axis.centers[i_idx] / 15.0, 24.0)
    hist, _ = np.histogram(local, bins=24, range=(0, 24))
    peak = np.argmax(hist) + 0.5
    gap = min(abs(peak - 17.0), 24 - abs(peak - 17.0))
    assert gap <= 1.0


@pytest.mark.parametrize("kwargs", [
    {"lat_min": 30.0, "lat_max": 30.2, "resolution_deg": 0.5},
    {"step_minutes": 60 * 24 * 90},
])
def test_generator_errors(kwargs):
    with pytest.raises(ValueError):
        scenario.generate_synthetic_scenario(ScenarioSpec(**kwargs))


def test_spec_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown"):
        ScenarioSpec.from_dict({"storm_rte": 1.0})
