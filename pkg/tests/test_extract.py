import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormkl import extract
from stormkl.detect import StormCluster


def cluster_at(cells):
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    return StormCluster(1, np.datetime64("2005-07-15T00:00:00"), cells, (0.0, 0.0),
                        np.zeros((len(cells), 4)))


def test_single_cell():
    field = np.array([[5.0, 0.0]])
    c = cluster_at([(0, 0)])
    assert extract.max_value(c, field) == 5.0
    assert extract.average_value(c, np.array([[7.0]])) == 7.0
    assert extract.total_weighted_value(c, np.array([[2.0]]), np.array([[100.0]])) == 200.0


def test_small_sets():
    field = np.array([[1.0, 3.0, 2.0]])
    c = cluster_at([(0, 0), (0, 1), (0, 2)])
    assert extract.max_value(c, field) == 3.0
    assert extract.average_value(cluster_at([(0, 0), (0, 2)]), np.array([[2.0, 9.0, 4.0]])) == 3.0


def test_weighted_total_unequal_areas():
    field = np.array([[1.0, 2.0], [3.0, 0.0]])
    areas = np.array([[10.0, 20.0], [30.0, 40.0]])
    c = cluster_at([(0, 0), (0, 1), (1, 0)])
    assert extract.total_weighted_value(c, field, areas) == pytest.approx(1 * 10 + 2 * 20 + 3 * 30)


def test_zero_field():
    c = cluster_at([(0, 0), (1, 1)])
    assert extract.total_weighted_value(c, np.zeros((2, 2)), np.ones((2, 2))) == 0.0


def test_random_clusters_against_scans():
    rng = np.random.default_rng(9)
    field = rng.gamma(2.0, 1.0, (20, 20))
    areas = rng.uniform(50, 150, (20, 20))
    for _ in range(100):
        k = rng.integers(1, 15)
        flat = rng.choice(400, k, replace=False)
        c = cluster_at(np.column_stack(np.divmod(flat, 20)))
        best, total, acc = -np.inf, 0.0, 0.0
        for j, i in c.cells:
            best = max(best, field[j, i])
            total += field[j, i] * areas[j, i]
            acc += field[j, i]
        assert extract.max_value(c, field) == best
        assert extract.total_weighted_value(c, field, areas) == pytest.approx(total, rel=1e-12)
        assert extract.average_value(c, field) == pytest.approx(acc / k, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(values=st.lists(st.floats(0, 1e3), min_size=1, max_size=12),
       scale=st.floats(0.001, 1000), seed=st.integers(0, 2**16))
def test_properties(values, scale, seed):
    n = len(values)
    field = np.array(values).reshape(1, n)
    areas = np.linspace(1, 2, n).reshape(1, n)
    c = cluster_at([(0, i) for i in range(n)])
    avg = extract.average_value(c, field)
    assert min(values) - 1e-9 <= avg <= extract.max_value(c, field) + 1e-9
    total = extract.total_weighted_value(c, field, areas)
    assert total >= 0
    assert extract.total_weighted_value(c, field * scale, areas) == pytest.approx(total * scale, rel=1e-9, abs=1e-12)
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = cluster_at([(0, i) for i in perm])
    assert extract.max_value(shuffled, field) == extract.max_value(c, field)
    assert extract.total_weighted_value(shuffled, field, areas) == pytest.approx(total, rel=1e-12, abs=1e-12)


def test_extract_attributes_fills_columns(make_grid):
    pr = np.zeros((3, 2, 3))
    pr[1, 0, 0] = 2.0
    lw = np.full((3, 2, 3), 250.0)
    lw[1, 0, 0] = 100.0
    grid = make_grid(lwtup=lw, prectot=pr)
    from stormkl import detect
    (c,) = extract.extract_attributes(detect.detect_clusters(grid), grid)
    assert set(extract.ATTRIBUTE_COLUMNS) <= set(c.attributes)
    assert c.attributes["total_weighted_prectot"] == pytest.approx(2.0 * grid.cell_areas()[0, 0])
