import numpy as np
import pytest

from ctreemix import builtin_specs, generate
from ctreemix.forecasting import RunConfig
from ctreemix.selection import (
    SelectionGrid,
    default_grid,
    percentile_threshold_grid,
    select_hyperparams,
)


def ar_factory(intercept=False):
    return RunConfig(kind="ar", thresholds=(0.0,), order=1, depth=6, intercept=intercept).make_model


def test_single_candidate_returned():
    series = generate(builtin_specs()["sim_1"].spec, 120, seed=0)
    grid = SelectionGrid(orders=(2,), thresholds=((0.0,),))
    res = select_hyperparams(series, grid, ar_factory(), depth=6)
    assert res.thresholds == (0.0,) and res.order == 2
    assert len(res.table) == 1


def test_table_invariant_to_candidate_order():
    series = generate(builtin_specs()["sim_1"].spec, 150, seed=1)
    a = SelectionGrid(orders=(1, 2), thresholds=((0.0,), (0.1,)))
    b = SelectionGrid(orders=(2, 1), thresholds=((0.1,), (0.0,)))
    ra = select_hyperparams(series, a, ar_factory(), depth=6)
    rb = select_hyperparams(series, b, ar_factory(), depth=6)
    assert (ra.thresholds, ra.order) == (rb.thresholds, rb.order)
    cells_a = {(c.thresholds, c.order): c.log_evidence for c in ra.table}
    cells_b = {(c.thresholds, c.order): c.log_evidence for c in rb.table}
    assert cells_a == cells_b


def test_ties_prefer_smaller_order():
    series = np.zeros(60) + 1.0
    series[::2] = -1.0  # alternating, both orders fit identically poorly or well
    grid = SelectionGrid(orders=(1, 2), thresholds=((0.0,),))
    res = select_hyperparams(series, grid, ar_factory(), depth=3)
    cells = {c.order: c.log_evidence for c in res.table}
    if np.isclose(cells[1], cells[2]):
        assert res.order == 1


def test_percentile_grid_properties():
    rng = np.random.default_rng(2)
    data = rng.normal(size=400)
    grid = percentile_threshold_grid(data, 2, points=17)
    assert len(grid) == 17
    values = [t[0] for t in grid]
    assert values == sorted(values)
    assert values[0] >= np.percentile(data, 10) - 1e-12
    assert values[-1] <= np.percentile(data, 90) + 1e-12
    pairs = percentile_threshold_grid(data, 3, points=6)
    assert all(a < b for a, b in pairs)
    assert len(pairs) == 15  # C(6, 2)


def test_degenerate_grid_reported():
    series = generate(builtin_specs()["sim_1"].spec, 100, seed=3)
    grid = SelectionGrid(orders=(50,), thresholds=((0.0,),))  # order exceeds data
    with pytest.raises(RuntimeError):
        select_hyperparams(series[:45], grid, ar_factory(), depth=40)


def test_nested_truth_wins_on_long_series():
    # the order-2 generator should beat order-1 on most long realisations
    spec = builtin_specs()["sim_1"].spec
    wins = 0
    for seed in range(10):
        series = generate(spec, 400, seed=seed)
        grid = SelectionGrid(orders=(1, 2), thresholds=((0.0,),))
        res = select_hyperparams(series, grid, ar_factory(), depth=6)
        wins += res.order == 2
    assert wins >= 8


def test_threshold_ar_data_prefers_long_memory():
    # the two-regime lag-5 generator should drive the order choice to 5
    spec = builtin_specs()["sim_3"].spec
    wins = 0
    for seed in range(8):
        series = generate(spec, 200, seed=seed)
        grid = default_grid(series[:100], 2, max_order=5)
        res = select_hyperparams(series[:100], grid, ar_factory(), depth=10)
        wins += res.order == 5
    assert wins >= 5


def test_grid_validation():
    with pytest.raises(ValueError):
        SelectionGrid(orders=(), thresholds=((0.0,),))
    with pytest.raises(ValueError):
        SelectionGrid(orders=(1,), thresholds=((0.3, 0.1),))
