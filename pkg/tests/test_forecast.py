"""Rolling one-step evaluation: split handling, record consistency, refresh identity."""

import math

import numpy as np
import pytest

from ctreemix import Quantizer, builtin_specs, fit_series, generate
from ctreemix.forecasting import (
    RunConfig,
    gaussian_log_density,
    resolve_train_len,
    rolling_forecast,
)

from helpers import small_ar_model


class TestSplit:
    def test_default_is_half(self):
        assert resolve_train_len(600, None, None, None) == 300

    def test_fraction_and_absolute(self):
        assert resolve_train_len(200, 0.25, None, None) == 50
        assert resolve_train_len(200, None, 120, None) == 120
        assert resolve_train_len(200, None, None, 30) == 170

    def test_conflicting_or_degenerate(self):
        with pytest.raises(ValueError):
            resolve_train_len(100, 0.5, 50, None)
        with pytest.raises(ValueError):
            resolve_train_len(100, None, 100, None)
        with pytest.raises(ValueError):
            resolve_train_len(100, None, None, 100)


class TestRollingAr:
    def test_record_consistency(self):
        series = generate(builtin_specs()["sim_1"].spec, 200, seed=0)
        rep = rolling_forecast(series, RunConfig(kind="ar", thresholds=(0.0,), order=2, depth=5))
        assert len(rep.records) == len(series) - rep.train_len
        for r in rep.records:
            assert r.squared_error == (r.realised - r.mean) ** 2
            assert r.variance > 0
            assert r.log_density == pytest.approx(
                gaussian_log_density(r.realised, r.mean, r.variance), rel=1e-12
            )
        assert rep.mse == pytest.approx(np.mean([r.squared_error for r in rep.records]))
        assert rep.cumulative_log_loss == pytest.approx(-np.sum([r.log_density for r in rep.records]))

    def test_constant_series_with_intercept_is_learned(self):
        series = np.full(240, 3.7)
        rep = rolling_forecast(
            series,
            RunConfig(kind="ar", thresholds=(0.0,), order=1, depth=2, intercept=True),
        )
        assert rep.mse < 1e-3
        assert rep.records[-1].squared_error < 1e-5

    def test_incremental_equals_refit_from_scratch(self):
        # bitwise: the path refresh must reproduce a cold fit at every step
        from ctreemix.forecasting import refresh_map_per_step

        series = generate(builtin_specs()["sim_1"].spec, 160, seed=1)
        split = 80
        q = Quantizer((0.0,))
        fitted = fit_series(series[:split], small_ar_model(2), q, 4, 0.5)
        for i in range(split, len(series)):
            mean_inc, var_inc = fitted.predict_next()
            cold = fit_series(series[:i], small_ar_model(2), q, 4, 0.5)
            mean_cold, var_cold = cold.predict_next()
            assert mean_inc == mean_cold and var_inc == var_cold
            assert fitted.log_evidence() == cold.log_evidence()
            assert fitted.map_tree() == cold.map_tree()
            refreshed = refresh_map_per_step(fitted, float(series[i]))
            full = fit_series(series[: i + 1], small_ar_model(2), q, 4, 0.5)
            assert refreshed == full.map_tree()

    def test_shift_invariance_of_states(self):
        # shifting data and thresholds together leaves every quantized
        # symbol unchanged; predictions agree up to the prior's pull on the
        # intercept, which is not shift-equivariant
        spec = builtin_specs()["sim_1"].spec
        series = generate(spec, 300, seed=2)
        shift = 0.5
        q, q_shift = Quantizer((0.0,)), Quantizer((shift,))
        assert [q(v) for v in series] == [q_shift(v + shift) for v in series]
        cfg = RunConfig(kind="ar", thresholds=(0.0,), order=2, depth=6, intercept=True)
        cfg_shift = RunConfig(kind="ar", thresholds=(shift,), order=2, depth=6, intercept=True)
        rep = rolling_forecast(series, cfg)
        rep_shift = rolling_forecast(series + shift, cfg_shift)
        assert rep_shift.mse == pytest.approx(rep.mse, rel=0.05)

    def test_beats_single_model_on_regime_data(self):
        series = generate(builtin_specs()["sim_1"].spec, 600, seed=3)
        mixture = rolling_forecast(series, RunConfig(kind="ar", thresholds=(0.0,), order=2, depth=10))
        single = rolling_forecast(series, RunConfig(kind="ar", thresholds=(0.0,), order=2, depth=0))
        assert mixture.mse < single.mse


class TestRollingArch:
    def test_log_loss_beats_constant_variance(self):
        series = generate(builtin_specs()["arch_sim"].spec, 1300, seed=4)
        rep = rolling_forecast(
            series,
            RunConfig(kind="arch", thresholds=(0.0,), order=2, depth=3, fisher_iters=10),
            test_last=130,
        )
        assert math.isfinite(rep.cumulative_log_loss)
        train = series[: rep.train_len]
        const_var = float(np.var(train))
        baseline = -sum(
            gaussian_log_density(r.realised, 0.0, const_var) for r in rep.records
        )
        assert rep.cumulative_log_loss < baseline

    def test_first_step_matches_batch_fit(self):
        series = generate(builtin_specs()["arch_sim"].spec, 400, seed=5)
        cfg = RunConfig(kind="arch", thresholds=(0.0,), order=2, depth=3, fisher_iters=10)
        rep = rolling_forecast(series, cfg, train_len=350)
        fitted = fit_series(series[:350], cfg.make_model(), cfg.quantizer(), 3, cfg.beta)
        mean, var = fitted.predict_next()
        assert rep.records[0].mean == mean
        assert rep.records[0].variance == var
