"""scikit-learn front ends: parameter plumbing and parity with the core."""

import numpy as np
import pytest
from sklearn.base import clone

import fwdvol as fv
from fwdvol.estimators import MaturityRateEstimator, VolatilityCurveEstimator


@pytest.fixture(scope="module")
def sim():
    spec, grid = fv.benchmark_config("d2", theta=10.0)
    panel = fv.simulate_panel(spec, grid, seed=12)
    return panel, panel.values.T  # X: dates as rows


def test_get_params_set_params_clone(sim):
    est = MaturityRateEstimator(method="qv2")
    params = est.get_params()
    assert params["method"] == "qv2"
    est.set_params(method="one_step", bandwidth_days=21.0)
    assert est.method == "one_step"
    dup = clone(est)
    assert dup.get_params() == est.get_params()


def test_fit_matches_functional_qv2(sim):
    panel, X = sim
    est = MaturityRateEstimator(
        maturities=panel.grid.maturities, horizon=panel.grid.horizon, method="qv2"
    ).fit(X)
    want = fv.theta_hat_2(panel)
    assert est.theta_ == want.value
    assert est.status_ == "converged"
    assert est.n_features_in_ == 2


def test_fit_one_step_matches_pipeline(sim):
    panel, X = sim
    box = (0.01, 0.05)
    est = MaturityRateEstimator(
        maturities=panel.grid.maturities, horizon=panel.grid.horizon,
        method="one_step", bandwidth_days=14.0, clamp_box=box, ci_level=0.95,
    ).fit(X)
    prelim = fv.theta_hat_2(panel)
    curve = fv.estimate_vol_curves(panel, prelim.value, 14 / 365, clamp_box=box)
    want = fv.one_step(panel, prelim, curve, clamp_box=box)
    want = fv.confidence_interval(want, curve, panel.grid, 0.95)
    assert est.theta_ == want.value
    assert est.ci_ == want.ci
    assert est.plugin_variance_ == want.plugin_variance


def test_fit_qv3_rows():
    spec, grid = fv.benchmark_config("d3", theta=10.0)
    panel = fv.simulate_panel(spec, grid, seed=4)
    est = MaturityRateEstimator(
        maturities=grid.maturities, horizon=grid.horizon, method="qv3"
    ).fit(panel.values.T)
    assert est.theta_ == fv.theta_hat_3(panel).value
    assert est.ci_ is None


def test_fit_rejects_mismatched_columns(sim):
    _, X = sim
    est = MaturityRateEstimator(maturities=(0.3, 0.4, 0.5))
    with pytest.raises(fv.DomainError):
        est.fit(X)


def test_vol_curve_estimator_parity(sim):
    panel, X = sim
    vce = VolatilityCurveEstimator(
        maturities=panel.grid.maturities, horizon=panel.grid.horizon,
        theta=10.0, bandwidth_days=14.0,
    ).fit(X)
    want = fv.estimate_vol_curves(panel, 10.0, 14 / 365)
    assert np.array_equal(vce.curves_.sigma_sq, want.sigma_sq)
    assert np.array_equal(vce.curves_.sigma_bar_sq, want.sigma_bar_sq)
    out = vce.transform()
    assert out.shape == (want.times.size, 3)
    assert np.array_equal(out[:, 0], want.times)


def test_vol_curve_estimator_estimates_rate_when_missing(sim):
    panel, X = sim
    vce = VolatilityCurveEstimator(
        maturities=panel.grid.maturities, horizon=panel.grid.horizon
    ).fit(X)
    prelim = fv.theta_hat_2(panel)
    assert vce.theta_used_ == pytest.approx(max(prelim.value, vce.floor_theta))


def test_transform_before_fit_raises(sim):
    vce = VolatilityCurveEstimator()
    with pytest.raises(fv.DomainError):
        vce.transform()
