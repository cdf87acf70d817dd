"""scikit-learn style front ends over the functional estimation core.

``X`` follows the ecosystem convention of samples as rows: one row per
observation date, one column per maturity, log-prices already taken.  Both
classes are plain ``BaseEstimator`` subclasses, so ``get_params`` /
``set_params``, cloning and pipeline composition work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .errors import DomainError
from .grids import DAYS_PER_YEAR, MaturityGrid
from .onestep import confidence_interval, one_step
from .qv import theta_hat_2, theta_hat_3, theta_hat_d
from .simulate import PricePanel
from .volcurves import DEFAULT_FLOOR_THETA, cv_bandwidth, estimate_vol_curves


def _panel_from_X(X, maturities, horizon) -> PricePanel:
    X = check_array(X, ensure_min_samples=3, ensure_min_features=2)
    mats = tuple(float(m) for m in maturities)
    grid = MaturityGrid(
        maturities=mats,
        horizon=float(horizon) if horizon is not None else mats[0],
        n_obs=X.shape[0] - 1,
    )
    if X.shape[1] != grid.d:
        raise DomainError(
            f"X has {X.shape[1]} columns but {grid.d} maturities were given"
        )
    return PricePanel(grid=grid, values=X.T)


def _resolve_bandwidth(panel, prelim_value, bandwidth_days, rows):
    if bandwidth_days == "cv":
        delta = panel.grid.delta
        cands = [d / DAYS_PER_YEAR for d in (7.0, 14.0, 21.0, 28.0, 35.0)]
        cands = [h for h in cands if h >= 2.0 * delta] or [2.0 * delta]
        return cv_bandwidth(panel, prelim_value, cands, rows=rows)
    return float(bandwidth_days) / DAYS_PER_YEAR


class MaturityRateEstimator(BaseEstimator):
    """Estimate the time-to-maturity rate from a log-price panel.

    Parameters
    ----------
    maturities : sequence of float
        Delivery dates in years from the first observation.
    horizon : float, optional
        Last observation time in years; defaults to the first maturity.
    method : {"qv2", "qv3", "qvd", "one_step"}
    rows : tuple of int, optional
        Which maturity columns feed the estimator (defaults to the leading ones).
    bandwidth_days : float or "cv"
        Curve bandwidth used by the one-step correction.
    ci_level : float, optional
        When set (and the method supports it), fit attaches a confidence interval.
    """

    def __init__(
        self,
        maturities=(150.0 / 365.0, 181.0 / 365.0),
        horizon=None,
        method="qv2",
        rows=None,
        bandwidth_days=14.0,
        floor_theta=DEFAULT_FLOOR_THETA,
        clamp_box=None,
        ci_level=None,
    ):
        self.maturities = maturities
        self.horizon = horizon
        self.method = method
        self.rows = rows
        self.bandwidth_days = bandwidth_days
        self.floor_theta = floor_theta
        self.clamp_box = clamp_box
        self.ci_level = ci_level

    def fit(self, X, y=None):
        panel = _panel_from_X(X, self.maturities, self.horizon)
        method = self.method
        if method == "qv3":
            est = theta_hat_3(panel, self.rows or (0, 1, 2))
            curves = None
        elif method == "qvd":
            est = theta_hat_d(panel, self.rows)
            curves = None
        elif method in ("qv2", "one_step"):
            pair = tuple(self.rows or (0, 1))[:2]
            est = theta_hat_2(panel, pair)
            curves = None
            if est.converged:
                h = _resolve_bandwidth(panel, est.value, self.bandwidth_days, pair)
                curves = estimate_vol_curves(
                    panel, est.value, h, floor_theta=self.floor_theta,
                    clamp_box=self.clamp_box, rows=pair,
                )
                if method == "one_step":
                    est = one_step(panel, est, curves, clamp_box=self.clamp_box, rows=pair)
                if self.ci_level is not None and est.converged:
                    est = confidence_interval(est, curves, panel.grid, self.ci_level)
        else:
            raise DomainError(f"unknown method {method!r}")

        self.n_features_in_ = panel.grid.d
        self.estimate_ = est
        self.theta_ = est.value
        self.status_ = est.status.value
        self.ci_ = est.ci
        self.plugin_variance_ = est.plugin_variance
        self.curves_ = curves
        return self


class VolatilityCurveEstimator(BaseEstimator):
    """Recover the two squared-volatility trajectories from a two-column panel.

    ``theta`` may be fixed a priori; by default it is re-estimated from the
    panel with the two-maturity ratio estimator before the kernel inversion.
    """

    def __init__(
        self,
        maturities=(150.0 / 365.0, 181.0 / 365.0),
        horizon=None,
        theta=None,
        bandwidth_days=14.0,
        floor_theta=DEFAULT_FLOOR_THETA,
        clamp_box=None,
    ):
        self.maturities = maturities
        self.horizon = horizon
        self.theta = theta
        self.bandwidth_days = bandwidth_days
        self.floor_theta = floor_theta
        self.clamp_box = clamp_box

    def fit(self, X, y=None):
        panel = _panel_from_X(X, self.maturities, self.horizon)
        theta = self.theta
        if theta is None:
            prelim = theta_hat_2(panel)
            theta = prelim.value if prelim.converged else self.floor_theta
        h = _resolve_bandwidth(panel, theta, self.bandwidth_days, (0, 1))
        self.curves_ = estimate_vol_curves(
            panel, theta, h, floor_theta=self.floor_theta, clamp_box=self.clamp_box
        )
        self.theta_used_ = float(max(theta, self.floor_theta))
        self.n_features_in_ = panel.grid.d
        return self

    def transform(self, X=None):
        """Return the fitted curves as columns (t, sigma_sq, sigma_bar_sq)."""
        if not hasattr(self, "curves_"):
            raise DomainError("call fit before transform")
        c = self.curves_
        return np.column_stack([c.times, c.sigma_sq, c.sigma_bar_sq])

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform()
