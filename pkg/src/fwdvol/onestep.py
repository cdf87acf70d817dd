"""Efficient score, one-step corrected rate estimate, and feasible intervals.

The two-maturity ratio estimator is rate-optimal but not efficient when the
common volatility varies over time.  A single Newton-type step along the
efficient score - whose closed form depends only on the common squared
volatility - moves it to the semiparametric variance bound.  Plug-in
confidence intervals for both estimators come from the limit-variance
formulas of :mod:`fwdvol.model` evaluated on estimated curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NumericalError, ScoreDomainError
from .grids import MaturityGrid
from .model import _simpson, _variance_prefactor
from .qv import EstimateStatus, ThetaEstimate
from .simulate import PricePanel
from .volcurves import VolCurveEstimate

_TIME_TOL = 1e-12

# Default ellipticity box for the common squared volatility on real data,
# in 1/years: generous but keeps score weights bounded.
DEFAULT_CLAMP_BOX = (1e-4, 1e2)


@dataclass(frozen=True)
class ScoreContext:
    """Everything the per-increment efficient score needs.

    ``indices`` holds the 1-based increment indices i with
    bandwidth <= (i-1)*delta < T, and ``sigma_bar_sq`` the (clamped) common
    squared volatility at those left endpoints.
    """

    theta: float
    sigma_bar_sq: np.ndarray
    delta: float
    T1: float
    T2: float
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma_bar_sq", np.asarray(self.sigma_bar_sq, float))
        object.__setattr__(self, "indices", np.asarray(self.indices, int))
        if self.theta <= 0.0:
            raise DomainError("score context needs a positive rate")
        if self.indices.size == 0:
            raise DomainError("score context needs a non-empty index set")
        if self.sigma_bar_sq.shape != self.indices.shape:
            raise DomainError("one sigma_bar^2 value per index is required")
        if np.any(self.sigma_bar_sq <= 0.0):
            raise ScoreDomainError(
                "common squared volatility must be strictly positive; "
                "clamp the curve estimate before building the score"
            )


def _score_values(dx1, dx2, theta, mu, delta, T1, T2):
    dT = T2 - T1
    one_minus_eps = -math.expm1(-theta * dT)  # 1 - e^{-theta dT}
    if abs(one_minus_eps) < 1e-10:
        raise ScoreDomainError("rate * maturity gap too small: cube denominator underflows")
    eps = math.exp(-theta * dT)
    scale = eps * dT / (one_minus_eps**3 * delta)
    return (dx2 - dx1) * (dx2 - eps * dx1) * scale / mu


def efficient_score(dx1: float, dx2: float, ctx: ScoreContext, i: int) -> float:
    """Efficient score of one increment pair at the context's rate.

    (dx2 - dx1) * (dx2 - e^{-theta dT} dx1) * e^{-theta dT} * dT
    / ((1 - e^{-theta dT})^3 * delta * sigma_bar^2_{(i-1) delta}).
    """
    pos = np.searchsorted(ctx.indices, i)
    if pos >= ctx.indices.size or ctx.indices[pos] != i:
        raise DomainError(f"increment index {i} not in the score index set")
    return float(
        _score_values(dx1, dx2, ctx.theta, ctx.sigma_bar_sq[pos], ctx.delta, ctx.T1, ctx.T2)
    )


def discretize_rate(theta: float, delta: float) -> float:
    """Snap a preliminary rate down to the sqrt(delta) lattice."""
    step = math.sqrt(delta)
    return step * math.floor(theta / step)


def score_index_set(grid: MaturityGrid, bandwidth: float) -> np.ndarray:
    """1-based increment indices i with bandwidth <= (i-1)*delta < T."""
    k = np.arange(grid.n_obs)  # k = i - 1
    keep = k * grid.delta >= bandwidth - _TIME_TOL
    return k[keep] + 1


def one_step(
    panel: PricePanel,
    prelim: ThetaEstimate,
    vol: VolCurveEstimate,
    clamp_box: Optional[tuple[float, float]] = None,
    rows: Sequence[int] = (0, 1),
) -> ThetaEstimate:
    """One-step efficient correction of a converged two-maturity estimate.

    The preliminary rate is discretized to the sqrt(delta) lattice, the
    efficient scores are summed over the increments with curve coverage, and
    the corrected rate is the discretized value plus (sum of scores) / (sum
    of squared scores).  A non-converged preliminary estimate passes through
    untouched; a zero squared-score sum yields the discretized value with a
    ``zero_score_sum`` flag.  ``clamp_box`` clamps the plug-in curve values.
    """
    if not prelim.converged:
        return prelim
    grid = panel.grid
    delta = grid.delta
    theta_disc = discretize_rate(prelim.value, delta)
    if theta_disc <= 0.0:
        raise ScoreDomainError("preliminary rate below one lattice step; no score defined")
    T1, T2 = (grid.maturities[r] for r in rows)

    indices = score_index_set(grid, vol.bandwidth)
    if indices.size == 0:
        raise DomainError("bandwidth leaves no increments for the correction")
    t_left = (indices - 1) * delta
    mu = vol.sigma_bar_sq_at(t_left)
    if clamp_box is not None:
        mu = np.clip(mu, clamp_box[0], clamp_box[1])
    ctx = ScoreContext(
        theta=theta_disc, sigma_bar_sq=mu, delta=delta, T1=T1, T2=T2, indices=indices
    )

    dx = panel.increments[list(rows)]
    sel = indices - 1
    scores = _score_values(dx[0][sel], dx[1][sel], theta_disc, mu, delta, T1, T2)
    s1 = float(np.sum(scores))
    s2 = float(np.sum(scores**2))
    if s2 == 0.0:
        return replace(
            prelim, method="one_step", value=theta_disc, flags=prelim.flags + ("zero_score_sum",)
        )
    correction = s1 / s2
    # floating-point dust in the scores (data exactly on a zero line) can
    # produce a 0/0-like blow-up; treat it as "no usable correction"
    if not math.isfinite(correction) or abs(correction) > 1e3:
        return replace(
            prelim, method="one_step", value=theta_disc,
            flags=prelim.flags + ("correction_overflow",),
        )
    value = theta_disc + correction
    if value <= 0.0:
        return replace(
            prelim, method="one_step", value=theta_disc,
            flags=prelim.flags + ("correction_not_positive",),
        )
    return ThetaEstimate(status=EstimateStatus.CONVERGED, method="one_step", value=value)


# ---------------------------------------------------------------------------
# Feasible confidence intervals
# ---------------------------------------------------------------------------


def norm_ppf(p: float) -> float:
    """Standard normal quantile by rational approximation (|error| < 1e-8)."""
    if not (0.0 < p < 1.0):
        raise DomainError("quantile level must lie strictly inside (0, 1)")
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    )


def plugin_limit_variances(
    theta: float, vol: VolCurveEstimate, grid: MaturityGrid
) -> tuple[float, float]:
    """Limit variances (ratio estimator, efficient bound) from estimated curves.

    Integrals run over [bandwidth, T] where the curves exist and are rescaled
    by T / (T - bandwidth) to stand in for the full-interval integrals.  The
    short-factor curve is floored at zero inside the integrands; the common
    curve must be strictly positive (clamp it when estimating).
    """
    t = vol.times
    s2 = np.maximum(vol.sigma_sq, 0.0)
    sb2 = vol.sigma_bar_sq
    if np.any(sb2 <= 0.0):
        raise NumericalError(
            "plug-in needs strictly positive common volatility; re-estimate with a clamp box"
        )
    T = grid.horizon
    rescale = T / (T - vol.bandwidth)
    if rescale <= 0.0:
        raise NumericalError("bandwidth must be smaller than the horizon")
    w = np.exp(2.0 * theta * t) * s2
    int_w = rescale * _simpson(w, t)
    int_w_sb = rescale * _simpson(w * sb2, t)
    int_w_over_sb = rescale * _simpson(w / sb2, t)
    if int_w <= 0.0 or int_w_over_sb <= 0.0:
        raise NumericalError("plug-in short-factor integral not positive")
    pref = _variance_prefactor(theta, grid.maturities[0], grid.maturities[1])
    return pref * int_w_sb / int_w**2, pref / int_w_over_sb


def confidence_interval(
    est: ThetaEstimate,
    vol: VolCurveEstimate,
    grid: MaturityGrid,
    level: float = 0.95,
) -> ThetaEstimate:
    """Attach a feasible central-limit interval to a qv2 or one_step estimate."""
    if not (0.0 < level < 1.0):
        raise DomainError("confidence level must lie in (0, 1)")
    if not est.converged:
        raise DomainError("cannot build an interval for a non-converged estimate")
    if est.method not in ("qv2", "one_step"):
        raise DomainError(
            f"no limit-variance theory wired up for method {est.method!r}"
        )
    v_rate, v_eff = plugin_limit_variances(est.value, vol, grid)
    v_hat = v_rate if est.method == "qv2" else v_eff
    plugin_variance = grid.delta * v_hat
    half = norm_ppf(0.5 * (1.0 + level)) * math.sqrt(plugin_variance)
    return replace(
        est,
        plugin_variance=plugin_variance,
        ci=(est.value - half, est.value + half, level),
    )
