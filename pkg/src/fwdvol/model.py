"""Closed-form quantities of the two-factor forward model.

The model drives d log-price series by a shared pair of Brownian factors,
the first damped by exp(-theta * (T_j - t)) in time to maturity.  This
module collects everything about it that is deterministic: the ratio maps
whose inversion identifies theta, the per-increment Gaussian covariance, the
asymptotic variances of the rate estimators, and the total Fisher
information.  All functions are pure and safe to call concurrently.

Conventions: times and maturities in years, theta in 1/years, variances of
log-price increments carry 1/years per unit of squared volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InversionRangeError, NumericalError
from .grids import MIN_MATURITY_GAP, MaturityGrid

# Bisection controls for the ratio-map inversions: start bracket in 1/years,
# geometric expansion limits, and the absolute tolerance on map values.
BRACKET_LO = 1e-6
BRACKET_HI = 1e3
BRACKET_LO_MIN = 1e-12
BRACKET_HI_MAX = 1e9
PSI_TOL = 1e-12


# ---------------------------------------------------------------------------
# Volatility curve pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolCurves:
    """Pair of squared-volatility curves t -> sigma_t^2 and t -> sigma_bar_t^2.

    Both are callables accepting scalars or numpy arrays of times (years) and
    returning values in 1/years.  ``bounds`` optionally records an ellipticity
    box (c_lo, c_hi) on the volatilities themselves, i.e. squared values are
    expected in [c_lo**2, c_hi**2].
    """

    sigma_sq: Callable[[np.ndarray], np.ndarray]
    sigma_bar_sq: Callable[[np.ndarray], np.ndarray]
    bounds: Optional[tuple[float, float]] = None

    @classmethod
    def constant(cls, sigma: float, sigma_bar: float) -> "VolCurves":
        s2, sb2 = float(sigma) ** 2, float(sigma_bar) ** 2
        return cls(
            sigma_sq=lambda t: np.full_like(np.asarray(t, dtype=float), s2),
            sigma_bar_sq=lambda t: np.full_like(np.asarray(t, dtype=float), sb2),
        )

    @classmethod
    def from_arrays(cls, times, sigma_sq, sigma_bar_sq) -> "VolCurves":
        """Curves interpolated linearly between grid values, clamped at the ends."""
        t = np.asarray(times, dtype=float)
        s2 = np.asarray(sigma_sq, dtype=float)
        sb2 = np.asarray(sigma_bar_sq, dtype=float)
        if t.ndim != 1 or t.shape != s2.shape or t.shape != sb2.shape:
            raise DomainError("times and curve values must be 1-d arrays of equal length")
        return cls(
            sigma_sq=lambda x: np.interp(np.asarray(x, dtype=float), t, s2),
            sigma_bar_sq=lambda x: np.interp(np.asarray(x, dtype=float), t, sb2),
        )

    def sample(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(times, dtype=float)
        s2 = np.asarray(self.sigma_sq(t), dtype=float)
        sb2 = np.asarray(self.sigma_bar_sq(t), dtype=float)
        if s2.shape != t.shape or sb2.shape != t.shape:
            raise DomainError("curve callables must preserve the input shape")
        return s2, sb2

    def require_positive(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s2, sb2 = self.sample(times)
        if np.any(s2 <= 0.0) or np.any(sb2 <= 0.0):
            raise DomainError("volatility curves must be strictly positive on the interval")
        return s2, sb2


@dataclass(frozen=True)
class IncrementCovariance:
    """Covariance of one increment pair (dX^1, dX^2), scaled in years."""

    var1: float
    var2: float
    cov: float

    def __post_init__(self):
        if not (self.var1 > 0.0 and self.var2 > 0.0):
            raise DomainError("increment variances must be positive")
        if self.cov * self.cov > self.var1 * self.var2:
            raise DomainError("increment covariance matrix must be positive semi-definite")

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.var1, self.cov], [self.cov, self.var2]])


# ---------------------------------------------------------------------------
# Ratio maps and their inverses
# ---------------------------------------------------------------------------


def _check_pair(theta: float, T1: float, T2: float) -> None:
    if theta <= 0.0:
        raise DomainError("theta must be positive")
    if T1 <= 0.0 or T2 - T1 < MIN_MATURITY_GAP:
        raise DomainError("maturities must satisfy 0 < T1 < T2 (gap >= 1e-6 yr)")


def _check_triple(theta: float, T1: float, T2: float, T3: float) -> None:
    _check_pair(theta, T1, T2)
    if T3 - T2 < MIN_MATURITY_GAP:
        raise DomainError("maturities must satisfy T1 < T2 < T3 (gaps >= 1e-6 yr)")


def psi2(theta: float, T1: float, T2: float) -> float:
    """Two-maturity ratio map, strictly decreasing from 0 to -1 on (0, inf).

    Defined as (e^{-theta T2} - e^{-theta T1})^2 / (e^{-2 theta T2} - e^{-2 theta T1});
    the numerator and denominator share the factor e^{-2 theta T1}, which is
    divided out before evaluation so that large theta * T does not underflow.
    """
    _check_pair(theta, T1, T2)
    eps = math.exp(-theta * (T2 - T1))
    return -(1.0 - eps) / (1.0 + eps)


def psi3(theta: float, T1: float, T2: float, T3: float) -> float:
    """Three-maturity ratio map onto (0, ((T3 - T2) / (T2 - T1))^2).

    Equals ((e^{-theta T3} - e^{-theta T2}) / (e^{-theta T2} - e^{-theta T1}))^2,
    evaluated through expm1 of the maturity gaps for stability.
    """
    _check_triple(theta, T1, T2, T3)
    r = (
        math.exp(-theta * (T2 - T1))
        * math.expm1(-theta * (T3 - T2))
        / math.expm1(-theta * (T2 - T1))
    )
    return r * r


def psi3_upper_bound(T1: float, T2: float, T3: float) -> float:
    """Supremum ((T3 - T2) / (T2 - T1))^2 of the three-maturity map (theta -> 0)."""
    return ((T3 - T2) / (T2 - T1)) ** 2


def _invert_monotone(f: Callable[[float], float], y: float) -> float:
    """Invert a strictly decreasing map by bisection.

    The starting bracket [1e-6, 1e3] 1/yr is expanded geometrically until it
    straddles the root; bisection then runs until the map value is within
    1e-12 of the target and the bracket has collapsed below 1e-9 relative in
    the rate (flat map regions otherwise leave the rate underdetermined).
    """
    lo, hi = BRACKET_LO, BRACKET_HI
    flo, fhi = f(lo) - y, f(hi) - y
    while flo < 0.0 and lo > BRACKET_LO_MIN:  # root below lo (f decreasing)
        lo *= 0.1
        flo = f(lo) - y
    while fhi > 0.0 and hi < BRACKET_HI_MAX:
        hi *= 10.0
        fhi = f(hi) - y
    if flo < 0.0 or fhi > 0.0:
        raise NumericalError("failed to bracket the inverse map root")
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating-point resolution
            break
        fmid = f(mid) - y
        if abs(fmid) < PSI_TOL and hi - lo < 1e-9 * max(1.0, mid):
            return mid
        if fmid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_psi2(y: float, T1: float, T2: float) -> float:
    """Rate theta with psi2(theta, T1, T2) = y, for y strictly inside (-1, 0)."""
    if not (-1.0 < y < 0.0):
        raise InversionRangeError(f"ratio value {y} outside the open interval (-1, 0)")
    return _invert_monotone(lambda th: psi2(th, T1, T2), y)


def invert_psi3(y: float, T1: float, T2: float, T3: float) -> float:
    """Rate theta with psi3(theta, ...) = y, for y strictly inside the map range."""
    bound = psi3_upper_bound(T1, T2, T3)
    if not (0.0 < y < bound):
        raise InversionRangeError(
            f"ratio value {y} outside the open interval (0, {bound})"
        )
    return _invert_monotone(lambda th: psi3(th, T1, T2, T3), y)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _simpson(values: np.ndarray, x: np.ndarray) -> float:
    """Composite Simpson rule with positive weights.

    An odd final interval is closed with the trapezoid rule instead of the
    usual three-point correction, so that all quadrature weights stay
    nonnegative; downstream Cauchy-Schwarz orderings then hold exactly.
    """
    v = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    if v.shape != x.shape or v.ndim != 1 or v.size < 2:
        raise DomainError("quadrature needs matching 1-d arrays with >= 2 nodes")
    n = v.size - 1
    total = 0.0
    m = n if n % 2 == 0 else n - 1
    if m >= 2:
        h = x[1:m + 1] - x[:m]
        # classic Simpson on pairs of (possibly uneven) intervals
        h0, h1 = h[0:m:2], h[1:m:2]
        hp = h0 + h1
        w0 = hp * (2.0 - h1 / h0) / 6.0
        w1 = hp * hp * hp / (6.0 * h0 * h1)
        w2 = hp * (2.0 - h0 / h1) / 6.0
        total += float(np.sum(w0 * v[0:m:2] + w1 * v[1:m:2] + w2 * v[2:m + 1:2]))
    if m != n:
        total += 0.5 * (x[n] - x[n - 1]) * (v[n - 1] + v[n])
    return total


def _weighted_integrals(theta: float, vol: VolCurves, grid: MaturityGrid):
    """Sampled integrals over [0, T] used by the limit-variance formulas."""
    t = grid.times
    s2, sb2 = vol.require_positive(t)
    w = np.exp(2.0 * theta * t) * s2
    int_w = _simpson(w, t)
    int_w_sb = _simpson(w * sb2, t)
    int_w_over_sb = _simpson(w / sb2, t)
    return int_w, int_w_sb, int_w_over_sb


def _variance_prefactor(theta: float, T1: float, T2: float) -> float:
    e2, e1 = math.exp(theta * T2), math.exp(theta * T1)
    return ((e2 - e1) / (T2 - T1)) ** 2


# ---------------------------------------------------------------------------
# Per-increment covariance and limit variances
# ---------------------------------------------------------------------------


def increment_covariance(
    theta: float,
    vol: VolCurves,
    t0: float,
    t1: float,
    T1: float,
    T2: float,
    subintervals: int = 64,
) -> IncrementCovariance:
    """Gaussian covariance of (dX^1, dX^2) over the window [t0, t1].

    var_j = int e^{-2 theta (T_j - t)} sigma_t^2 dt + int sigma_bar_t^2 dt and
    cov = int e^{-theta (T1 + T2 - 2t)} sigma_t^2 dt + int sigma_bar_t^2 dt,
    computed by composite Simpson on at least 64 subintervals.
    """
    _check_pair(theta, T1, T2)
    if not (t0 < t1 <= T1 + 1e-12):
        raise DomainError("window must satisfy t0 < t1 <= T1")
    m = max(64, int(subintervals))
    if m % 2:
        m += 1
    t = np.linspace(t0, t1, m + 1)
    s2, sb2 = vol.sample(t)
    # zero curves are a legitimate degeneracy here; only negative values are nonsense
    if np.any(s2 < 0.0) or np.any(sb2 < 0.0):
        raise DomainError("squared volatility curves must be nonnegative on the window")
    int_sb = _simpson(sb2, t)
    a1 = _simpson(np.exp(-2.0 * theta * (T1 - t)) * s2, t)
    a2 = _simpson(np.exp(-2.0 * theta * (T2 - t)) * s2, t)
    a12 = _simpson(np.exp(-theta * (T1 + T2 - 2.0 * t)) * s2, t)
    return IncrementCovariance(var1=a1 + int_sb, var2=a2 + int_sb, cov=a12 + int_sb)


def v_theta(theta: float, vol: VolCurves, grid: MaturityGrid) -> float:
    """Conditional limit variance of the two-maturity ratio estimator.

    ((e^{theta T2} - e^{theta T1}) / (T2 - T1))^2
    * int e^{2 theta t} sigma^2 sigma_bar^2 dt / (int e^{2 theta t} sigma^2 dt)^2.
    """
    T1, T2 = grid.maturities[0], grid.maturities[1]
    _check_pair(theta, T1, T2)
    int_w, int_w_sb, _ = _weighted_integrals(theta, vol, grid)
    return _variance_prefactor(theta, T1, T2) * int_w_sb / int_w**2


def v_opt(theta: float, vol: VolCurves, grid: MaturityGrid) -> float:
    """Best attainable limit variance for two maturities (semiparametric bound).

    ((e^{theta T2} - e^{theta T1}) / (T2 - T1))^2 / int e^{2 theta t} sigma^2 / sigma_bar^2 dt.
    """
    T1, T2 = grid.maturities[0], grid.maturities[1]
    _check_pair(theta, T1, T2)
    _, _, int_w_over_sb = _weighted_integrals(theta, vol, grid)
    return _variance_prefactor(theta, T1, T2) / int_w_over_sb


def fisher_info_total(theta: float, vol: VolCurves, grid: MaturityGrid) -> float:
    """Total information of the efficient score; the exact reciprocal of v_opt."""
    return 1.0 / v_opt(theta, vol, grid)
