"""Closed-form layer: ratio maps, inversions, covariances, limit variances."""

import math

import numpy as np
import pytest

import fwdvol as fv
from fwdvol.errors import DomainError, InversionRangeError
from fwdvol.model import _simpson

T1 = 150.0 / 365.0
T2 = 181.0 / 365.0
T3 = None  # placeholder; triples below use explicit values

# 50-digit evaluations of the literal exponential-ratio formulas (mpmath),
# frozen here so the stable implementations are checked against an
# independent arbitrary-precision oracle.
PSI2_ORACLE_1P4 = -0.05938210832742337751166
PSI3_ORACLE_10 = 0.2015170429092864065617


# ---------------------------------------------------------------------------
# psi2 / psi3
# ---------------------------------------------------------------------------


def test_psi2_limit_at_zero():
    assert abs(fv.psi2(1e-8, T1, T2)) < 1e-6


def test_psi2_limit_at_infinity():
    assert abs(fv.psi2(1e3, 0.41, 0.50) - (-1.0)) < 1e-6


def test_psi2_against_high_precision_oracle():
    assert fv.psi2(1.4, T1, T2) == pytest.approx(PSI2_ORACLE_1P4, rel=1e-13)


def test_psi2_domain_errors():
    with pytest.raises(DomainError):
        fv.psi2(1.4, 0.5, 0.41)
    with pytest.raises(DomainError):
        fv.psi2(0.0, T1, T2)
    with pytest.raises(DomainError):
        fv.psi2(1.4, 0.5, 0.5 + 1e-9)  # near-equal maturities rejected


def test_psi3_limit_at_zero():
    t1, t2, t3 = 120 / 365, 150 / 365, 181 / 365
    bound = fv.psi3_upper_bound(t1, t2, t3)
    assert fv.psi3(1e-8, t1, t2, t3) == pytest.approx(bound, rel=1e-6)


def test_psi3_limit_at_infinity():
    assert fv.psi3(1e3, 120 / 365, 150 / 365, 181 / 365) < 1e-12


def test_psi3_against_high_precision_oracle():
    got = fv.psi3(10.0, 120 / 365, 150 / 365, 181 / 365)
    assert got == pytest.approx(PSI3_ORACLE_10, rel=1e-13)


def test_psi3_unordered_maturities_error():
    with pytest.raises(DomainError):
        fv.psi3(1.0, 120 / 365, 181 / 365, 150 / 365)


def test_psi_monotone_and_in_range_on_random_inputs():
    rng = np.random.Generator(np.random.Philox(key=101))
    for _ in range(1000):
        t1 = rng.uniform(0.05, 1.0)
        gap1 = rng.uniform(5e-3, 0.3)
        gap2 = rng.uniform(5e-3, 0.3)
        # keep theta * gap below ~25 so the map values stay representable
        # strictly inside (-1, 0) in float64
        th_lo = 10.0 ** rng.uniform(-2, 1.5)
        th_hi = th_lo * rng.uniform(1.1, 2.5)
        p_lo = fv.psi2(th_lo, t1, t1 + gap1)
        p_hi = fv.psi2(th_hi, t1, t1 + gap1)
        assert -1.0 < p_hi < p_lo < 0.0  # strictly decreasing, range (-1, 0)
        q_lo = fv.psi3(th_lo, t1, t1 + gap1, t1 + gap1 + gap2)
        q_hi = fv.psi3(th_hi, t1, t1 + gap1, t1 + gap1 + gap2)
        bound = fv.psi3_upper_bound(t1, t1 + gap1, t1 + gap1 + gap2)
        assert 0.0 < q_hi < q_lo < bound


# ---------------------------------------------------------------------------
# Inversions
# ---------------------------------------------------------------------------


def _bisect_oracle(f, y, lo, hi, iters=200):
    """Plain fixed-iteration bisection on a decreasing map; test-local oracle."""
    flo, fhi = f(lo) - y, f(hi) - y
    assert flo > 0.0 > fhi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) - y > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_invert_psi2_round_trips():
    assert fv.invert_psi2(fv.psi2(1.4, T1, T2), T1, T2) == pytest.approx(1.4, abs=1e-8)
    assert fv.invert_psi2(fv.psi2(40.0, T1, T2), T1, T2) == pytest.approx(40.0, abs=1e-6)


def test_invert_psi2_against_independent_bisection():
    got = fv.invert_psi2(-0.5, 0.41, 0.50)
    want = _bisect_oracle(lambda th: fv.psi2(th, 0.41, 0.50), -0.5, 1e-6, 1e3)
    assert got == pytest.approx(want, abs=1e-9)


def test_invert_psi2_out_of_range():
    for y in (-1.0, 0.0, 0.2, -1.5):
        with pytest.raises(InversionRangeError):
            fv.invert_psi2(y, T1, T2)


def test_invert_psi3_round_trip_and_boundary():
    t = (120 / 365, 150 / 365, 181 / 365)
    assert fv.invert_psi3(fv.psi3(10.0, *t), *t) == pytest.approx(10.0, abs=1e-8)
    bound = fv.psi3_upper_bound(*t)
    for y in (0.0, bound, bound * 1.01, -0.1):
        with pytest.raises(InversionRangeError):
            fv.invert_psi3(y, *t)


def test_invert_psi3_against_independent_bisection():
    t = (120 / 365, 150 / 365, 181 / 365)
    y = 0.5 * fv.psi3_upper_bound(*t)
    want = _bisect_oracle(lambda th: fv.psi3(th, *t), y, 1e-6, 1e3)
    assert fv.invert_psi3(y, *t) == pytest.approx(want, abs=1e-9)


def test_round_trip_tolerance_across_theta_range():
    for theta in np.logspace(-3, 2, 40):
        got = fv.invert_psi2(fv.psi2(theta, T1, T2), T1, T2)
        assert abs(got - theta) < 1e-8 * max(1.0, theta)
        got3 = fv.invert_psi3(fv.psi3(theta, T1, T2, 220 / 365), T1, T2, 220 / 365)
        assert abs(got3 - theta) < 1e-8 * max(1.0, theta)


# ---------------------------------------------------------------------------
# Increment covariance
# ---------------------------------------------------------------------------

DELTA = (150 / 365) / 100


def test_increment_covariance_single_factor_degeneracy():
    vol = fv.VolCurves(
        sigma_sq=lambda t: np.zeros_like(np.asarray(t, float)),
        sigma_bar_sq=lambda t: np.full_like(np.asarray(t, float), 0.15**2),
    )
    cov = fv.increment_covariance(1.4, vol, 0.0, DELTA, T1, T2)
    want = 0.15**2 * DELTA
    assert cov.var1 == pytest.approx(want, rel=1e-12)
    assert cov.var2 == pytest.approx(want, rel=1e-12)
    assert cov.cov == pytest.approx(want, rel=1e-12)


def test_increment_covariance_matches_antiderivative():
    theta, s, sb = 1.4, 0.37, 0.15
    vol = fv.VolCurves.constant(s, sb)
    t0, t1 = 0.1, 0.1 + DELTA
    cov = fv.increment_covariance(theta, vol, t0, t1, T1, T2)

    def damp_integral(Tj):
        return s**2 * (math.exp(-2 * theta * (Tj - t1)) - math.exp(-2 * theta * (Tj - t0))) / (2 * theta)

    b = sb**2 * (t1 - t0)
    assert cov.var1 == pytest.approx(damp_integral(T1) + b, rel=1e-10)
    assert cov.var2 == pytest.approx(damp_integral(T2) + b, rel=1e-10)
    cross = s**2 * (
        math.exp(-theta * (T1 + T2 - 2 * t1)) - math.exp(-theta * (T1 + T2 - 2 * t0))
    ) / (2 * theta)
    assert cov.cov == pytest.approx(cross + b, rel=1e-10)


def test_increment_covariance_against_midpoint_rectangle_oracle():
    theta, s, sb = 10.0, 0.37, 0.15
    vol = fv.VolCurves.constant(s, sb)
    t0, t1 = 0.0, 1.5 / 365
    cov = fv.increment_covariance(theta, vol, t0, t1, T1, T2)
    u = t0 + (np.arange(1_000_000) + 0.5) * (t1 - t0) / 1_000_000
    w = (t1 - t0) / 1_000_000
    var1 = float(np.sum(np.exp(-2 * theta * (T1 - u)) * s**2) * w) + sb**2 * (t1 - t0)
    assert cov.var1 == pytest.approx(var1, rel=1e-10)


def test_increment_covariance_rejects_negative_curves_and_bad_window():
    bad = fv.VolCurves(
        sigma_sq=lambda t: -np.ones_like(np.asarray(t, float)),
        sigma_bar_sq=lambda t: np.ones_like(np.asarray(t, float)),
    )
    with pytest.raises(DomainError):
        fv.increment_covariance(1.4, bad, 0.0, DELTA, T1, T2)
    with pytest.raises(DomainError):
        fv.increment_covariance(1.4, fv.VolCurves.constant(0.3, 0.1), 0.2, 0.1, T1, T2)


def test_increment_covariance_cholesky_on_random_curves():
    rng = np.random.Generator(np.random.Philox(key=55))
    for _ in range(50):
        s = rng.uniform(0.05, 1.0)
        sb = rng.uniform(0.05, 1.0)
        th = 10.0 ** rng.uniform(-1, 1.5)
        cov = fv.increment_covariance(th, fv.VolCurves.constant(s, sb), 0.0, DELTA, T1, T2)
        np.linalg.cholesky(cov.as_matrix())  # raises if not PD


# ---------------------------------------------------------------------------
# Limit variances and information
# ---------------------------------------------------------------------------


def test_v_theta_constant_closed_form(d2_grid, const_curves):
    theta, s, sb = 1.4, 0.37, 0.15
    T = d2_grid.horizon
    int_w = (math.exp(2 * theta * T) - 1.0) / (2 * theta)
    pref = ((math.exp(theta * T2) - math.exp(theta * T1)) / (T2 - T1)) ** 2
    want = pref * (sb**2 / s**2) / int_w
    assert fv.v_theta(theta, const_curves, d2_grid) == pytest.approx(want, rel=1e-8)


def test_v_theta_homogeneous_in_sigma_bar_sq(d2_grid):
    lam = 3.7
    base = fv.VolCurves.constant(0.37, 0.15)
    scaled = fv.VolCurves(
        sigma_sq=base.sigma_sq,
        sigma_bar_sq=lambda t: lam * base.sigma_bar_sq(t),
    )
    assert fv.v_theta(1.4, scaled, d2_grid) == pytest.approx(
        lam * fv.v_theta(1.4, base, d2_grid), rel=1e-12
    )


def test_v_theta_against_quadrature_oracle(d2_grid):
    theta, s, sb = 1.4, 0.37, 0.15
    T = d2_grid.horizon
    u = (np.arange(2_000_000) + 0.5) * T / 2_000_000
    w = T / 2_000_000
    int_w = float(np.sum(np.exp(2 * theta * u)) * w) * s**2
    int_wsb = int_w * sb**2
    pref = ((math.exp(theta * T2) - math.exp(theta * T1)) / (T2 - T1)) ** 2
    want = pref * int_wsb / int_w**2
    got = fv.v_theta(theta, fv.VolCurves.constant(s, sb), d2_grid)
    assert got == pytest.approx(want, rel=1e-8)


def test_v_opt_equals_v_theta_for_constant_common_vol(d2_grid, const_curves):
    vt = fv.v_theta(1.4, const_curves, d2_grid)
    vo = fv.v_opt(1.4, const_curves, d2_grid)
    assert vo == pytest.approx(vt, rel=1e-10)


def test_v_opt_strictly_below_v_theta_for_varying_common_vol(d2_grid):
    T = d2_grid.horizon
    curves = fv.VolCurves(
        sigma_sq=lambda t: np.full_like(np.asarray(t, float), 0.37**2),
        sigma_bar_sq=lambda t: 0.0225 * (1.0 + np.asarray(t, float) / T),
    )
    assert fv.v_opt(1.4, curves, d2_grid) < fv.v_theta(1.4, curves, d2_grid)


def test_v_opt_homogeneity_in_sigma_sq(d2_grid):
    lam = 2.3
    base = fv.VolCurves.constant(0.37, 0.15)
    scaled = fv.VolCurves(
        sigma_sq=lambda t: lam * base.sigma_sq(t),
        sigma_bar_sq=base.sigma_bar_sq,
    )
    assert fv.v_opt(1.4, scaled, d2_grid) == pytest.approx(
        fv.v_opt(1.4, base, d2_grid) / lam, rel=1e-12
    )


def test_fisher_info_reciprocal_identity(d2_grid):
    rng = np.random.Generator(np.random.Philox(key=7))
    for _ in range(20):
        th = 10.0 ** rng.uniform(-1, 1.5)
        s = rng.uniform(0.1, 0.8)
        sb = rng.uniform(0.05, 0.5)
        curves = fv.VolCurves.constant(s, sb)
        fi = fv.fisher_info_total(th, curves, d2_grid)
        assert fi * fv.v_opt(th, curves, d2_grid) == pytest.approx(1.0, rel=1e-12)


def test_fisher_info_monotonicity(d2_grid):
    base = fv.fisher_info_total(1.4, fv.VolCurves.constant(0.37, 0.15), d2_grid)
    more_signal = fv.fisher_info_total(1.4, fv.VolCurves.constant(0.5, 0.15), d2_grid)
    more_noise = fv.fisher_info_total(1.4, fv.VolCurves.constant(0.37, 0.25), d2_grid)
    assert more_signal > base
    assert more_noise < base


def test_cauchy_schwarz_ordering_on_random_curve_pairs(d2_grid):
    rng = np.random.Generator(np.random.Philox(key=99))
    t_nodes = np.linspace(0.0, d2_grid.horizon, 12)
    for _ in range(1000):
        th = 10.0 ** rng.uniform(-1, 1.3)
        s2 = rng.uniform(0.01, 1.0, size=t_nodes.size)
        sb2 = rng.uniform(0.01, 1.0, size=t_nodes.size)
        curves = fv.VolCurves.from_arrays(t_nodes, s2, sb2)
        assert fv.v_opt(th, curves, d2_grid) <= fv.v_theta(th, curves, d2_grid)


def test_simpson_exact_on_cubics():
    x = np.linspace(0.0, 2.0, 65)
    vals = 3.0 * x**3 - x + 2.0
    assert _simpson(vals, x) == pytest.approx(3.0 / 4.0 * 16 - 2.0 + 4.0, rel=1e-13)


def test_grid_validation():
    with pytest.raises(DomainError):
        fv.MaturityGrid(maturities=(0.5,), horizon=0.4, n_obs=10)
    with pytest.raises(DomainError):
        fv.MaturityGrid(maturities=(0.5, 0.4), horizon=0.4, n_obs=10)
    with pytest.raises(DomainError):
        fv.MaturityGrid(maturities=(0.4, 0.5), horizon=0.45, n_obs=10)
    with pytest.raises(DomainError):
        fv.MaturityGrid(maturities=(0.4, 0.5), horizon=0.4, n_obs=1)
    g = fv.MaturityGrid.from_days((150, 181), 150, 100)
    assert g.delta * g.n_obs == pytest.approx(g.horizon, abs=1e-15)
    assert g.times.shape == (101,)
