"""Quadratic-variation ratio estimators of the time-to-maturity rate.

The two- and three-maturity estimators invert the closed-form ratio maps of
:mod:`fwdvol.model`; the d >= 4 variant fits all consecutive maturity triples
at once by least squares on log ratios.  Ratio statistics that fall outside
the open range of their map are reported with an ``OUT_OF_RANGE`` status
rather than a numeric placeholder, so that downstream averages only ever see
converged values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateStatisticError, DomainError, InversionRangeError
from .model import invert_psi2, invert_psi3, psi3, psi3_upper_bound
from .simulate import PricePanel

DENOM_GUARD = 1e-30

GOLDEN_BRACKET = (1e-6, 1e3)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class EstimateStatus(enum.Enum):
    CONVERGED = "converged"
    OUT_OF_RANGE = "out_of_range"


@dataclass(frozen=True)
class ThetaEstimate:
    """Point estimate of the rate with its convergence status.

    ``value`` is absent exactly when ``status`` is OUT_OF_RANGE.  A plug-in
    variance and confidence interval appear only once attached by
    :func:`fwdvol.onestep.confidence_interval`.
    """

    status: EstimateStatus
    method: str
    value: Optional[float] = None
    plugin_variance: Optional[float] = None
    ci: Optional[tuple[float, float, float]] = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.status is EstimateStatus.OUT_OF_RANGE) != (self.value is None):
            raise DomainError("value must be absent iff the estimate is out of range")
        if self.ci is not None and self.plugin_variance is None:
            raise DomainError("a confidence interval requires a plug-in variance")

    @property
    def converged(self) -> bool:
        return self.status is EstimateStatus.CONVERGED


def _row_increments(panel: PricePanel, rows: Sequence[int]) -> np.ndarray:
    d = panel.grid.d
    for r in rows:
        if not (0 <= r < d):
            raise DomainError(f"row index {r} outside panel with {d} rows")
    return panel.increments[list(rows)]


def ratio_stat_2(panel: PricePanel, j1: int = 0, j2: int = 1) -> float:
    """Ratio sum (dX2 - dX1)^2 / sum ((dX2)^2 - (dX1)^2) over all increments."""
    dx1, dx2 = _row_increments(panel, (j1, j2))
    num = float(np.sum((dx2 - dx1) ** 2))
    den = float(np.sum(dx2**2 - dx1**2))
    if abs(den) < DENOM_GUARD:
        raise DegenerateStatisticError(
            "degenerate ratio statistic: increment sums cancel (identical rows?)"
        )
    return num / den


def ratio_stat_3(panel: PricePanel, rows: Sequence[int] = (0, 1, 2)) -> float:
    """Ratio sum (dX3 - dX2)^2 / sum (dX2 - dX1)^2 over all increments."""
    dx1, dx2, dx3 = _row_increments(panel, rows)
    num = float(np.sum((dx3 - dx2) ** 2))
    den = float(np.sum((dx2 - dx1) ** 2))
    if abs(den) < DENOM_GUARD:
        raise DegenerateStatisticError("degenerate ratio statistic: zero denominator")
    return num / den


def theta_hat_2(panel: PricePanel, rows: Sequence[int] = (0, 1)) -> ThetaEstimate:
    """Two-maturity rate estimate; OUT_OF_RANGE when the ratio leaves (-1, 0)."""
    stat = ratio_stat_2(panel, rows[0], rows[1])
    T1, T2 = (panel.grid.maturities[r] for r in rows)
    try:
        value = invert_psi2(stat, T1, T2)
    except InversionRangeError:
        return ThetaEstimate(status=EstimateStatus.OUT_OF_RANGE, method="qv2")
    return ThetaEstimate(status=EstimateStatus.CONVERGED, method="qv2", value=value)


def theta_hat_3(panel: PricePanel, rows: Sequence[int] = (0, 1, 2)) -> ThetaEstimate:
    """Three-maturity rate estimate from the consecutive-difference ratio."""
    stat = ratio_stat_3(panel, rows)
    T1, T2, T3 = (panel.grid.maturities[r] for r in rows)
    try:
        value = invert_psi3(stat, T1, T2, T3)
    except InversionRangeError:
        return ThetaEstimate(status=EstimateStatus.OUT_OF_RANGE, method="qv3")
    return ThetaEstimate(status=EstimateStatus.CONVERGED, method="qv3", value=value)


def _golden_section(objective, lo: float, hi: float, iters: int = 200) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(iters):
        if b - a < 1e-12 * max(1.0, b):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)


def theta_hat_d(panel: PricePanel, rows: Optional[Sequence[int]] = None) -> ThetaEstimate:
    """Rate estimate pooling all consecutive maturity triples (d >= 4 panels).

    Minimizes over theta the sum over triples (j, j+1, j+2) of
    (log Q_{j+1, j+2} - log Q_{j, j+1} - log psi3(theta))^2 where
    Q_{a, b} = sum_i (dX^b_i - dX^a_i)^2, by golden section on [1e-6, 1e3].
    The log-ratio objective is invariant to rescaling the whole panel and has
    the three-maturity estimator's inversion as its single-triple special case.
    """
    if rows is None:
        rows = range(panel.grid.d)
    rows = list(rows)
    if len(rows) < 3:
        raise DomainError("triple-pooled estimation needs at least three rows")
    dx = _row_increments(panel, rows)
    mats = [panel.grid.maturities[r] for r in rows]
    q = np.sum(np.diff(dx, axis=0) ** 2, axis=1)  # Q_{j, j+1}, length d-1
    if np.any(q < DENOM_GUARD):
        raise DegenerateStatisticError("degenerate quadratic sum between adjacent rows")
    log_ratios = np.diff(np.log(q))  # log Q_{j+1, j+2} - log Q_{j, j+1}
    triples = [(mats[j], mats[j + 1], mats[j + 2]) for j in range(len(mats) - 2)]

    def objective(theta: float) -> float:
        acc = 0.0
        for r, (t1, t2, t3) in zip(log_ratios, triples):
            acc += (r - math.log(psi3(theta, t1, t2, t3))) ** 2
        return acc

    value = _golden_section(objective, *GOLDEN_BRACKET)
    return ThetaEstimate(status=EstimateStatus.CONVERGED, method="qvd", value=value)


def estimate(panel: PricePanel, method: str, rows: Optional[Sequence[int]] = None) -> ThetaEstimate:
    """Dispatch by method name: qv2, qv3 or qvd."""
    if method == "qv2":
        return theta_hat_2(panel, rows or (0, 1))
    if method == "qv3":
        return theta_hat_3(panel, rows or (0, 1, 2))
    if method == "qvd":
        return theta_hat_d(panel, rows)
    raise DomainError(f"unknown estimation method {method!r}")


def with_flags(est: ThetaEstimate, *flags: str) -> ThetaEstimate:
    return replace(est, flags=est.flags + flags)
