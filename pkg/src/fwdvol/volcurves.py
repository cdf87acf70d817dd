"""Kernel reconstruction of the two squared-volatility trajectories.

For a two-row panel, windowed sums of squared increments estimate the spot
quadratic-variation density of each series; inverting the 2x2 exponential
mixing matrix at each grid time separates the short-factor curve sigma_t^2
from the common curve sigma_bar_t^2.  The kernel is the causal indicator
1_{(0,1]}, so the estimate at time t uses only increments strictly before t,
and estimates are produced on observation times in [bandwidth, T] only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, IllConditionedError
from .simulate import PricePanel

# Default threshold (1/yr) under which a preliminary rate estimate is floored
# before inverting the mixing matrix; keeps the system well posed.
DEFAULT_FLOOR_THETA = 3.65e-2

_TIME_TOL = 1e-12


@dataclass(frozen=True)
class VolCurveEstimate:
    """Pointwise curve estimates on observation times within [bandwidth, T].

    ``sigma_sq`` / ``sigma_bar_sq`` are the reported values (the latter
    clamped into ``clamp_box`` when one was supplied); the raw inversion
    outputs are kept alongside for diagnostics.
    """

    times: np.ndarray
    sigma_sq: np.ndarray
    sigma_bar_sq: np.ndarray
    sigma_sq_raw: np.ndarray
    sigma_bar_sq_raw: np.ndarray
    bandwidth: float
    floor_theta: float
    clamp_box: Optional[tuple[float, float]] = None

    def __post_init__(self):
        for name in ("times", "sigma_sq", "sigma_bar_sq", "sigma_sq_raw", "sigma_bar_sq_raw"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (
            self.times.shape == self.sigma_sq.shape == self.sigma_bar_sq.shape
            == self.sigma_sq_raw.shape == self.sigma_bar_sq_raw.shape
        ):
            raise DomainError("curve arrays must share one shape")

    def sigma_bar_sq_at(self, t: np.ndarray) -> np.ndarray:
        """Reported sigma_bar^2 at times that must lie on the estimate grid."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.times, t - _TIME_TOL, side="left")
        if np.any(idx >= self.times.size) or np.any(
            np.abs(self.times[np.minimum(idx, self.times.size - 1)] - t) > 1e-9
        ):
            raise DomainError("requested time off the curve-estimate grid")
        return self.sigma_bar_sq[idx]


def _window_bounds(t_inc: np.ndarray, t_eval: np.ndarray, bandwidth: float):
    """Index ranges [lo, hi) of increments with t - h <= (i-1)*delta < t."""
    lo = np.searchsorted(t_inc, t_eval - bandwidth - _TIME_TOL, side="left")
    hi = np.searchsorted(t_inc, t_eval - _TIME_TOL, side="left")
    return lo, hi


def estimate_vol_curves(
    panel: PricePanel,
    theta_hat: float,
    bandwidth: float,
    floor_theta: float = DEFAULT_FLOOR_THETA,
    clamp_box: Optional[tuple[float, float]] = None,
    rows: Sequence[int] = (0, 1),
) -> VolCurveEstimate:
    """Separate the squared-volatility curves from a two-row panel.

    At each observation time t >= bandwidth, squared increments with
    t - h <= (i-1)*delta < t are summed and scaled by 1/h, then the 2x2
    system in (e^{-2 theta (T1-t)}, e^{-2 theta (T2-t)}) is inverted with the
    rate floored at ``floor_theta``.  When ``clamp_box`` = (lo, hi) is given,
    the common curve is clamped into it; the short-factor curve never is.
    """
    if len(rows) != 2:
        raise DomainError("curve separation is defined for exactly two rows")
    if floor_theta <= 0.0:
        raise DomainError("floor_theta must be positive")
    grid = panel.grid
    delta = grid.delta
    if bandwidth < delta - _TIME_TOL:
        raise DomainError("bandwidth must be at least one observation step")
    if clamp_box is not None and not clamp_box[0] < clamp_box[1]:
        raise DomainError("clamp box must be an increasing pair")

    T1, T2 = (grid.maturities[r] for r in rows)
    dx = panel.increments[list(rows)]
    sq1, sq2 = dx[0] ** 2, dx[1] ** 2
    n = grid.n_obs
    t_inc = delta * np.arange(n)  # (i-1)*delta for i = 1..n
    t_all = delta * np.arange(1, n + 1)
    t_eval = t_all[t_all >= bandwidth - _TIME_TOL]
    if t_eval.size == 0:
        raise DomainError("bandwidth leaves no valid estimation times in [h, T]")

    lo, hi = _window_bounds(t_inc, t_eval, bandwidth)
    cs1 = np.concatenate(([0.0], np.cumsum(sq1)))
    cs2 = np.concatenate(([0.0], np.cumsum(sq2)))
    c1 = (cs1[hi] - cs1[lo]) / bandwidth
    c2 = (cs2[hi] - cs2[lo]) / bandwidth

    theta_use = max(theta_hat, floor_theta)
    e1 = np.exp(-2.0 * theta_use * (T1 - t_eval))
    e2 = np.exp(-2.0 * theta_use * (T2 - t_eval))
    den = e1 - e2
    if np.any(np.abs(den) < 1e-14):
        raise IllConditionedError(
            "exponential damping factors coincide; curve separation is singular"
        )
    sigma_sq_raw = (c1 - c2) / den
    sigma_bar_sq_raw = (-e2 * c1 + e1 * c2) / den

    sigma_bar_sq = (
        np.clip(sigma_bar_sq_raw, clamp_box[0], clamp_box[1])
        if clamp_box is not None
        else sigma_bar_sq_raw.copy()
    )
    return VolCurveEstimate(
        times=t_eval,
        sigma_sq=sigma_sq_raw.copy(),
        sigma_bar_sq=sigma_bar_sq,
        sigma_sq_raw=sigma_sq_raw,
        sigma_bar_sq_raw=sigma_bar_sq_raw,
        bandwidth=float(bandwidth),
        floor_theta=float(floor_theta),
        clamp_box=clamp_box,
    )


def cv_bandwidth(
    panel: PricePanel,
    theta_hat: float,
    candidate_bandwidths: Sequence[float],
    rows: Sequence[int] = (0, 1),
) -> float:
    """Pick a bandwidth by one-sided prediction of squared increments.

    For each candidate h, every squared increment (d_i X^j)^2 with enough
    history is predicted by delta times the causal kernel estimate of its
    spot quadratic-variation density at (i-1)*delta; the candidate with the
    smallest summed squared prediction error wins, ties going to the larger
    bandwidth.  Because the kernel is causal, the window at (i-1)*delta never
    contains increment i, so the criterion is leave-one-out by construction.
    The comparison runs on the index set valid under the largest candidate so
    every h is scored on the same targets.  (With the indicator kernel the
    criterion is invariant to ``theta_hat``: the mixing-matrix round trip
    reproduces the per-contract densities identically.)
    """
    cands = sorted(float(h) for h in candidate_bandwidths)
    if not cands:
        raise DomainError("need at least one candidate bandwidth")
    delta = panel.grid.delta
    for h in cands:
        if h < 2.0 * delta - _TIME_TOL:
            raise DomainError("candidate bandwidths must be at least 2 * delta")
    if len(cands) == 1:
        return cands[0]
    crits = _cv_criteria(panel, cands, rows)
    best_h, best_crit = cands[-1], np.inf
    for h, crit in zip(cands, crits):
        if crit <= best_crit:  # <= prefers the larger h on ties
            best_h, best_crit = h, crit
    return best_h


def _cv_criteria(panel: PricePanel, cands: Sequence[float], rows=(0, 1)) -> np.ndarray:
    """Prediction criterion per candidate, on the index set of the largest one."""
    dx = panel.increments[list(rows)]
    grid = panel.grid
    delta = grid.delta
    t_inc = delta * np.arange(grid.n_obs)
    targets = np.nonzero(t_inc >= max(cands) - _TIME_TOL)[0]  # 0-based increments
    if targets.size == 0:
        raise DomainError("largest candidate bandwidth leaves no target increments")
    css = [np.concatenate(([0.0], np.cumsum(row**2))) for row in dx]
    crits = np.empty(len(cands))
    for c, h in enumerate(cands):
        lo, hi = _window_bounds(t_inc, t_inc[targets], h)
        crit = 0.0
        for row, cs in zip(dx, css):
            pred = delta * (cs[hi] - cs[lo]) / h
            crit += float(np.sum((row[targets] ** 2 - pred) ** 2))
        crits[c] = crit
    return crits


def curves_to_csv(est: VolCurveEstimate, path) -> None:
    """Dump curves as ``t_years,sigma_sq_raw,sigma_sq,sigma_bar_sq_raw,sigma_bar_sq``."""
    lines = ["t_years,sigma_sq_raw,sigma_sq,sigma_bar_sq_raw,sigma_bar_sq"]
    for k in range(est.times.size):
        row = (est.times[k], est.sigma_sq_raw[k], est.sigma_sq[k],
               est.sigma_bar_sq_raw[k], est.sigma_bar_sq[k])
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
