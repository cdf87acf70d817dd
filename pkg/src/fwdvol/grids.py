"""Observation grids: maturity dates and regular sampling times, all in years."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DAYS_PER_YEAR = 365.0

# Maturities closer than this (in years) make every two-maturity formula
# ill-conditioned, so they are rejected outright.
MIN_MATURITY_GAP = 1e-6


def years_from_days(days: float) -> float:
    return float(days) / DAYS_PER_YEAR


@dataclass(frozen=True)
class MaturityGrid:
    """Regular observation grid over [0, T] with d maturity dates.

    ``maturities`` are the delivery dates T_1 < ... < T_d (years), ``horizon``
    is the last observation time T <= T_1 and ``n_obs`` the number of
    increments, so prices are sampled at 0, delta, ..., n_obs * delta = T.
    """

    maturities: tuple[float, ...]
    horizon: float
    n_obs: int

    def __post_init__(self):
        mats = tuple(float(m) for m in self.maturities)
        object.__setattr__(self, "maturities", mats)
        if len(mats) < 2:
            raise DomainError("at least two maturities are required")
        gaps = np.diff(mats)
        if np.any(gaps < MIN_MATURITY_GAP):
            raise DomainError(
                f"maturities must be strictly increasing with gaps >= {MIN_MATURITY_GAP} yr"
            )
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if self.horizon > mats[0] + 1e-12:
            raise DomainError(
                f"horizon T={self.horizon} must not exceed first maturity T1={mats[0]}"
            )
        if self.n_obs < 2:
            raise DomainError("need at least n_obs >= 2 increments")

    @classmethod
    def from_days(
        cls, maturities_days, horizon_days: float, n_obs: int
    ) -> "MaturityGrid":
        """Build a grid from day counts, converted at 365 days per year."""
        return cls(
            maturities=tuple(years_from_days(m) for m in maturities_days),
            horizon=years_from_days(horizon_days),
            n_obs=int(n_obs),
        )

    @property
    def d(self) -> int:
        return len(self.maturities)

    @property
    def delta(self) -> float:
        """Sampling step delta = T / n_obs (years)."""
        return self.horizon / self.n_obs

    @property
    def times(self) -> np.ndarray:
        """Observation times 0, delta, ..., T as an (n_obs + 1,) array."""
        return np.linspace(0.0, self.horizon, self.n_obs + 1)
