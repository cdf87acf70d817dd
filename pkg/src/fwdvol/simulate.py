"""Panel simulation for the two-factor forward model.

Paths follow Euler-Maruyama on a fine grid of ``substeps`` sub-intervals per
observation step.  The two Brownian motions are drawn once per fine step and
shared across all maturities, which enforces the common-factor structure
exactly.  Randomness comes from one counter-based Philox stream per
replication seed: under a log-uniform initial law the stream first yields the
d initial uniforms, then the (n * substeps, 2) standard normal factor
increments.  Panels are therefore bit-reproducible for a given
(spec, grid, seed, substeps) on a given build, whether simulated one at a
time or in a vectorized batch.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError
from .grids import MaturityGrid
from .model import VolCurves

DEFAULT_SUBSTEPS = 10


# ---------------------------------------------------------------------------
# Model specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroDrift:
    pass


@dataclass(frozen=True)
class MeanRevertDrift:
    """Drift speed * (level - X_t^j), applied per maturity."""

    speed: float
    level: float


@dataclass(frozen=True)
class CurveDrift:
    """Deterministic drift rate b(t), common to all maturities."""

    rate: Callable[[np.ndarray], np.ndarray]


DriftSpec = Union[ZeroDrift, MeanRevertDrift, CurveDrift]


@dataclass(frozen=True)
class ConstantVol:
    sigma: float
    sigma_bar: float

    def __post_init__(self):
        if self.sigma < 0.0 or self.sigma_bar < 0.0:
            raise DomainError("constant volatilities must be nonnegative")


@dataclass(frozen=True)
class DeterministicVol:
    curves: VolCurves


@dataclass(frozen=True)
class CirLikeVol:
    """sigma_t = scale_short * S_t, sigma_bar_t = scale_long * S_t with
    S_t = sqrt(mean of the d current log-prices), recomputed each fine step."""

    scale_short: float = 0.37
    scale_long: float = 0.15

    def __post_init__(self):
        if self.scale_short <= 0.0 or self.scale_long <= 0.0:
            raise DomainError("CIR-like scales must be positive")


VolSpec = Union[ConstantVol, DeterministicVol, CirLikeVol]


@dataclass(frozen=True)
class FixedInit:
    values: tuple[float, ...]


@dataclass(frozen=True)
class LogUniformInit:
    """Initial log-price drawn as log(U) with U uniform on [lo, hi], iid per maturity."""

    lo: float = 20.0
    hi: float = 40.0

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi):
            raise DomainError("log-uniform law requires 0 < lo < hi")


InitSpec = Union[FixedInit, LogUniformInit]


@dataclass(frozen=True)
class ModelSpec:
    theta: float
    drift: DriftSpec = field(default_factory=ZeroDrift)
    vol: VolSpec = field(default_factory=lambda: ConstantVol(0.37, 0.15))
    init: InitSpec = field(default_factory=lambda: FixedInit((math.log(30.0),)))

    def __post_init__(self):
        if self.theta <= 0.0:
            raise DomainError("theta must be positive")

    def digest(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PricePanel:
    """Observed log-price matrix: one row per maturity, one column per date."""

    grid: MaturityGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.d, self.grid.n_obs + 1):
            raise DomainError(
                f"panel shape {v.shape} does not match grid "
                f"({self.grid.d} x {self.grid.n_obs + 1})"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("panel values must all be finite")

    @property
    def increments(self) -> np.ndarray:
        """Per-date log-price moves, shape (d, n_obs)."""
        return np.diff(self.values, axis=1)


# ---------------------------------------------------------------------------
# Simulation engine
# ---------------------------------------------------------------------------


def _initial_values(spec: ModelSpec, d: int, rngs) -> np.ndarray:
    if isinstance(spec.init, FixedInit):
        vals = np.asarray(spec.init.values, dtype=float)
        if vals.size == 1:
            vals = np.repeat(vals, d)
        if vals.size != d:
            raise DomainError(f"fixed init needs 1 or {d} values")
        return np.tile(vals, (len(rngs), 1))
    out = np.empty((len(rngs), d))
    for r, rng in enumerate(rngs):
        out[r] = np.log(rng.uniform(spec.init.lo, spec.init.hi, size=d))
    return out


def simulate_batch(
    spec: ModelSpec,
    grid: MaturityGrid,
    seeds: Sequence[int],
    substeps: int = DEFAULT_SUBSTEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate one panel per seed; returns (values (R, d, n+1), truncated (R,)).

    ``truncated`` flags replications where the CIR-like square root had to be
    clamped at zero (full truncation) at least once.
    """
    if substeps < 1:
        raise DomainError("substeps must be >= 1")
    R, d, n = len(seeds), grid.d, grid.n_obs
    n_fine = n * substeps
    dt = grid.delta / substeps
    sqdt = math.sqrt(dt)
    mats = np.asarray(grid.maturities)

    rngs = [np.random.Generator(np.random.Philox(key=int(s))) for s in seeds]
    x = _initial_values(spec, d, rngs)  # (R, d)
    z = np.empty((R, n_fine, 2))
    for r, rng in enumerate(rngs):
        z[r] = rng.standard_normal((n_fine, 2))

    t_left = dt * np.arange(n_fine)
    damp = np.exp(-spec.theta * (mats[None, :] - t_left[:, None]))  # (n_fine, d)

    det_s = det_sb = None
    if isinstance(spec.vol, DeterministicVol):
        s2, sb2 = spec.vol.curves.sample(t_left)
        if np.any(s2 < 0.0) or np.any(sb2 < 0.0):
            raise DomainError("deterministic squared volatilities must be nonnegative")
        det_s, det_sb = np.sqrt(s2), np.sqrt(sb2)

    drift_rate = None
    if isinstance(spec.drift, CurveDrift):
        drift_rate = np.asarray(spec.drift.rate(t_left), dtype=float)

    out = np.empty((R, d, n + 1))
    out[:, :, 0] = x
    truncated = np.zeros(R, dtype=bool)

    for k in range(n_fine):
        if isinstance(spec.vol, ConstantVol):
            sig = spec.vol.sigma
            sigbar = spec.vol.sigma_bar
        elif isinstance(spec.vol, DeterministicVol):
            sig, sigbar = det_s[k], det_sb[k]
        else:  # CIR-like coupling through the average log-price
            mean_x = x.mean(axis=1)
            neg = mean_x < 0.0
            if np.any(neg):
                truncated |= neg
                mean_x = np.maximum(mean_x, 0.0)
            common = np.sqrt(mean_x)[:, None]
            sig = spec.vol.scale_short * common
            sigbar = spec.vol.scale_long * common

        if isinstance(spec.drift, ZeroDrift):
            b = 0.0
        elif isinstance(spec.drift, MeanRevertDrift):
            b = spec.drift.speed * (spec.drift.level - x)
        else:
            b = drift_rate[k]

        x = x + b * dt + sig * damp[k] * (sqdt * z[:, k, 0:1]) + sigbar * (sqdt * z[:, k, 1:2])
        if (k + 1) % substeps == 0:
            out[:, :, (k + 1) // substeps] = x

    return out, truncated


def simulate_panel(
    spec: ModelSpec,
    grid: MaturityGrid,
    seed: int,
    substeps: int = DEFAULT_SUBSTEPS,
) -> PricePanel:
    """Simulate a single panel, reproducible from (spec, grid, seed, substeps)."""
    values, truncated = simulate_batch(spec, grid, [seed], substeps)
    meta = {
        "seed": int(seed),
        "substeps": int(substeps),
        "spec_digest": spec.digest(),
        "cir_truncated": bool(truncated[0]),
    }
    return PricePanel(grid=grid, values=values[0], meta=meta)


# ---------------------------------------------------------------------------
# Study configurations
# ---------------------------------------------------------------------------

_BENCHMARK_CONFIGS = {
    "d2": (100, 150, (150, 181)),
    "d3": (80, 120, (120, 150, 181)),
    "d4": (60, 90, (90, 120, 151, 181)),
    "d5": (40, 59, (59, 90, 120, 151, 181)),
    "d6": (20, 31, (31, 59, 90, 120, 151, 181)),
}

BENCHMARK_DRIFT_SPEED = 0.365
BENCHMARK_DRIFT_LEVEL = math.log(30.0)


def benchmark_config(config_id: str, theta: float = 1.4) -> tuple[ModelSpec, MaturityGrid]:
    """Reference simulation setup for a given maturity count.

    Maturity dates are in days (converted at 365 d/yr): d2 observes n=100
    dates with T = T1 = 150 d, T2 = 181 d, down to d6 with n=20 and six
    maturities.  The model couples a mean-reverting drift toward log(30) at
    speed 0.365/yr with CIR-like volatilities 0.37 / 0.15 times the square
    root of the average log-price, starting from log-uniform prices in
    [20, 40].
    """
    if config_id not in _BENCHMARK_CONFIGS:
        raise DomainError(
            f"unknown config id {config_id!r}; expected one of {sorted(_BENCHMARK_CONFIGS)}"
        )
    n_obs, horizon_days, maturities_days = _BENCHMARK_CONFIGS[config_id]
    grid = MaturityGrid.from_days(maturities_days, horizon_days, n_obs)
    spec = ModelSpec(
        theta=theta,
        drift=MeanRevertDrift(BENCHMARK_DRIFT_SPEED, BENCHMARK_DRIFT_LEVEL),
        vol=CirLikeVol(),
        init=LogUniformInit(20.0, 40.0),
    )
    return spec, grid


def panel_to_csv(panel: PricePanel, path) -> None:
    """Dump a panel as ``date_index,t_years,X1,...,Xd`` rows.

    Maturities and metadata ride along as leading ``#`` comment lines so the
    file round-trips without sidecar information.
    """
    d = panel.grid.d
    header = "date_index,t_years," + ",".join(f"X{j + 1}" for j in range(d))
    mats = ",".join(repr(float(m)) for m in panel.grid.maturities)
    lines = [
        f"# maturities_years={mats}",
        f"# horizon_years={float(panel.grid.horizon)!r}",
        f"# n_obs={panel.grid.n_obs}",
    ]
    for key in ("seed", "spec_digest", "substeps"):
        if key in panel.meta:
            lines.append(f"# {key}={panel.meta[key]}")
    lines.append(header)
    times = panel.grid.times
    for i in range(panel.grid.n_obs + 1):
        row = ",".join(repr(float(v)) for v in panel.values[:, i])
        lines.append(f"{i},{float(times[i])!r},{row}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def panel_from_csv(path, maturities_years: Optional[Sequence[float]] = None,
                   horizon_years: Optional[float] = None) -> PricePanel:
    """Read a panel written by :func:`panel_to_csv` (or matching its schema).

    Maturities / horizon are taken from ``#`` comment lines when present and
    may be overridden by the keyword arguments.
    """
    from .errors import DataFormatError

    meta: dict = {}
    rows = []
    header_cols = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, val = body.split("=", 1)
                    meta[key.strip()] = val.strip()
                continue
            if header_cols is None:
                header_cols = line.split(",")
                if header_cols[:2] != ["date_index", "t_years"]:
                    raise DataFormatError(
                        f"{path}:{lineno}: expected header date_index,t_years,X1,..."
                    )
                continue
            parts = line.split(",")
            if len(parts) != len(header_cols):
                raise DataFormatError(f"{path}:{lineno}: wrong column count")
            try:
                rows.append([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if header_cols is None or not rows:
        raise DataFormatError(f"{path}: no data rows")
    data = np.asarray(rows)
    values = data[:, 1:].T
    if maturities_years is None:
        if "maturities_years" not in meta:
            raise DataFormatError(
                f"{path}: maturities not in file; pass maturities_years explicitly"
            )
        maturities_years = [float(x) for x in meta["maturities_years"].split(",")]
    if horizon_years is None:
        horizon_years = float(meta.get("horizon_years", data[-1, 0]))
    grid = MaturityGrid(
        maturities=tuple(maturities_years),
        horizon=horizon_years,
        n_obs=values.shape[1] - 1,
    )
    return PricePanel(grid=grid, values=values, meta={"source": str(path), **meta})
