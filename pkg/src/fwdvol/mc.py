"""Replication studies: estimator tables, rate diagnostics, averaging checks.

Each experiment simulates ``replications`` panels (replication r uses seed
``seed0 + r``), runs the requested estimators on every panel, and aggregates
converged values into means and empirical 2.5% / 97.5% quantiles.  Volatility
curves, when collected, are averaged pointwise with symmetric tail trimming;
their quantile bands are never trimmed.  Summaries are deterministic
functions of the configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataFormatError, DomainError, FwdVolError
from .grids import DAYS_PER_YEAR, MaturityGrid
from .model import VolCurves
from .qv import ThetaEstimate, theta_hat_2, theta_hat_3, theta_hat_d
from .onestep import one_step
from .simulate import (
    CirLikeVol,
    ConstantVol,
    DeterministicVol,
    MeanRevertDrift,
    ModelSpec,
    PricePanel,
    ZeroDrift,
    benchmark_config,
    simulate_batch,
)
from .volcurves import DEFAULT_FLOOR_THETA, cv_bandwidth, estimate_vol_curves

KNOWN_ESTIMATORS = ("qv2", "qv3", "qvd", "one_step")

DEFAULT_CV_CANDIDATES_DAYS = (7.0, 14.0, 21.0, 28.0, 35.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One replication study; see the module docstring for semantics."""

    config_id: str
    theta_true: float
    replications: int
    seed0: int = 0
    vol_mode: str = "cir_like"  # cir_like | constant | custom
    estimators: tuple[str, ...] = ("qv2",)
    bandwidth_mode: str = "fixed"  # fixed | cv
    bandwidth_days: float = 14.0
    cv_candidates_days: tuple[float, ...] = DEFAULT_CV_CANDIDATES_DAYS
    trim: float = 0.001
    drift_mode: str = "benchmark"  # benchmark | zero
    sigma: float = 0.37
    sigma_bar: float = 0.15
    custom_curves: Optional[VolCurves] = None
    clamp_box: Optional[tuple[float, float]] = None
    substeps: int = 10
    floor_theta: float = DEFAULT_FLOOR_THETA
    collect_curves: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("need at least one replication")
        if not (0.0 <= self.trim <= 0.05):
            raise DomainError("trim fraction must lie in [0, 0.05]")
        for est in self.estimators:
            if est not in KNOWN_ESTIMATORS:
                raise DomainError(f"unknown estimator {est!r}")
        if self.vol_mode not in ("cir_like", "constant", "custom"):
            raise DomainError(f"unknown vol mode {self.vol_mode!r}")
        if self.vol_mode == "custom" and self.custom_curves is None:
            raise DomainError("custom vol mode needs custom_curves")
        if self.drift_mode not in ("benchmark", "zero"):
            raise DomainError(f"unknown drift mode {self.drift_mode!r}")
        if self.bandwidth_mode not in ("fixed", "cv"):
            raise DomainError(f"unknown bandwidth mode {self.bandwidth_mode!r}")

    @property
    def bandwidth_years(self) -> float:
        return self.bandwidth_days / DAYS_PER_YEAR

    def build(self) -> tuple[ModelSpec, MaturityGrid]:
        spec, grid = benchmark_config(self.config_id, self.theta_true)
        if self.vol_mode == "constant":
            spec = replace(spec, vol=ConstantVol(self.sigma, self.sigma_bar))
        elif self.vol_mode == "custom":
            spec = replace(spec, vol=DeterministicVol(self.custom_curves))
        if self.drift_mode == "zero":
            spec = replace(spec, drift=ZeroDrift())
        return spec, grid


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    converged: int
    total: int
    mean: float
    q025: float
    q975: float
    failures: int = 0
    values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def __post_init__(self):
        if self.converged > self.total:
            raise DomainError("converged count cannot exceed the total")


@dataclass(frozen=True)
class CurveBands:
    times: np.ndarray
    mean_sigma_sq: np.ndarray
    q025_sigma_sq: np.ndarray
    q975_sigma_sq: np.ndarray
    mean_sigma_bar_sq: np.ndarray
    q025_sigma_bar_sq: np.ndarray
    q975_sigma_bar_sq: np.ndarray
    n_used: int
    trim: float


@dataclass(frozen=True)
class McSummary:
    config: ExperimentConfig
    estimators: dict
    curves: Optional[CurveBands] = None


def _trimmed_mean_columns(data: np.ndarray, trim: float) -> np.ndarray:
    """Pointwise mean after dropping the trim fraction in each tail."""
    n = data.shape[0]
    k = int(math.floor(trim * n))
    if k == 0:
        return data.mean(axis=0)
    srt = np.sort(data, axis=0)
    return srt[k : n - k].mean(axis=0)


def _summarize(name: str, values: list, total: int, failures: int) -> EstimatorSummary:
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size:
        mean = float(arr.mean())
        q025, q975 = (float(q) for q in np.quantile(arr, [0.025, 0.975]))
    else:
        mean = q025 = q975 = math.nan
    return EstimatorSummary(
        estimator=name,
        converged=arr.size,
        total=total,
        mean=mean,
        q025=q025,
        q975=q975,
        failures=failures,
        values=arr,
    )


def run_experiment(cfg: ExperimentConfig) -> McSummary:
    """Simulate, estimate, and aggregate one experiment configuration."""
    spec, grid = cfg.build()
    seeds = [cfg.seed0 + r for r in range(cfg.replications)]
    panels, _ = simulate_batch(spec, grid, seeds, cfg.substeps)

    need_prelim = "one_step" in cfg.estimators or cfg.collect_curves
    results: dict[str, list] = {name: [] for name in cfg.estimators}
    failures = {name: 0 for name in cfg.estimators}
    curve_s2, curve_sb2, curve_times = [], [], None
    cv_years = tuple(d / DAYS_PER_YEAR for d in cfg.cv_candidates_days)

    for r in range(cfg.replications):
        panel = PricePanel(grid=grid, values=panels[r], meta={"seed": seeds[r]})
        prelim: Optional[ThetaEstimate] = None
        if "qv2" in cfg.estimators or need_prelim:
            try:
                prelim = theta_hat_2(panel)
            except FwdVolError:
                prelim = None
            if "qv2" in cfg.estimators:
                if prelim is None:
                    failures["qv2"] += 1
                    results["qv2"].append(None)
                else:
                    results["qv2"].append(prelim.value if prelim.converged else None)

        if "qv3" in cfg.estimators:
            _record(results, failures, "qv3", theta_hat_3, panel)
        if "qvd" in cfg.estimators:
            _record(results, failures, "qvd", theta_hat_d, panel)

        curve = None
        if need_prelim and prelim is not None and prelim.converged:
            try:
                if cfg.bandwidth_mode == "cv":
                    h = cv_bandwidth(panel, prelim.value, cv_years)
                else:
                    h = cfg.bandwidth_years
                curve = estimate_vol_curves(
                    panel, prelim.value, h, floor_theta=cfg.floor_theta
                )
            except FwdVolError:
                curve = None

        if "one_step" in cfg.estimators:
            if prelim is None or curve is None:
                if prelim is not None and not prelim.converged:
                    results["one_step"].append(None)  # pass-through out-of-range
                else:
                    failures["one_step"] += 1
                    results["one_step"].append(None)
            else:
                try:
                    est = one_step(panel, prelim, curve, clamp_box=cfg.clamp_box)
                    results["one_step"].append(est.value if est.converged else None)
                except FwdVolError:
                    failures["one_step"] += 1
                    results["one_step"].append(None)

        if cfg.collect_curves and curve is not None:
            curve_times = curve.times
            curve_s2.append(curve.sigma_sq_raw)
            curve_sb2.append(curve.sigma_bar_sq_raw)

    summaries = {
        name: _summarize(name, results[name], cfg.replications, failures[name])
        for name in cfg.estimators
    }

    bands = None
    if cfg.collect_curves and curve_s2:
        # under cv bandwidths the evaluation grids differ at the front; all
        # curves end at T, so align on the common suffix
        m = min(c.size for c in curve_s2)
        curve_times = curve_times[-m:]
        s2 = np.vstack([c[-m:] for c in curve_s2])
        sb2 = np.vstack([c[-m:] for c in curve_sb2])
        q = [0.025, 0.975]
        q_s2 = np.quantile(s2, q, axis=0)
        q_sb2 = np.quantile(sb2, q, axis=0)
        bands = CurveBands(
            times=curve_times,
            mean_sigma_sq=_trimmed_mean_columns(s2, cfg.trim),
            q025_sigma_sq=q_s2[0],
            q975_sigma_sq=q_s2[1],
            mean_sigma_bar_sq=_trimmed_mean_columns(sb2, cfg.trim),
            q025_sigma_bar_sq=q_sb2[0],
            q975_sigma_bar_sq=q_sb2[1],
            n_used=s2.shape[0],
            trim=cfg.trim,
        )
    return McSummary(config=cfg, estimators=summaries, curves=bands)


def _record(results, failures, name, fn, panel):
    try:
        est = fn(panel)
    except FwdVolError:
        failures[name] += 1
        results[name].append(None)
        return
    results[name].append(est.value if est.converged else None)


# ---------------------------------------------------------------------------
# Rate diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    n: int
    bias: float
    sd: float
    sd_sqrt_n: float
    median_abs_err_n: float


def rate_study(
    config_id: str,
    theta_true: float,
    n_values: Sequence[int],
    estimator: str,
    replications: int = 400,
    seed0: int = 0,
    vol_mode: str = "constant",
    drift_mode: str = "zero",
    substeps: int = 10,
) -> list[RateRow]:
    """Stabilization table across sample sizes for one estimator.

    Reports sd * sqrt(n) (flat for the sqrt(delta)-rate ratio estimator) and
    median |error| * n (non-increasing for the three-maturity estimator with
    zero drift) at each n.
    """
    if list(n_values) != sorted(n_values):
        raise DomainError("n_values must be increasing")
    rows = []
    for n in n_values:
        cfg = ExperimentConfig(
            config_id=config_id,
            theta_true=theta_true,
            replications=replications,
            seed0=seed0,
            vol_mode=vol_mode,
            drift_mode=drift_mode,
            estimators=(estimator,),
            substeps=substeps,
        )
        spec, grid = cfg.build()
        grid = MaturityGrid(grid.maturities, grid.horizon, int(n))
        seeds = [seed0 + r for r in range(replications)]
        panels, _ = simulate_batch(spec, grid, seeds, substeps)
        fn = {"qv2": theta_hat_2, "qv3": theta_hat_3, "qvd": theta_hat_d}[estimator]
        vals = []
        for r in range(replications):
            panel = PricePanel(grid=grid, values=panels[r])
            try:
                est = fn(panel)
            except FwdVolError:
                continue
            if est.converged:
                vals.append(est.value)
        arr = np.asarray(vals)
        err = arr - theta_true
        rows.append(
            RateRow(
                n=int(n),
                bias=float(err.mean()),
                sd=float(arr.std(ddof=1)),
                sd_sqrt_n=float(arr.std(ddof=1) * math.sqrt(n)),
                median_abs_err_n=float(np.median(np.abs(err)) * n),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Block-average convergence diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    """Errors of delta^{-1} sum (block integral of Y)^2 against int Y^2 dt."""

    errors: dict


def lemma_checks(seed: int, n_values: Sequence[int]) -> LemmaReport:
    """Numerical check that block-averaged squares recover the time integral.

    Three paths on [0, 1]: a constant (exact at every n), a smooth sine path
    (error shrinks roughly like n^{-2}), and a Brownian path at the smoothness
    boundary (reported, no convergence asserted).
    """
    n_values = [int(n) for n in n_values]
    fine_mult = 64
    n_fine = max(n_values) * fine_mult
    t_fine = np.linspace(0.0, 1.0, n_fine + 1)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    dw = rng.standard_normal(n_fine) * math.sqrt(1.0 / n_fine)
    w = np.concatenate(([0.0], np.cumsum(dw)))

    paths = {
        "constant": np.full_like(t_fine, 0.7),
        "sine": 1.0 + 0.5 * np.sin(2.0 * math.pi * t_fine),
        "brownian": w,
    }
    errors: dict[str, list[tuple[int, float]]] = {}
    for name, y in paths.items():
        # cumulative trapezoid of y on the fine grid
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t_fine))))
        integral_sq = float(np.sum(0.5 * (y[1:] ** 2 + y[:-1] ** 2) * np.diff(t_fine)))
        rows = []
        for n in n_values:
            step = n_fine // n
            if step * n != n_fine:
                raise DomainError("n_values must divide the fine grid")
            block = cum[::step]
            block_int = np.diff(block)
            stat = float(n * np.sum(block_int**2))  # delta^{-1} = n on [0, 1]
            rows.append((n, abs(stat - integral_sq)))
        errors[name] = rows
    return LemmaReport(errors=errors)


# ---------------------------------------------------------------------------
# Machine-readable outputs
# ---------------------------------------------------------------------------


def summary_to_csv(summary: McSummary, path) -> None:
    """Write ``estimator,converged,total,mean,q025,q975`` rows."""
    lines = ["estimator,converged,total,mean,q025,q975"]
    for name, s in summary.estimators.items():
        lines.append(
            f"{name},{s.converged},{s.total},"
            f"{float(s.mean)!r},{float(s.q025)!r},{float(s.q975)!r}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def curve_bands_to_csv(bands: CurveBands, path_sigma_sq, path_sigma_bar_sq) -> None:
    """Write per-curve plot data as ``t,mean,q025,q975`` rows."""
    for path, mean, lo, hi in (
        (path_sigma_sq, bands.mean_sigma_sq, bands.q025_sigma_sq, bands.q975_sigma_sq),
        (path_sigma_bar_sq, bands.mean_sigma_bar_sq, bands.q025_sigma_bar_sq, bands.q975_sigma_bar_sq),
    ):
        lines = ["t,mean,q025,q975"]
        for k in range(bands.times.size):
            lines.append(
                f"{float(bands.times[k])!r},{float(mean[k])!r},"
                f"{float(lo[k])!r},{float(hi[k])!r}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


_CONFIG_KEYS = {
    "config_id": str,
    "theta": float,
    "replications": int,
    "seed0": int,
    "vol_mode": str,
    "estimators": str,
    "bandwidth": str,
    "cv_candidates": str,
    "trim": float,
    "drift": str,
    "sigma": float,
    "sigma_bar": float,
    "clamp": str,
    "substeps": int,
    "floor_theta": float,
    "collect_curves": str,
}


def parse_config_file(path) -> ExperimentConfig:
    """Parse a key=value experiment file; see README for the key list."""
    raw: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}:{lineno}: expected key=value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise DataFormatError(f"{path}:{lineno}: unknown key {key!r}")
            raw[key] = val
    for required in ("config_id", "theta", "replications"):
        if required not in raw:
            raise DataFormatError(f"{path}: missing required key {required!r}")

    kwargs: dict = {
        "config_id": raw["config_id"],
        "theta_true": float(raw["theta"]),
        "replications": int(raw["replications"]),
    }
    if "seed0" in raw:
        kwargs["seed0"] = int(raw["seed0"])
    if "vol_mode" in raw:
        kwargs["vol_mode"] = raw["vol_mode"]
    if "estimators" in raw:
        kwargs["estimators"] = tuple(s.strip() for s in raw["estimators"].split(","))
    if "bandwidth" in raw:
        if raw["bandwidth"] == "cv":
            kwargs["bandwidth_mode"] = "cv"
        else:
            kwargs["bandwidth_mode"] = "fixed"
            kwargs["bandwidth_days"] = float(raw["bandwidth"])
    if "cv_candidates" in raw:
        kwargs["cv_candidates_days"] = tuple(
            float(s) for s in raw["cv_candidates"].split(",")
        )
    if "trim" in raw:
        kwargs["trim"] = float(raw["trim"])
    if "drift" in raw:
        kwargs["drift_mode"] = raw["drift"]
    if "sigma" in raw:
        kwargs["sigma"] = float(raw["sigma"])
    if "sigma_bar" in raw:
        kwargs["sigma_bar"] = float(raw["sigma_bar"])
    if "clamp" in raw and raw["clamp"] != "none":
        lo, hi = (float(s) for s in raw["clamp"].split(","))
        kwargs["clamp_box"] = (lo, hi)
    if "substeps" in raw:
        kwargs["substeps"] = int(raw["substeps"])
    if "floor_theta" in raw:
        kwargs["floor_theta"] = float(raw["floor_theta"])
    if "collect_curves" in raw:
        kwargs["collect_curves"] = raw["collect_curves"].lower() in ("1", "true", "yes")
    try:
        return ExperimentConfig(**kwargs)
    except DomainError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
