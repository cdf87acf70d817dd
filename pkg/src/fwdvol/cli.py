"""Command-line front end: simulate, estimate, mc, realdata.

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .errors import DataFormatError, DataValidationError, FwdVolError
from .dataio import build_windows, load_quotes
from .grids import DAYS_PER_YEAR
from .mc import curve_bands_to_csv, parse_config_file, run_experiment, summary_to_csv
from .onestep import DEFAULT_CLAMP_BOX, confidence_interval, one_step
from .qv import theta_hat_2, theta_hat_3, theta_hat_d
from .simulate import (
    ConstantVol,
    ModelSpec,
    ZeroDrift,
    panel_from_csv,
    panel_to_csv,
    benchmark_config,
    simulate_panel,
)
from .volcurves import DEFAULT_FLOOR_THETA, curves_to_csv, cv_bandwidth, estimate_vol_curves

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="fwdvol", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a price panel to CSV")
    sim.add_argument("--config-id", default="d2", help="d2..d6 reference setup")
    sim.add_argument("--theta", type=float, default=1.4)
    sim.add_argument("--vol", choices=["cir", "constant"], default="cir")
    sim.add_argument("--sigma", type=float, default=0.37)
    sim.add_argument("--sigma-bar", type=float, default=0.15)
    sim.add_argument("--drift", choices=["benchmark", "zero"], default="benchmark")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--substeps", type=int, default=10)
    sim.add_argument("--out", required=True)

    est = sub.add_parser("estimate", help="estimate the rate from a panel CSV")
    est.add_argument("--panel", required=True)
    est.add_argument("--maturities-days", help="comma list, if absent from the file")
    est.add_argument("--horizon-days", type=float)
    est.add_argument(
        "--method", choices=["qv2", "qv3", "qvd", "one-step"], default="qv2"
    )
    est.add_argument("--rows", help="comma list of row indices (default leading rows)")
    est.add_argument("--bandwidth", default="14", help="days, or 'cv'")
    est.add_argument("--floor-theta", type=float, default=DEFAULT_FLOOR_THETA)
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument(
        "--clamp", default="default",
        help="'lo,hi' box for the common curve, 'none', or 'default'",
    )
    est.add_argument("--curves-out", help="write estimated volatility curves here")

    mc = sub.add_parser("mc", help="run a replication experiment from a config file")
    mc.add_argument("--config", required=True)
    mc.add_argument("--out-dir", required=True)

    real = sub.add_parser("realdata", help="windowed estimation from a quote CSV")
    real.add_argument("--quotes", required=True)
    real.add_argument("--d", type=int, default=2, help="contracts per window")
    real.add_argument("--min-dates", type=int, default=15)
    real.add_argument("--methods", default="qv2", help="comma list of methods")
    real.add_argument("--bandwidth", default="14", help="days, or 'cv'")
    real.add_argument("--floor-theta", type=float, default=DEFAULT_FLOOR_THETA)
    real.add_argument("--level", type=float, default=0.95)
    real.add_argument("--clamp", default="default")
    real.add_argument("--out", required=True)
    return p


def _parse_clamp(text):
    if text == "none":
        return None
    if text == "default":
        return DEFAULT_CLAMP_BOX
    lo, hi = (float(s) for s in text.split(","))
    return (lo, hi)


def _pick_bandwidth(panel, prelim_value, bandwidth_arg, rows):
    if bandwidth_arg == "cv":
        candidates = [d / DAYS_PER_YEAR for d in (7.0, 14.0, 21.0, 28.0, 35.0)]
        candidates = [h for h in candidates if h >= 2.0 * panel.grid.delta]
        if not candidates:
            candidates = [2.0 * panel.grid.delta]
        return cv_bandwidth(panel, prelim_value, candidates, rows=rows)
    return float(bandwidth_arg) / DAYS_PER_YEAR


def _estimate_panel(panel, method, rows, bandwidth_arg, floor_theta, level, clamp):
    """Run one method on one panel; returns (estimate, curves or None)."""
    if method == "qv3":
        return theta_hat_3(panel, rows or (0, 1, 2)), None
    if method == "qvd":
        return theta_hat_d(panel, rows), None
    pair = tuple(rows or (0, 1))[:2]
    prelim = theta_hat_2(panel, pair)
    if not prelim.converged:
        return prelim, None
    h = _pick_bandwidth(panel, prelim.value, bandwidth_arg, pair)
    curves = estimate_vol_curves(
        panel, prelim.value, h, floor_theta=floor_theta, clamp_box=clamp, rows=pair
    )
    est = prelim
    if method == "one-step":
        est = one_step(panel, prelim, curves, clamp_box=clamp, rows=pair)
    if est.converged:
        est = confidence_interval(est, curves, panel.grid, level)
    return est, curves


def _cmd_simulate(args) -> int:
    spec, grid = benchmark_config(args.config_id, args.theta)
    if args.vol == "constant":
        spec = ModelSpec(
            theta=spec.theta,
            drift=spec.drift,
            vol=ConstantVol(args.sigma, args.sigma_bar),
            init=spec.init,
        )
    if args.drift == "zero":
        spec = ModelSpec(theta=spec.theta, drift=ZeroDrift(), vol=spec.vol, init=spec.init)
    panel = simulate_panel(spec, grid, args.seed, args.substeps)
    panel_to_csv(panel, args.out)
    print(f"wrote {grid.d} x {grid.n_obs + 1} panel to {args.out}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    mats = None
    if args.maturities_days:
        mats = [float(s) / DAYS_PER_YEAR for s in args.maturities_days.split(",")]
    horizon = args.horizon_days / DAYS_PER_YEAR if args.horizon_days else None
    panel = panel_from_csv(args.panel, maturities_years=mats, horizon_years=horizon)
    rows = tuple(int(s) for s in args.rows.split(",")) if args.rows else None
    est, curves = _estimate_panel(
        panel, args.method, rows, args.bandwidth, args.floor_theta,
        args.level, _parse_clamp(args.clamp),
    )
    print(f"method: {est.method}")
    print(f"status: {est.status.value}")
    if est.converged:
        print(f"theta: {est.value:.6g} /yr")
        if est.ci is not None:
            lo, hi, level = est.ci
            print(f"ci{level:.0%}: [{lo:.6g}, {hi:.6g}]")
    if curves is not None and args.curves_out:
        curves_to_csv(curves, args.curves_out)
        print(f"curves written to {args.curves_out}")
    return EXIT_OK


def _cmd_mc(args) -> int:
    cfg = parse_config_file(args.config)
    summary = run_experiment(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    table = os.path.join(args.out_dir, "estimators.csv")
    summary_to_csv(summary, table)
    print(f"wrote {table}")
    for name, s in summary.estimators.items():
        print(
            f"{name}: converged {s.converged}/{s.total}, mean {s.mean:.6g}, "
            f"q95 [{s.q025:.6g}, {s.q975:.6g}]"
        )
    if summary.curves is not None:
        p1 = os.path.join(args.out_dir, "sigma_sq_bands.csv")
        p2 = os.path.join(args.out_dir, "sigma_bar_sq_bands.csv")
        curve_bands_to_csv(summary.curves, p1, p2)
        print(f"wrote {p1} and {p2}")
    return EXIT_OK


def _cmd_realdata(args) -> int:
    quotes = load_quotes(args.quotes)
    report: dict = {}
    windows = build_windows(quotes, args.d, args.min_dates, report=report)
    methods = [m.strip() for m in args.methods.split(",")]
    clamp = _parse_clamp(args.clamp)
    lines = ["window_start,method,value,status,ci_lo,ci_hi"]
    collected: dict[str, list[float]] = {m: [] for m in methods}
    totals: dict[str, int] = {m: 0 for m in methods}
    for window in windows:
        panel = window.log_panel
        for method in methods:
            totals[method] += 1
            try:
                est, _ = _estimate_panel(
                    panel, method, None, args.bandwidth, args.floor_theta,
                    args.level, clamp,
                )
            except FwdVolError as exc:
                lines.append(f"{window.start.isoformat()},{method},,failed: {exc},,")
                continue
            if est.converged:
                collected[method].append(est.value)
                lo, hi = (est.ci[0], est.ci[1]) if est.ci else ("", "")
                lines.append(
                    f"{window.start.isoformat()},{method},{est.value!r},converged,{lo!r},{hi!r}"
                )
            else:
                lines.append(f"{window.start.isoformat()},{method},,out_of_range,,")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"windows: {len(windows)} (skipped {report.get('skipped', 0)} short blocks)")
    for method in methods:
        vals = np.asarray(collected[method])
        if vals.size:
            sd = vals.std(ddof=1) if vals.size > 1 else math.nan
            print(
                f"{method}: converged {vals.size}/{totals[method]}, "
                f"mean {vals.mean():.6g}, sd {sd:.6g}"
            )
        else:
            print(f"{method}: converged 0/{totals[method]}")
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "estimate": _cmd_estimate,
        "mc": _cmd_mc,
        "realdata": _cmd_realdata,
    }
    try:
        return handlers[args.command](args)
    except (DataFormatError, DataValidationError, FileNotFoundError) as exc:
        print(f"fwdvol: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FwdVolError as exc:
        print(f"fwdvol: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
