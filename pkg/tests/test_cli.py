"""Command-line pipelines: round trips, exit codes, output schemas."""

from datetime import date

import pytest

import fwdvol as fv
from fwdvol.cli import main

from test_dataio import synthetic_quotes, write_quotes


def run(args):
    return main(args)


def test_simulate_then_estimate_qv2(tmp_path, capsys):
    panel_path = tmp_path / "panel.csv"
    assert run(["simulate", "--config-id", "d2", "--theta", "10", "--vol", "constant",
                "--drift", "zero", "--seed", "3", "--out", str(panel_path)]) == 0
    assert run(["estimate", "--panel", str(panel_path), "--method", "qv2"]) == 0
    out = capsys.readouterr().out
    assert "status: converged" in out
    theta = float(out.split("theta: ")[1].split(" ")[0])
    assert abs(theta - 10.0) < 3.0  # end-to-end smoke against the simulated truth


def test_estimate_one_step_ci_no_wider_than_qv2(tmp_path, capsys):
    panel_path = tmp_path / "panel.csv"
    run(["simulate", "--config-id", "d2", "--theta", "10", "--vol", "constant",
         "--drift", "zero", "--seed", "5", "--out", str(panel_path)])

    def ci_width(method):
        assert run(["estimate", "--panel", str(panel_path), "--method", method,
                    "--bandwidth", "14", "--clamp", "0.01,0.05"]) == 0
        out = capsys.readouterr().out
        lo, hi = out.split("ci95%: [")[1].split("]")[0].split(", ")
        return float(hi) - float(lo)

    assert ci_width("one-step") <= ci_width("qv2") * 1.001


def test_estimate_writes_curves(tmp_path):
    panel_path = tmp_path / "panel.csv"
    curves_path = tmp_path / "curves.csv"
    run(["simulate", "--config-id", "d2", "--theta", "10", "--seed", "1",
         "--out", str(panel_path)])
    assert run(["estimate", "--panel", str(panel_path), "--method", "qv2",
                "--curves-out", str(curves_path)]) == 0
    header = curves_path.read_text().split("\n")[0]
    assert header == "t_years,sigma_sq_raw,sigma_sq,sigma_bar_sq_raw,sigma_bar_sq"


def test_mc_subcommand_reference_mean(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "config_id = d2\ntheta = 1.4\nreplications = 300\nseed0 = 0\n"
        "estimators = qv2\n"
    )
    out_dir = tmp_path / "out"
    assert run(["mc", "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
    lines = (out_dir / "estimators.csv").read_text().strip().split("\n")
    assert lines[0] == "estimator,converged,total,mean,q025,q975"
    _, conv, total, mean, *_ = lines[1].split(",")
    assert int(conv) == int(total) == 300
    assert abs(float(mean) - 1.4216) < 0.05  # desk-scale tolerance


def test_realdata_pipeline_and_determinism(tmp_path, capsys):
    quotes = synthetic_quotes(date(2016, 1, 1), date(2017, 12, 31),
                              date(2016, 6, 1), date(2017, 12, 1))
    qpath = tmp_path / "quotes.csv"
    write_quotes(qpath, [
        (q.quote_date.isoformat(), q.delivery_start.isoformat(), f"{q.price + 0.01 * (i % 7):.4f}")
        for i, q in enumerate(quotes)
    ])
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert run(["realdata", "--quotes", str(qpath), "--d", "2",
                "--methods", "qv2", "--out", str(out1)]) == 0
    assert run(["realdata", "--quotes", str(qpath), "--d", "2",
                "--methods", "qv2", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().strip().split("\n")
    assert lines[0] == "window_start,method,value,status,ci_lo,ci_hi"
    assert len(lines) > 1
    stdout = capsys.readouterr().out
    assert "windows:" in stdout
    assert "qv2: converged" in stdout


def test_realdata_aggregate_on_converged_window(tmp_path, capsys):
    """Quotes generated by the model itself: the window converges and the
    aggregate converged/total, mean, sd line appears."""
    import math
    from test_dataio import working_days

    dates = list(working_days(date(2018, 1, 1), date(2018, 5, 31)))
    t0 = dates[0]
    deliveries = (date(2018, 6, 1), date(2018, 7, 1))
    grid = fv.MaturityGrid(
        maturities=tuple((d - t0).days / 365.0 for d in deliveries),
        horizon=(dates[-1] - t0).days / 365.0,
        n_obs=len(dates) - 1,
    )
    spec = fv.ModelSpec(theta=10.0, drift=fv.ZeroDrift(), vol=fv.ConstantVol(0.37, 0.15),
                        init=fv.FixedInit((math.log(30.0),)))
    panel = fv.simulate_panel(spec, grid, seed=1)
    rows = []
    for j, delivery in enumerate(deliveries):
        for i, t in enumerate(dates):
            rows.append((t.isoformat(), delivery.isoformat(),
                         f"{math.exp(panel.values[j, i]):.8f}"))
    qpath = tmp_path / "quotes.csv"
    write_quotes(qpath, rows)
    out = tmp_path / "res.csv"
    assert run(["realdata", "--quotes", str(qpath), "--d", "2",
                "--methods", "qv2", "--level", "0.9", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 2
    window_start, method, value, status, ci_lo, ci_hi = lines[1].split(",")
    assert status == "converged"
    assert abs(float(value) - 10.0) < 4.0
    assert float(ci_lo) < float(value) < float(ci_hi)
    stdout = capsys.readouterr().out
    assert "qv2: converged 1/1" in stdout and "mean" in stdout and "sd" in stdout


def test_exit_code_data_error(tmp_path):
    assert run(["estimate", "--panel", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,panel\n")
    assert run(["estimate", "--panel", str(bad)]) == 2


def test_exit_code_usage():
    with pytest.raises(SystemExit) as exc:
        main(["estimate"])  # --panel is required
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_exit_code_numerical_failure(tmp_path):
    panel = tmp_path / "flat.csv"
    lines = ["# maturities_years=0.41,0.49", "date_index,t_years,X1,X2"]
    lines += [f"{i},{i * 0.004},3.4,3.4" for i in range(11)]
    panel.write_text("\n".join(lines) + "\n")
    assert run(["estimate", "--panel", str(panel), "--method", "qv2"]) == 3
