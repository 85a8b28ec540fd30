"""Command-line interface: describe, fit, diagnose, simulate, roll, compare.

Exit codes: 0 success, 2 usage error, 3 input/parse error, 4 numerical error.
"""

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .baselines import rolling_correlation, rolling_covariance
from .config import ModelConfig, load_simulation
from .data import LONG_COLUMNS, ReturnPanel, describe, read_panel, write_long, write_panel
from .diagnostics import DEFAULT_LAGS, adequacy_report, bootstrap_critical_values
from .estimator import format_summary
from .exceptions import InputError, MvVolError, NumericError
from .meanmodel import fit_var
from .simulate import SimulationConfig, simulate

log = logging.getLogger("mvvol")

EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 2, 3, 4
COMPARE_COLUMNS = LONG_COLUMNS


def _out_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _pairs(assets):
    return [(i, j) for i in range(len(assets)) for j in range(i + 1, len(assets))]


def _pair_name(assets, i, j):
    return f"{assets[i]}~{assets[j]}"


def _write_wide(path, times, columns, values):
    write_panel(ReturnPanel(tuple(columns), np.asarray(times), np.asarray(values)), path)


def _table(rows, columns, fmt="{:>12.4f}"):
    """Aligned text table; the first entry of each row is its label."""
    head = "Asset".ljust(10) + "".join(f"{c:>12}" for c in columns)
    lines = [head]
    for r in rows:
        lines.append(str(r[0]).ljust(10) + "".join(fmt.format(v) for v in r[1:]))
    return "\n".join(lines)


# --------------------------------------------------------------------------


def cmd_describe(args):
    panel = read_panel(args.input, kind="prices" if args.prices else "returns")
    st = describe(panel)
    cols = ["Mean", "St.Error", "Skewness", "Ex.Kurt.", "Minimum", "Maximum",
            f"Q({st.lag})", "p-value"]
    rows = [[r["asset"], *(r[c] for c in st.columns)] for r in st.rows()]
    text = _table(rows, cols)
    print(text)
    if args.out:
        out = _out_dir(args.out)
        (out / "describe.txt").write_text(text + "\n", encoding="utf-8")
        with open(out / "describe.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["asset", *st.columns])
            for r in st.rows():
                w.writerow([r["asset"], *(repr(r[c]) for c in st.columns)])
        _write_json(out / "describe.json", st.rows())
    return 0


def cmd_fit(args):
    cfg = ModelConfig.load(args.config)
    panel = read_panel(args.input, kind="prices" if args.prices else "returns")
    est = cfg.estimator(panel.assets)
    x = panel.values
    times = panel.times
    if cfg.p > 0:
        var = fit_var(x, cfg.p)
        e = var.residuals
        times = times[cfg.p:]
        log.info("VAR(%d) pre-filter applied", cfg.p)
    else:
        e = x - x.mean(axis=0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est.fit(e)
    for w in caught:
        log.warning("%s", w.message)
    res = est.result_
    assets = list(panel.assets)
    summary = format_summary(res, assets)
    print(summary)
    out = _out_dir(args.out)
    (out / "params.txt").write_text(summary + "\n", encoding="utf-8")
    p = res.params
    _write_json(out / "fit.json", {
        "assets": assets,
        "lmax": res.lmax,
        "converged": res.converged,
        "n_iterations": res.n_iterations,
        "n_free": res.n_free,
        "param_count": res.param_count,
        "n_obs": res.n_obs,
        "n_scored": res.n_scored,
        "hessian_pd": res.hessian_pd,
        "estimates": res.estimates(),
        "std_errors": res.std_errors,
        "params": {
            "lambda0": p.lambda0, "lambda1": p.lambda1, "lambda2": p.lambda2,
            "lambda3": p.lambda3, "igarch": p.igarch, "theta1": p.theta1,
            "theta2": p.theta2, "dof": p.dof, "m": p.m, "rbar": p.rbar,
        },
        "mean_order": cfg.p,
        "config": cfg.doc,
        "tie_suggestions": est.suggest_ties(),
    })
    path = est.path_
    _write_wide(out / "volatility.csv", times, assets, path.d)
    pairs = _pairs(assets)
    if pairs:
        _write_wide(out / "correlation.csv", times, [_pair_name(assets, i, j) for i, j in pairs],
                    np.column_stack([path.r[:, i, j] for i, j in pairs]))
    _write_wide(out / "residuals.csv", times, assets, e)
    _write_wide(out / "residuals_std.csv", times, assets, res.residuals_std)
    log.info("wrote fit artifacts to %s", out)
    return 0


def cmd_diagnose(args):
    src = Path(args.input)
    resid_path = src / "residuals_std.csv" if src.is_dir() else src
    panel = read_panel(resid_path)
    lags = tuple(int(s) for s in args.lags.split(",")) if args.lags else DEFAULT_LAGS
    if args.asymptotic:
        crits = "asymptotic"
    else:
        crits = bootstrap_critical_values(panel.values, lags=lags, n_boot=args.n_boot,
                                          seed=args.seed, threads=args.threads)
    report = adequacy_report(panel.values, crits, lags=lags)
    text = report.to_text()
    print(text)
    if args.out:
        out = _out_dir(args.out)
        (out / "adequacy.txt").write_text(text + "\n", encoding="utf-8")
        _write_json(out / "adequacy.json", report.to_dict())
        if not args.asymptotic:
            _write_json(out / "critical_values.json",
                        {"n_boot": crits.n_boot, "seed": crits.seed, "rows": crits.rows()})
    return 0


def cmd_simulate(args):
    kw, assets = load_simulation(args.config)
    if args.T is not None:
        kw["T"] = args.T
    cfg = SimulationConfig(seed=args.seed, **kw)
    sim = simulate(cfg)
    panel = ReturnPanel(tuple(assets), sim.panel.times, sim.returns)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        out.parent.mkdir(parents=True, exist_ok=True)
        write_panel(panel, out)
    else:
        out = _out_dir(out)
        write_panel(panel, out / "returns.csv")
        _write_wide(out / "volatility.csv", panel.times, assets, sim.path.d)
        pairs = _pairs(assets)
        if pairs:
            _write_wide(out / "correlation.csv", panel.times,
                        [_pair_name(assets, i, j) for i, j in pairs],
                        np.column_stack([sim.path.r[:, i, j] for i, j in pairs]))
    log.info("simulated %d rows", cfg.T)
    return 0


def cmd_roll(args):
    panel = read_panel(args.input, kind="prices" if args.prices else "returns")
    cov = rolling_covariance(panel.values, args.window)
    corr, sd = rolling_correlation(cov)
    times = panel.times[args.window - 1:]
    assets = list(panel.assets)
    out = _out_dir(args.out)
    _write_wide(out / "volatility.csv", times, assets, sd)
    pairs = _pairs(assets)
    if pairs:
        if not np.all(np.isfinite(corr)):
            raise NumericError("a window has zero variance; correlations undefined")
        _write_wide(out / "correlation.csv", times, [_pair_name(assets, i, j) for i, j in pairs],
                    np.column_stack([corr[:, i, j] for i, j in pairs]))
    cols = [f"{assets[i]}|{assets[j]}" for i in range(len(assets)) for j in range(i, len(assets))]
    _write_wide(out / "covariance.csv", times, cols,
                np.column_stack([cov[:, i, j] for i in range(len(assets))
                                 for j in range(i, len(assets))]))
    print(f"rolling window {args.window}: {len(times)} estimates written to {out}")
    return 0


def compare_frames(model_dir, roll_dir):
    """Long-format rows (time, series, method, value) on the common time span."""
    rows = []
    for kind in ("volatility", "correlation"):
        mf, rf = Path(model_dir) / f"{kind}.csv", Path(roll_dir) / f"{kind}.csv"
        if not mf.exists() and not rf.exists():
            continue
        model, roll = read_panel(mf), read_panel(rf)
        if model.assets != roll.assets:
            raise InputError(f"{kind}: series names differ between the two inputs")
        common = np.intersect1d(model.times, roll.times)
        if common.size == 0:
            raise InputError(f"{kind}: the two inputs share no time stamps")
        for name, panel in (("model", model), ("rolling", roll)):
            if common.size < panel.T:
                log.warning("%s %s: trimmed %d rows outside the common span", name, kind,
                            panel.T - common.size)
        for method, panel in (("model", model), ("rolling", roll)):
            idx = np.searchsorted(panel.times, common)
            vals = panel.values[idx]
            for j, series in enumerate(panel.assets):
                label = f"{kind}:{series}"
                rows.extend((t, label, method, float(v))
                            for t, v in zip(common, vals[:, j]))
    return rows


def cmd_compare(args):
    rows = compare_frames(args.fit, args.roll)
    out = Path(args.out)
    if out.suffix.lower() != ".csv":
        out = _out_dir(out) / "compare.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_long(rows, out)
    print(f"{len(rows)} rows written to {out}")
    return 0


# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for bootstrap")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="mvvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", parents=[common], help="descriptive statistics table")
    p.add_argument("--input", required=True)
    p.add_argument("--prices", action="store_true", help="input holds prices, not returns")
    p.add_argument("--out")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("fit", parents=[common], help="joint maximum-likelihood fit")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--prices", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", parents=[common], help="adequacy report")
    p.add_argument("--input", required=True, help="fit output directory or residual CSV")
    p.add_argument("--n-boot", type=int, default=10_000)
    p.add_argument("--lags", default=None, help="comma-separated, default 5,10,15")
    p.add_argument("--asymptotic", action="store_true",
                   help="chi-square critical values instead of the bootstrap")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", parents=[common], help="simulate a return panel")
    p.add_argument("--config", required=True)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV file or output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("roll", parents=[common], help="rolling-window covariances")
    p.add_argument("--input", required=True)
    p.add_argument("--window", type=int, default=69)
    p.add_argument("--prices", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_roll)

    p = sub.add_parser("compare", parents=[common], help="merge model and rolling paths")
    p.add_argument("--fit", required=True, help="fit output directory")
    p.add_argument("--roll", required=True, help="roll output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, MvVolError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
