"""Batch command-line front end.

Every run resolves its options (flags win over the config file, which
wins over defaults), writes a manifest of the resolved configuration
before any result, and then emits plot-ready CSV/JSON artifacts.  Re-running
a command with ``--config manifest.txt`` reproduces the outputs byte for
byte under the same kernel engine.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

import argparse
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, FactorlagError
from . import io as fio
from ._kernels import kernel_engine
from .montecarlo import monte_carlo
from .panel import load_csv, prepare
from .pipeline import PipelineSettings, run_estimate
from .simulator import (
    check_miniphase,
    population_weak_share,
    preset,
    simulate,
    write_fredmd_csv,
    write_plain_csv,
)

ENV_OUTDIR = "FACTORLAG_OUTDIR"

_SCHEMAS = {
    "simulate": [
        ("model", str, "benchmark"),
        ("T", int, 1000),
        ("n", int, 100),
        ("seed", int, 1),
        ("burn_in", int, 500),
        ("format", str, "plain"),
    ],
    "calibrate": [
        ("data", str, None),
        ("layout", str, "plain"),
        ("series", str, "all"),
        ("r", int, 8),
        ("p", int, 24),
        ("window", int, 488),
        ("calib_frac", float, 0.8),
        ("grid_size", int, 100),
        ("grid_ratio", float, 1e-3),
        ("stride", int, 1),
        ("threshold_iqr", float, 10.0),
        ("jobs", int, 1),
    ],
    "estimate": [
        ("data", str, None),
        ("layout", str, "plain"),
        ("r", int, 8),
        ("p", int, 24),
        ("lambda", float, None),
        ("calibrate_first", bool, False),
        ("window", int, 488),
        ("calib_frac", float, 0.8),
        ("grid_size", int, 100),
        ("grid_ratio", float, 1e-3),
        ("stride", int, 1),
        ("bandwidth", str, "auto"),
        ("tail", str, "two-sided"),
        ("threshold_iqr", float, 10.0),
        ("jobs", int, 1),
    ],
    "montecarlo": [
        ("experiment", str, None),
        ("reps", int, None),
    ],
    "report": [
        ("run", str, None),
    ],
}
_SCHEMAS["decompose"] = _SCHEMAS["estimate"]


def _add_command_flags(sub, command):
    for name, typ, _default in _SCHEMAS[command]:
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            sub.add_argument(flag, dest=name, action="store_const", const=True, default=None)
        else:
            sub.add_argument(flag, dest=name, type=str, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="factorlag",
        description="Distributed-lag factor model estimation and simulation",
    )
    parser.add_argument("--version", action="version", version=f"factorlag {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for command in ("estimate", "calibrate", "simulate", "montecarlo", "decompose", "report"):
        sub = subs.add_parser(command)
        sub.add_argument("--config", type=str, default=None)
        sub.add_argument("--out", type=str, default=None)
        _add_command_flags(sub, command)
    return parser


def _convert(typ, value, name):
    if value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() == "true"
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"option {name!r}: cannot interpret {value!r}") from None


def resolve_options(args, command):
    file_cfg = {}
    if args.config:
        if not Path(args.config).exists():
            raise ConfigError(f"config file {args.config!r} does not exist")
        file_cfg = fio.parse_config(args.config)
    resolved = {}
    for name, typ, default in _SCHEMAS[command]:
        value = getattr(args, name, None)
        if value is None:
            value = file_cfg.get(name, default)
        resolved[name] = _convert(typ, value, name)
    out = args.out or file_cfg.get("out") or os.environ.get(ENV_OUTDIR)
    resolved["out"] = str(out) if out else f"factorlag_runs/{command}"
    return resolved


def _write_manifest(outdir, command, options, input_path=None):
    # the output directory is a location, not configuration: leaving it
    # out keeps re-runs into fresh directories byte-identical
    manifest = {k: v for k, v in options.items() if v is not None and k != "out"}
    manifest["command"] = command
    manifest["version"] = __version__
    manifest["kernel_engine"] = kernel_engine()
    if input_path is not None:
        manifest["input_checksum"] = fio.sha256_file(input_path)
    fio.write_config(outdir / "manifest.txt", manifest)


def _safe_name(label):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", str(label))


def _load_prepared(opts):
    if not opts.get("data"):
        raise ConfigError("--data is required")
    if not Path(opts["data"]).exists():
        raise DataError(f"data file {opts['data']!r} does not exist")
    raw, meta = load_csv(opts["data"], layout=opts["layout"])
    return prepare(raw, meta, threshold_iqr=opts["threshold_iqr"])


def _settings(opts, calibrate_only=False):
    return PipelineSettings(
        r=opts["r"],
        p=opts["p"],
        lam=None if calibrate_only else opts.get("lambda"),
        calibrate=True if calibrate_only else opts.get("calibrate_first", False),
        window=opts["window"],
        calib_frac=opts["calib_frac"],
        grid_size=opts["grid_size"],
        grid_ratio=opts["grid_ratio"],
        stride=opts["stride"],
        bandwidth=_bandwidth(opts.get("bandwidth", "auto")),
        tail=opts.get("tail", "two-sided"),
        jobs=opts.get("jobs", 1),
    )


def _bandwidth(value):
    if value in ("auto", None):
        return "auto"
    return int(value)


def _series_indices(panel, spec):
    if spec == "all":
        return None
    chosen = []
    for token in str(spec).split(";"):
        token = token.strip()
        if token in panel.series_ids:
            chosen.append(panel.series_ids.index(token))
        else:
            try:
                chosen.append(int(token))
            except ValueError:
                raise ConfigError(f"unknown series {token!r}") from None
    return chosen


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

_TABLE_HEADER = ["", "Estimate", "Std. error", "t value", "Pr(>|t|)", "stars"]


def _write_coefficient_tables(outdir, panel, results):
    long_rows = []
    for res in results:
        sid = panel.series_ids[res.series]
        inf = res.inference
        rows = [
            (lab, b, s, t, p, st)
            for lab, b, s, t, p, st in zip(
                inf.labels, inf.beta_hat, inf.se, inf.t_stats, inf.p_values, inf.stars
            )
        ]
        fio.write_rows_csv(outdir / f"table_{_safe_name(sid)}.csv", _TABLE_HEADER, rows)
        long_rows.extend((sid,) + row for row in rows)
    fio.write_rows_csv(
        outdir / "coefficients.csv",
        ["series", "term", "estimate", "std_error", "t_value", "p_value", "stars"],
        long_rows,
    )


def _write_masks(outdir, panel, basis, results):
    header = ["series"] + list(basis.labels)
    rows = [
        [panel.series_ids[res.series]] + [int(v) for v in res.mask]
        for res in results
    ]
    fio.write_rows_csv(outdir / "masks.csv", header, rows)


def _write_weak_tests(outdir, panel, results):
    rows = []
    for res in results:
        wt = res.weak_test
        rows.append((panel.series_ids[res.series], wt.statistic, wt.dof, wt.p_value, wt.status))
    fio.write_rows_csv(
        outdir / "weak_tests.csv",
        ["series", "statistic", "dof", "p_value", "status"],
        rows,
    )


def _write_calibrations(outdir, panel, results):
    lam_rows = []
    for res in results:
        if res.calibration is None:
            lam_rows.append((panel.series_ids[res.series], res.penalty))
            continue
        sid = _safe_name(panel.series_ids[res.series])
        cal = res.calibration
        fio.write_rows_csv(
            outdir / f"calib_mse_{sid}.csv",
            ["penalty", "mse"],
            list(zip(cal.penalty_grid, cal.mse_per_penalty)),
        )
        fio.write_matrix_csv(
            outdir / f"calib_incidence_{sid}.csv",
            cal.selection_incidence.astype(int),
            list(cal.labels),
            row_labels=list(cal.window_starts),
            row_label_name="window_start",
        )
        lam_rows.append((panel.series_ids[res.series], res.penalty))
    fio.write_rows_csv(outdir / "lambdas.csv", ["series", "optimal_penalty"], lam_rows)


def _write_decomposition(outdir, panel, run):
    dec = run.decomposition
    ids = list(panel.series_ids)
    times = list(dec.time_index)
    for name, mat in (("chi", dec.chi_hat), ("C", dec.C_hat),
                      ("e_chi", dec.e_chi_hat), ("xi", dec.xi_hat)):
        fio.write_matrix_csv(outdir / f"{name}.csv", mat, ids, row_labels=times)
    sh = run.shares
    fio.write_rows_csv(
        outdir / "shares.csv",
        ["series", "share_C", "share_weak", "share_chi", "share_xi"],
        list(zip(sh.series_ids, sh.share_C, sh.share_weak, sh.share_chi, sh.share_xi)),
    )
    fio.write_rows_csv(
        outdir / "crossterms.csv",
        ["series", "cross_C_weak", "cross_chi_xi"],
        list(zip(sh.series_ids, sh.cross_C_weak, sh.cross_chi_xi)),
    )


def _write_factors(outdir, panel, run):
    fac = run.factors
    r = fac.factors.shape[1]
    names = [f"F{j + 1}" for j in range(r)]
    fio.write_matrix_csv(outdir / "factors.csv", fac.factors, names,
                         row_labels=list(panel.time_index))
    fio.write_matrix_csv(outdir / "loadings.csv", fac.loadings, names,
                         row_labels=list(panel.series_ids), row_label_name="series")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_simulate(opts, outdir):
    spec = preset(opts["model"])
    _write_manifest(outdir, "simulate", opts)
    sim = simulate(spec, opts["T"], opts["n"], opts["seed"], burn_in=opts["burn_in"])
    ids = [f"S{i:03d}" for i in range(opts["n"])]
    if opts["format"] == "fredmd":
        write_fredmd_csv(sim.y, ids, outdir / "panel.csv")
    elif opts["format"] == "plain":
        write_plain_csv(sim.y, ids, outdir / "panel.csv")
    else:
        raise ConfigError(f"unknown format {opts['format']!r}")
    for name, mat in (("chi", sim.chi), ("C", sim.C), ("e_chi", sim.e_chi), ("xi", sim.xi)):
        fio.write_matrix_csv(outdir / f"truth_{name}.csv", mat, ids,
                             row_labels=list(range(mat.shape[0])))
    fio.write_matrix_csv(outdir / "truth_factors.csv", sim.F,
                         [f"F{j + 1}" for j in range(sim.F.shape[1])],
                         row_labels=list(range(sim.F.shape[0])))
    report = check_miniphase(sim.model)
    fio.write_json(outdir / "summary.json", {
        "model": spec.name,
        "seed": opts["seed"],
        "T": opts["T"],
        "n": opts["n"],
        "miniphase_pass": bool(report.passed),
        "population_weak_share_mean": float(np.mean(population_weak_share(sim.model))),
    })
    return 0


def _cmd_estimate(opts, outdir, decompose_only=False):
    panel, outliers = _load_prepared(opts)
    _write_manifest(outdir, "decompose" if decompose_only else "estimate",
                    opts, input_path=opts["data"])
    outliers.to_csv(outdir / "imputation_report.csv")
    settings = _settings(opts)
    run = run_estimate(panel, settings)
    _write_masks(outdir, panel, run.basis, run.series_results)
    _write_decomposition(outdir, panel, run)
    if settings.calibrate:
        _write_calibrations(outdir, panel, run.series_results)
    if not decompose_only:
        _write_factors(outdir, panel, run)
        _write_coefficient_tables(outdir, panel, run.series_results)
        _write_weak_tests(outdir, panel, run.series_results)
    return 0


def _cmd_calibrate(opts, outdir):
    panel, _outliers = _load_prepared(opts)
    _write_manifest(outdir, "calibrate", opts, input_path=opts["data"])
    series = _series_indices(panel, opts["series"])
    settings = _settings(opts, calibrate_only=True)
    run = run_estimate(panel, settings, series=series)
    _write_calibrations(outdir, panel, run.series_results)
    return 0


def _cmd_montecarlo(opts, outdir):
    if not opts.get("experiment"):
        raise ConfigError("--experiment config file is required")
    if not Path(opts["experiment"]).exists():
        raise ConfigError(f"experiment file {opts['experiment']!r} does not exist")
    cfg = fio.parse_config(opts["experiment"])
    _write_manifest(outdir, "montecarlo", opts, input_path=opts["experiment"])
    summary = monte_carlo(cfg, replications=opts.get("reps"))
    payload = {
        "experiment": summary.experiment,
        "metrics": summary.metrics,
        "replications": summary.replications,
        "failures": summary.failures,
        "seed": summary.seed,
    }
    fio.write_json(outdir / "summary.json", payload)
    rows = []

    def _flatten(prefix, obj):
        if isinstance(obj, dict):
            for key in sorted(obj):
                _flatten(f"{prefix}.{key}" if prefix else str(key), obj[key])
        else:
            rows.append((prefix, obj))

    _flatten("", payload["metrics"])
    fio.write_rows_csv(outdir / "summary.csv", ["metric", "value"], rows)
    return 0


def _cmd_report(opts, outdir):
    if not opts.get("run"):
        raise ConfigError("--run directory is required")
    rundir = Path(opts["run"])
    if not rundir.is_dir():
        raise DataError(f"run directory {opts['run']!r} does not exist")
    _write_manifest(outdir, "report", opts)
    copied = []
    for name in ("coefficients.csv", "shares.csv", "weak_tests.csv", "lambdas.csv"):
        src = rundir / name
        if src.exists():
            (outdir / name).write_bytes(src.read_bytes())
            copied.append(name)
    manifest_ok = None
    src_manifest = rundir / "manifest.txt"
    if src_manifest.exists():
        cfg = fio.parse_config(src_manifest)
        data = cfg.get("data")
        if data and Path(str(data)).exists() and "input_checksum" in cfg:
            manifest_ok = fio.sha256_file(str(data)) == cfg["input_checksum"]
    fio.write_json(outdir / "report.json", {
        "source_run": str(rundir),
        "collected": copied,
        "input_checksum_matches": manifest_ok,
    })
    return 0


def _run(args):
    command = args.command
    opts = resolve_options(args, command)
    outdir = Path(opts["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if command == "simulate":
            return _cmd_simulate(opts, outdir)
        if command == "estimate":
            return _cmd_estimate(opts, outdir)
        if command == "decompose":
            return _cmd_estimate(opts, outdir, decompose_only=True)
        if command == "calibrate":
            return _cmd_calibrate(opts, outdir)
        if command == "montecarlo":
            return _cmd_montecarlo(opts, outdir)
        if command == "report":
            return _cmd_report(opts, outdir)
        raise ConfigError(f"unknown command {command!r}")
    except FactorlagError as exc:
        fio.write_json(outdir / "error.json",
                       {"error": type(exc).__name__, "message": str(exc)})
        raise


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FactorlagError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
