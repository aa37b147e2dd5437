"""Monte Carlo experiments over the simulator.

Each experiment simulates panels, runs the estimation chain, and
aggregates a small set of metrics with deterministic per-replication
seeds (base seed + replication index), so replications can be executed in
any order or in parallel without changing a single draw.

Estimation here runs on the simulated observations directly (the models
are engineered to unit population variance per series); standardization
is part of data preparation in the CLI pipeline, not of the asymptotic
statements these experiments check.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, FactorlagError, NumericalError
from .eigen import factors_from_values, pc_map
from .inference import infer, weak_factor_test
from .lag_design import build_lag_matrix, lag_labels, select_full_rank_columns
from .simulator import (
    population_lag_cov,
    population_pc_fdl_beta,
    population_weak_share,
    preset,
    simulate,
)

_MODEL_OVERRIDE_KEYS = ("rho", "coupling", "n_weak", "weak_share", "weak_unit_lag1")

_DEFAULT_MODELS = {
    "coverage": "benchmark",
    "rate": "benchmark_rate",
    "weak_test": "benchmark_nolag",
    "weak_share": "benchmark",
}


@dataclass(frozen=True)
class MonteCarloSummary:
    experiment: str
    metrics: dict
    replications: int
    failures: int
    seed: int
    config: dict


def _spec_from_config(cfg, experiment):
    name = cfg.get("model", _DEFAULT_MODELS[experiment])
    overrides = {k: cfg[k] for k in _MODEL_OVERRIDE_KEYS if k in cfg}
    return preset(name, **overrides)


def _selected_columns(spec, p, tol_rel=1e-8):
    lagcov = population_lag_cov(spec.M, spec.G_bar, spec.r, p)
    sel = select_full_rank_columns(lagcov, tol_rel=tol_rel)
    if sel.size == 0:
        raise NumericalError("population lag covariance has no admissible columns")
    return sel


def _test_series(spec, n, count):
    """Half designated-weak, half plain series, deterministically chosen."""
    weak = list(range(spec.r, spec.r + spec.n_weak))
    plain = [i for i in range(spec.r, n) if i not in weak]
    take_w = min(len(weak), count // 2 if plain else count)
    picked = weak[:take_w] + plain[: count - take_w]
    if not picked:
        raise ConfigError("no series available for testing")
    return picked


def _fail_guard(failures, reps):
    if failures > 0.05 * reps:
        raise NumericalError(f"{failures}/{reps} replications failed")


def monte_carlo(config, replications=None):
    """Run one experiment described by a flat config mapping.

    Recognized experiments: ``coverage`` (CI coverage of the true
    distributed-lag coefficients), ``rate`` (factor-map and common
    component consistency over a size grid), ``weak_test`` (size or power
    of the weak-factor Wald test), ``weak_share`` (recovery of the
    population weak variance share).
    """
    cfg = dict(config)
    experiment = cfg.get("experiment")
    if experiment not in _DEFAULT_MODELS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {sorted(_DEFAULT_MODELS)}"
        )
    if replications is not None:
        cfg["reps"] = int(replications)
    cfg.setdefault("seed", 20260101)
    cfg.setdefault("p", 1)
    cfg.setdefault("bandwidth", "auto")
    runner = {
        "coverage": _run_coverage,
        "rate": _run_rate,
        "weak_test": _run_weak_test,
        "weak_share": _run_weak_share,
    }[experiment]
    return runner(cfg)


def _run_coverage(cfg):
    spec = _spec_from_config(cfg, "coverage")
    n = int(cfg.get("n", 200))
    T = int(cfg.get("T", 1000))
    reps = int(cfg.get("reps", 500))
    seed = int(cfg["seed"])
    p = int(cfg["p"])
    level = float(cfg.get("level", 0.95))
    crit = 1.96 if level == 0.95 else float(stats.norm.ppf(0.5 + level / 2.0))
    sel = _selected_columns(spec, p)
    labels = [lag_labels(spec.r, p)[i] for i in sel]
    series = _test_series(spec, n, int(cfg.get("series_count", 6)))

    hits = np.zeros((len(series), len(sel)))
    done = 0
    failures = 0
    for k in range(reps):
        try:
            sim = simulate(spec, T, n, seed + k)
            fac = factors_from_values(sim.y, spec.r)
            basis = build_lag_matrix(fac.factors, p)
            X = basis.X_full[:, sel]
            for si, i in enumerate(series):
                res = infer(X, sim.y[p:, i], labels, bandwidth=cfg["bandwidth"])
                beta_true = population_pc_fdl_beta(sim.model, p, sel, i)
                hits[si] += np.abs(res.beta_hat - beta_true) <= crit * res.se
            done += 1
        except FactorlagError:
            failures += 1
    _fail_guard(failures, reps)
    rates = hits / done
    # headline coverage per basis coefficient, pooled over tested series;
    # the per-series breakdown is kept for diagnostics
    pooled = rates.mean(axis=0)
    coverage = {lab: float(pooled[ci]) for ci, lab in enumerate(labels)}
    by_series = {
        f"series{series[si]}:{lab}": float(rates[si, ci])
        for si in range(len(series))
        for ci, lab in enumerate(labels)
    }
    metrics = {
        "coverage": coverage,
        "coverage_by_series": by_series,
        "coverage_min": float(pooled.min()),
        "coverage_max": float(pooled.max()),
        "mc_se": float(np.sqrt(level * (1 - level) / (done * len(series)))),
        "level": level,
    }
    return MonteCarloSummary("coverage", metrics, reps, failures, seed, cfg)


def _run_rate(cfg):
    spec = _spec_from_config(cfg, "rate")
    sizes = [int(s) for s in cfg.get("sizes", (50, 100, 200, 400))]
    reps = int(cfg.get("reps", 100))
    seed = int(cfg["seed"])
    p = int(cfg["p"])
    sel = _selected_columns(spec, p)
    r = spec.r

    k_err = {}
    chi_mse = {}
    failures = 0
    for gi, size in enumerate(sizes):
        errs, mses = [], []
        for k in range(reps):
            try:
                sim = simulate(spec, size, size, seed + gi * reps + k)
                gamma = sim.y.T @ sim.y / size
                pc = pc_map(gamma, r)
                lam_true = sim.model.H[:, :r]
                errs.append(np.linalg.norm(pc.K @ lam_true - np.eye(r)))
                F_hat = sim.y @ pc.K.T
                basis = build_lag_matrix(F_hat, p)
                X = basis.X_full[:, sel]
                beta, _, _, _ = np.linalg.lstsq(X, sim.y[p:], rcond=None)
                mses.append(float(np.mean((X @ beta - sim.chi[p:]) ** 2)))
            except FactorlagError:
                failures += 1
        k_err[size] = float(np.mean(errs))
        chi_mse[size] = float(np.mean(mses))
    _fail_guard(failures, reps * len(sizes))
    x = np.log(1.0 / np.sqrt(np.asarray(sizes, dtype=np.float64)))
    slope = float(np.polyfit(x, np.log([k_err[s] for s in sizes]), 1)[0])
    metrics = {
        "k_error": {str(s): k_err[s] for s in sizes},
        "k_error_slope": slope,
        "chi_mse": {str(s): chi_mse[s] for s in sizes},
        "chi_mse_ratio_last_to_second": chi_mse[sizes[-1]] / chi_mse[sizes[1]],
    }
    return MonteCarloSummary("rate", metrics, reps, failures, seed, cfg)


def _run_weak_test(cfg):
    spec = _spec_from_config(cfg, "weak_test")
    n = int(cfg.get("n", 200))
    T = int(cfg.get("T", 1000))
    reps = int(cfg.get("reps", 1000))
    seed = int(cfg["seed"])
    p = int(cfg["p"])
    alpha = float(cfg.get("alpha", 0.05))
    series = int(cfg.get("series", spec.r))
    sel = _selected_columns(spec, p)
    labels = [lag_labels(spec.r, p)[i] for i in sel]

    rejections = 0
    done = 0
    failures = 0
    for k in range(reps):
        try:
            sim = simulate(spec, T, n, seed + k)
            fac = factors_from_values(sim.y, spec.r)
            basis = build_lag_matrix(fac.factors, p)
            X = basis.X_full[:, sel]
            res = infer(X, sim.y[p:, series], labels, bandwidth=cfg["bandwidth"])
            test = weak_factor_test(res)
            if test.status != "ok":
                raise NumericalError("selected basis has no lag > 0 column")
            rejections += test.p_value < alpha
            done += 1
        except FactorlagError:
            failures += 1
    _fail_guard(failures, reps)
    rate = rejections / done
    metrics = {
        "rejection_rate": float(rate),
        "alpha": alpha,
        "series": series,
        "mc_se": float(np.sqrt(rate * max(1 - rate, 1e-12) / done)),
    }
    return MonteCarloSummary("weak_test", metrics, reps, failures, seed, cfg)


def _run_weak_share(cfg):
    spec = _spec_from_config(cfg, "weak_share")
    if spec.n_weak < 1:
        raise ConfigError("weak_share experiment needs a model with designated weak series")
    n = int(cfg.get("n", 200))
    T = int(cfg.get("T", 1000))
    reps = int(cfg.get("reps", 100))
    seed = int(cfg["seed"])
    p = int(cfg["p"])
    sel = _selected_columns(spec, p)
    weak_rows = np.arange(spec.r, spec.r + spec.n_weak)

    est_means = []
    pop_share = None
    failures = 0
    for k in range(reps):
        try:
            sim = simulate(spec, T, n, seed + k)
            fac = factors_from_values(sim.y, spec.r)
            basis = build_lag_matrix(fac.factors, p)
            X = basis.X_full[:, sel]
            y_eff = sim.y[p:]
            beta, _, _, _ = np.linalg.lstsq(X, y_eff, rcond=None)
            chi = X @ beta
            F_c = fac.factors[p:] - fac.factors[p:].mean(axis=0)
            chi_c = chi - chi.mean(axis=0)
            lam, _, _, _ = np.linalg.lstsq(F_c, chi_c, rcond=None)
            e_chi = chi_c - F_c @ lam
            shares = e_chi.var(axis=0) / y_eff.var(axis=0)
            est_means.append(float(shares[weak_rows].mean()))
            if pop_share is None:
                pop_share = float(population_weak_share(sim.model)[weak_rows].mean())
        except FactorlagError:
            failures += 1
    _fail_guard(failures, reps)
    mean_share = float(np.mean(est_means))
    metrics = {
        "mean_weak_share": mean_share,
        "population_weak_share": pop_share,
        "abs_error": abs(mean_share - pop_share),
        "per_rep_sd": float(np.std(est_means)),
    }
    return MonteCarloSummary("weak_share", metrics, reps, failures, seed, cfg)
