"""Acceptance suite: one test per release criterion.

Each test prints a single pass/fail line (run with ``pytest -s`` to see
them live).  Tolerances and sample sizes are pinned here; nothing is
deferred to later calibration.
"""

import time
from pathlib import Path

import numpy as np

from factorlag.cli import main
from factorlag.lag_design import build_lag_matrix, gram_rank_check, rank_from_gram
from factorlag.lasso import lasso_solve, penalty_grid
from factorlag.montecarlo import monte_carlo
from factorlag.simulator import preset, simulate, stationary_state_cov


def _report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_ci_coverage():
    t0 = time.time()
    summary = monte_carlo({
        "experiment": "coverage", "model": "benchmark",
        "n": 200, "T": 1000, "reps": 500, "seed": 20260101,
    })
    elapsed = time.time() - t0
    cov = summary.metrics["coverage"]
    ok = all(0.90 <= v <= 0.975 for v in cov.values()) and elapsed < 600
    detail = ("95% CI coverage per coefficient "
              + ", ".join(f"{k}={v:.3f}" for k, v in cov.items())
              + f" (bands [0.90, 0.975]; {elapsed:.0f}s)")
    _report(1, ok, detail)


def test_criterion_2_consistency_rates():
    summary = monte_carlo({
        "experiment": "rate", "sizes": (50, 100, 200, 400),
        "reps": 100, "seed": 20260102,
    })
    slope = summary.metrics["k_error_slope"]
    mse = summary.metrics["chi_mse"]
    ratio = mse["400"] / mse["100"]
    ok = 0.7 <= slope <= 1.3 and ratio < 0.5
    _report(2, ok, f"factor-map error slope {slope:.2f} in [0.7, 1.3]; "
                   f"chi-MSE(400)/chi-MSE(100) = {ratio:.2f} < 0.5")


def test_criterion_3_singular_design_detection():
    spec = preset("example1")
    sigma = stationary_state_cov(spec.M, spec.G_bar)
    v = np.array([0.0, 1.0])  # v _|_ b = (1, 0)'
    A = np.diag([0.5, 0.5])
    direction = np.concatenate([v, -A.T @ v])
    direction /= np.linalg.norm(direction)

    pop = rank_from_gram(sigma, tol_rel=1e-8)
    proj = pop.kernel @ (pop.kernel.T @ direction)
    angle_pop = np.arccos(np.clip(np.linalg.norm(proj), 0.0, 1.0))

    sim = simulate(spec, 10000, 4, seed=20260103)
    basis = build_lag_matrix(sim.F, 1)
    samp = gram_rank_check(basis.X_full, tol_rel=1e-8)
    proj_s = samp.kernel @ (samp.kernel.T @ direction)
    angle_samp = np.arccos(np.clip(np.linalg.norm(proj_s), 0.0, 1.0))

    ok = (not pop.full_rank and angle_pop < 1e-6
          and not samp.full_rank and angle_samp < 1e-6)
    _report(3, ok, f"population kernel angle {angle_pop:.2e}, sample Gram rank "
                   f"{samp.rank}/4 at T=10000, sample kernel angle {angle_samp:.2e}")


def test_criterion_4_lasso_correctness():
    rng = np.random.default_rng(20260104)
    X = rng.standard_normal((300, 12))
    y = X @ np.concatenate([rng.standard_normal(5), np.zeros(7)]) + rng.standard_normal(300)

    ols_gap = np.abs(
        lasso_solve(X, y, 0.0).coefficients - np.linalg.lstsq(X, y, rcond=None)[0]
    ).max()

    Q, _ = np.linalg.qr(rng.standard_normal((400, 9)))
    Xo = Q * np.sqrt(400)
    yo = Xo @ np.concatenate([rng.standard_normal(4), np.zeros(5)]) + rng.standard_normal(400)
    c = Xo.T @ yo / 400
    soft_gap = 0.0
    for lam in (0.05, 0.2, 0.6):
        oracle = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
        soft_gap = max(soft_gap, np.abs(lasso_solve(Xo, yo, lam).coefficients - oracle).max())

    grid = penalty_grid(X, y, n_grid=4, ratio=0.1)
    null_exact = (lasso_solve(X, y, grid[0]).active_set.size == 0
                  and np.all(lasso_solve(X, y, 2 * grid[0]).coefficients == 0.0))

    ok = ols_gap < 1e-8 and soft_gap < 1e-8 and null_exact
    _report(4, ok, f"lambda=0 vs OLS gap {ols_gap:.1e} < 1e-8; soft-threshold gap "
                   f"{soft_gap:.1e} < 1e-8; null model exact at lambda_max: {null_exact}")


def test_criterion_5_weak_factor_test_size_and_power():
    size_summary = monte_carlo({
        "experiment": "weak_test", "model": "benchmark_nolag",
        "n": 200, "T": 1000, "reps": 1000, "seed": 20260105,
    })
    size = size_summary.metrics["rejection_rate"]
    power_summary = monte_carlo({
        "experiment": "weak_test", "model": "benchmark_lag1",
        "n": 200, "T": 1000, "reps": 500, "seed": 20260106,
    })
    power = power_summary.metrics["rejection_rate"]
    ok = 0.02 <= size <= 0.09 and power > 0.9
    _report(5, ok, f"5% test size {size:.3f} in [0.02, 0.09] (1000 reps); "
                   f"power {power:.3f} > 0.9 under a unit F1_L1 coefficient")


def test_criterion_6_decomposition_identities():
    from factorlag.panel import Panel
    from factorlag.pipeline import PipelineSettings, run_estimate

    sim = simulate(preset("benchmark"), 500, 60, seed=20260107)
    values = (sim.y - sim.y.mean(axis=0)) / sim.y.std(axis=0)
    panel = Panel(values=values, series_ids=tuple(f"s{i}" for i in range(60)),
                  time_index=tuple(range(500)), standardized=True,
                  means=sim.y.mean(axis=0), sds=sim.y.std(axis=0))
    run = run_estimate(panel, PipelineSettings(r=2, p=1, lam=0.02))
    dec = run.decomposition
    additivity = np.abs(dec.C_hat + dec.e_chi_hat + dec.xi_hat - panel.values[1:]).max()
    F_eff = run.factors.factors[1:]
    e_c = dec.e_chi_hat - dec.e_chi_hat.mean(axis=0)
    F_c = F_eff - F_eff.mean(axis=0)
    ortho = np.abs(e_c.T @ F_c / len(F_eff)).max()
    ok = additivity < 1e-12 and ortho < 1e-8
    _report(6, ok, f"additivity gap {additivity:.1e} < 1e-12; "
                   f"max |cov(e_chi, F)| {ortho:.1e} < 1e-8")


def test_criterion_7_weak_share_recovery():
    summary = monte_carlo({
        "experiment": "weak_share", "model": "benchmark",
        "weak_share": 0.4, "share_C_weak_series": 0.35,
        "n": 200, "T": 1000, "reps": 100, "seed": 20260108,
    })
    mean_share = summary.metrics["mean_weak_share"]
    target = summary.metrics["population_weak_share"]
    ok = abs(target - 0.4) < 1e-9 and abs(mean_share - 0.4) <= 0.1
    _report(7, ok, f"population share engineered at {target:.3f}; mean estimate "
                   f"{mean_share:.3f} within 0.4 +/- 0.1 over 100 replications")


def test_criterion_8_pipeline_parity(tmp_path):
    t0 = time.time()
    sim_dir = tmp_path / "sim"
    rc = main(["simulate", "--model", "fredlike", "--T", "764", "--n", "120",
               "--seed", "20260109", "--format", "fredmd", "--out", str(sim_dir)])
    assert rc == 0
    run_dir = tmp_path / "run"
    rc = main(["estimate", "--data", str(sim_dir / "panel.csv"), "--layout", "fredmd",
               "--r", "8", "--p", "24", "--calibrate-first", "--window", "488",
               "--calib-frac", "0.8", "--grid-size", "100", "--grid-ratio", "0.001",
               "--jobs", "2", "--out", str(run_dir)])
    elapsed = time.time() - t0
    assert rc == 0

    factors = (run_dir / "factors.csv").read_text().splitlines()
    shares = (run_dir / "shares.csv").read_text().splitlines()
    table = (run_dir / "table_S000.csv").read_text().splitlines()
    header_ok = table[0] == ",Estimate,Std. error,t value,Pr(>|t|),stars"
    masks_header = (run_dir / "masks.csv").read_text().splitlines()[0]

    def _load(name):
        lines = (run_dir / name).read_text().splitlines()[1:]
        return np.array([[float(v) for v in ln.split(",")[1:]] for ln in lines])

    resid = np.abs(_load("C.csv") + _load("e_chi.csv") - _load("chi.csv")).max()

    ok = (len(factors) == 765 and factors[0].endswith("F8")
          and len(shares) == 121
          and shares[0] == "series,share_C,share_weak,share_chi,share_xi"
          and header_ok
          and masks_header.endswith("F8_L24")
          and resid < 1e-12
          and elapsed < 300)
    _report(8, ok, f"synthetic fredmd panel T=764, n=120 through ingest -> r=8 PCA -> "
                   f"p=24 lags -> 488-window calibration -> LASSO -> OLS+HAC -> "
                   f"decomposition in {elapsed:.0f}s < 300s; five-column tables emitted")


def test_criterion_9_determinism(tmp_path):
    sim = simulate(preset("benchmark_q2"), 140, 16, seed=20260110)
    data = tmp_path / "panel.csv"
    from factorlag.simulator import write_plain_csv

    write_plain_csv(sim.y, [f"S{i:03d}" for i in range(16)], data)

    def _bytes(path, skip=()):
        return {
            str(p.relative_to(path)): p.read_bytes()
            for p in sorted(Path(path).rglob("*"))
            if p.is_file() and p.name not in skip
        }

    # simulate: bit-identical reruns
    s1, s2 = tmp_path / "s1", tmp_path / "s2"
    for out in (s1, s2):
        assert main(["simulate", "--model", "benchmark", "--T", "90", "--n", "10",
                     "--seed", "5", "--out", str(out)]) == 0
    sim_ok = _bytes(s1) == _bytes(s2)

    # estimate: rerun from the manifest, and worker count must not matter
    base_args = ["estimate", "--data", str(data), "--r", "2", "--p", "1",
                 "--calibrate-first", "--window", "60", "--grid-size", "15",
                 "--grid-ratio", "0.01"]
    e1, e2, e4 = tmp_path / "e1", tmp_path / "e2", tmp_path / "e4"
    assert main(base_args + ["--jobs", "1", "--out", str(e1)]) == 0
    assert main(["estimate", "--config", str(e1 / "manifest.txt"), "--out", str(e2)]) == 0
    manifest_ok = _bytes(e1) == _bytes(e2)
    assert main(base_args + ["--jobs", "2", "--out", str(e4)]) == 0
    jobs_ok = _bytes(e1, skip=("manifest.txt",)) == _bytes(e4, skip=("manifest.txt",))

    # montecarlo: rerun from the experiment file
    from factorlag.io import write_config

    exp = tmp_path / "exp.txt"
    write_config(exp, {"experiment": "weak_share", "n": 60, "T": 250,
                       "reps": 2, "seed": 3})
    m1, m2 = tmp_path / "m1", tmp_path / "m2"
    for out in (m1, m2):
        assert main(["montecarlo", "--experiment", str(exp), "--out", str(out)]) == 0
    mc_ok = _bytes(m1) == _bytes(m2)

    ok = sim_ok and manifest_ok and jobs_ok and mc_ok
    _report(9, ok, f"byte-identical outputs: simulate rerun {sim_ok}, manifest rerun "
                   f"{manifest_ok}, jobs=1 vs jobs=2 {jobs_ok}, montecarlo rerun {mc_ok}")
