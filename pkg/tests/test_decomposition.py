import numpy as np
import pytest

from factorlag.decomposition import assemble, static_cc, variance_shares, weak_cc
from factorlag.eigen import FactorEstimate, factors_from_values
from factorlag.errors import DataError
from factorlag.lag_design import build_lag_matrix, select_full_rank_columns
from factorlag.panel import Panel
from factorlag.simulator import population_lag_cov, preset, simulate


def _standardized_panel(values):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[1]
    return Panel(values=values, series_ids=tuple(f"s{i}" for i in range(n)),
                 time_index=tuple(range(values.shape[0])), standardized=True,
                 means=np.zeros(n), sds=np.ones(n))


def _fit_all(panel, r, p):
    fac = factors_from_values(panel.values, r)
    basis = build_lag_matrix(fac.factors, p)
    spec = preset("benchmark")
    sel = select_full_rank_columns(population_lag_cov(spec.M, spec.G_bar, 2, p), 1e-8)
    X = basis.X_full[:, sel]
    beta, _, _, _ = np.linalg.lstsq(X, panel.values[p:], rcond=None)
    selections = [sel] * panel.n
    betas = [beta[:, i] for i in range(panel.n)]
    return fac, basis, selections, betas


def test_static_cc_noiseless_panel():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((200, 2))
    lam = rng.standard_normal((10, 2))
    values = F @ lam.T
    fac = FactorEstimate(factors=F, loadings=lam, eigenvalues=np.ones(2), K=None)
    C, lam_hat = static_cc(values, fac)
    np.testing.assert_allclose(C, values, atol=1e-8)
    np.testing.assert_allclose(lam_hat, lam, atol=1e-8)


def test_static_cc_rejects_empty_factor_block():
    fac = FactorEstimate(factors=np.zeros((10, 0)), loadings=None,
                         eigenvalues=None, K=None)
    with pytest.raises(DataError):
        static_cc(np.zeros((10, 2)), fac)


def test_static_cc_beats_raw_panel():
    sim = simulate(preset("strong3"), 500, 100, seed=1)
    fac = factors_from_values(sim.y, 3)
    C_hat, _ = static_cc(sim.y, fac)
    mse_c = np.mean((C_hat - sim.C) ** 2)
    mse_raw = np.mean((sim.y - sim.C) ** 2)
    assert mse_c < mse_raw


def test_weak_cc_difference_and_validation():
    a = np.ones((5, 2))
    b = np.full((5, 2), 0.25)
    np.testing.assert_array_equal(weak_cc(a, b), a - b)
    np.testing.assert_array_equal(weak_cc(a, a), np.zeros((5, 2)))
    with pytest.raises(DataError):
        weak_cc(a, b[:, :1])


def test_assemble_identities_and_orthogonality():
    sim = simulate(preset("benchmark"), 600, 50, seed=2)
    panel = _standardized_panel((sim.y - sim.y.mean(0)) / sim.y.std(0))
    fac, basis, selections, betas = _fit_all(panel, 2, 1)
    dec = assemble(panel, fac, basis, selections, betas)
    y_eff = panel.values[1:]
    np.testing.assert_allclose(dec.C_hat + dec.e_chi_hat + dec.xi_hat, y_eff, atol=1e-12)
    np.testing.assert_allclose(dec.chi_hat, dec.C_hat + dec.e_chi_hat, atol=1e-12)
    F_eff = fac.factors[1:]
    e_c = dec.e_chi_hat - dec.e_chi_hat.mean(axis=0)
    F_c = F_eff - F_eff.mean(axis=0)
    cov = np.abs(e_c.T @ F_c / len(F_eff))
    assert cov.max() < 1e-8


def test_lag0_only_selection_kills_weak_part():
    sim = simulate(preset("benchmark"), 400, 40, seed=3)
    panel = _standardized_panel((sim.y - sim.y.mean(0)) / sim.y.std(0))
    fac = factors_from_values(panel.values, 2)
    basis = build_lag_matrix(fac.factors, 1)
    sel = np.array([0, 1])  # lag-0 block only
    beta, _, _, _ = np.linalg.lstsq(basis.X_full[:, sel], panel.values[1:], rcond=None)
    dec = assemble(panel, fac, basis, [sel] * panel.n,
                   [beta[:, i] for i in range(panel.n)])
    assert np.abs(dec.e_chi_hat).max() < 1e-10


def test_variance_shares_zero_weak_and_columns():
    sim = simulate(preset("benchmark"), 400, 40, seed=4)
    panel = _standardized_panel((sim.y - sim.y.mean(0)) / sim.y.std(0))
    fac = factors_from_values(panel.values, 2)
    basis = build_lag_matrix(fac.factors, 1)
    sel = np.array([0, 1])
    beta, _, _, _ = np.linalg.lstsq(basis.X_full[:, sel], panel.values[1:], rcond=None)
    dec = assemble(panel, fac, basis, [sel] * panel.n,
                   [beta[:, i] for i in range(panel.n)])
    shares = variance_shares(dec, panel)
    np.testing.assert_allclose(shares.share_weak, 0.0, atol=1e-12)
    # shares need not sum to one, but the audit columns close the gap
    total = shares.share_chi + shares.share_xi + 2.0 * shares.cross_chi_xi
    np.testing.assert_allclose(total, 1.0, atol=1e-8)


def test_pure_noise_series_has_small_common_share():
    for seed in range(3):
        sim = simulate(preset("benchmark"), 1000, 200, seed=30 + seed)
        values = sim.y.copy()
        rng = np.random.default_rng(99 + seed)
        values[:, 17] = rng.standard_normal(1000)
        values = (values - values.mean(0)) / values.std(0)
        panel = _standardized_panel(values)
        fac, basis, selections, betas = _fit_all(panel, 2, 1)
        dec = assemble(panel, fac, basis, selections, betas)
        shares = variance_shares(dec, panel)
        assert shares.share_chi[17] < 0.1


def test_weak_share_recovery_magnitude():
    # series engineered at population weak share 0.4 come back near 0.4
    spec = preset("benchmark", weak_share=0.4, share_C_weak_series=0.35)
    est = []
    for seed in range(10):
        sim = simulate(spec, 1000, 200, seed=60 + seed)
        panel = _standardized_panel((sim.y - sim.y.mean(0)) / sim.y.std(0))
        fac, basis, selections, betas = _fit_all(panel, 2, 1)
        dec = assemble(panel, fac, basis, selections, betas)
        shares = variance_shares(dec, panel)
        est.append(shares.share_weak[2:10].mean())
    assert 0.25 <= np.mean(est) <= 0.55


def test_chi_mse_decreases_with_size():
    spec = preset("benchmark_nolag")
    mses = {}
    for size in (50, 200):
        vals = []
        for rep in range(10):
            sim = simulate(spec, size, size, seed=700 + rep)
            fac = factors_from_values(sim.y, 2)
            basis = build_lag_matrix(fac.factors, 1)
            sel = select_full_rank_columns(
                population_lag_cov(spec.M, spec.G_bar, 2, 1), 1e-8)
            X = basis.X_full[:, sel]
            beta, _, _, _ = np.linalg.lstsq(X, sim.y[1:], rcond=None)
            vals.append(np.mean((X @ beta - sim.chi[1:]) ** 2))
        mses[size] = np.mean(vals)
    assert mses[200] < mses[50]
