"""Both kernel engines must compute the same quantities."""

import numpy as np
import pytest

from factorlag import _kernels
from factorlag._kernels import _NUMPY_IMPL, kernel_engine

try:
    _NUMBA_IMPL = _kernels._build_numba_impl()
except ImportError:  # pragma: no cover
    _NUMBA_IMPL = None

ENGINES = [("numpy", _NUMPY_IMPL)]
if _NUMBA_IMPL is not None:
    ENGINES.append(("numba", _NUMBA_IMPL))


def _problem(seed, T=150, k=20):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, k))
    beta = np.zeros(k)
    beta[:4] = (1.5, -0.8, 0.4, 0.2)
    y = X @ beta + rng.standard_normal(T)
    G = np.ascontiguousarray(X.T @ X / T)
    c = X.T @ y / T
    return G, c


def test_engine_names():
    assert kernel_engine() in ("numba", "numpy")


@pytest.mark.parametrize("lam", [0.0, 0.05, 0.3])
def test_cd_lasso_gram_engines_agree(lam):
    G, c = _problem(3)
    results = {}
    for name, impl in ENGINES:
        beta = np.zeros(G.shape[0])
        g = np.zeros(G.shape[0])
        sweeps, delta = impl["cd_lasso_gram"](G, c, lam, beta, g, 10_000, 1e-10)
        assert delta < 1e-10
        np.testing.assert_allclose(g, G @ beta, atol=1e-10)
        results[name] = beta
    if len(results) == 2:
        np.testing.assert_allclose(results["numba"], results["numpy"], atol=1e-9)


def test_cd_lasso_path_engines_agree():
    G, c = _problem(11)
    lam_max = np.abs(c).max()
    grid = lam_max * (1e-3 ** np.linspace(0, 1, 25))
    results = {}
    for name, impl in ENGINES:
        betas = np.empty((len(grid), G.shape[0]))
        deltas = np.empty(len(grid))
        impl["cd_lasso_path"](G, c, grid, 10_000, 1e-10, betas, deltas)
        assert deltas.max() < 1e-10
        results[name] = betas
    if len(results) == 2:
        np.testing.assert_allclose(results["numba"], results["numpy"], atol=1e-8)


def test_path_matches_single_solves():
    G, c = _problem(7)
    lam_max = np.abs(c).max()
    grid = lam_max * (1e-3 ** np.linspace(0, 1, 12))
    betas = np.empty((len(grid), G.shape[0]))
    deltas = np.empty(len(grid))
    _kernels.cd_lasso_path(G, c, grid, 10_000, 1e-12, betas, deltas)
    for gi, lam in enumerate(grid):
        beta = np.zeros(G.shape[0])
        g = np.zeros(G.shape[0])
        _kernels.cd_lasso_gram(G, c, lam, beta, g, 10_000, 1e-12)
        np.testing.assert_allclose(betas[gi], beta, atol=1e-9)


def test_bartlett_lrv_against_direct_formula():
    rng = np.random.default_rng(0)
    S = rng.standard_normal((200, 4))
    bw = 5
    expected = S.T @ S
    for j in range(1, bw + 1):
        w = 1.0 - j / (bw + 1.0)
        gj = S[j:].T @ S[:-j]
        expected += w * (gj + gj.T)
    expected /= S.shape[0]
    for name, impl in ENGINES:
        got = impl["bartlett_lrv"](np.ascontiguousarray(S), bw)
        np.testing.assert_allclose(got, expected, atol=1e-12, err_msg=name)


def test_linear_recursion_and_ar1_filter():
    rng = np.random.default_rng(5)
    M = np.array([[0.5, 0.1], [0.0, 0.3]])
    impulses = rng.standard_normal((50, 2))
    x = np.zeros(2)
    expected = np.empty_like(impulses)
    for t in range(50):
        x = M @ x + impulses[t]
        expected[t] = x
    rho = np.array([0.5, -0.3, 0.8])
    u = rng.standard_normal((60, 3))
    prev = np.zeros(3)
    exp_ar = np.empty_like(u)
    for t in range(60):
        prev = rho * prev + u[t]
        exp_ar[t] = prev
    for name, impl in ENGINES:
        got = impl["linear_recursion"](M, impulses, np.zeros(2))
        np.testing.assert_allclose(got, expected, atol=1e-12, err_msg=name)
        got_ar = impl["ar1_filter"](rho, u)
        np.testing.assert_allclose(got_ar, exp_ar, atol=1e-12, err_msg=name)


def test_cd_handles_exactly_singular_gram():
    # duplicated column: Gram singular; solver must still satisfy KKT
    rng = np.random.default_rng(9)
    X = rng.standard_normal((120, 6))
    X = np.hstack([X, X[:, :1]])
    y = X[:, 0] + 0.5 * X[:, 1] + 0.1 * rng.standard_normal(120)
    T = X.shape[0]
    G = np.ascontiguousarray(X.T @ X / T)
    c = X.T @ y / T
    for name, impl in ENGINES:
        beta = np.zeros(7)
        g = np.zeros(7)
        sweeps, delta = impl["cd_lasso_gram"](G, c, 0.05, beta, g, 50_000, 1e-9)
        assert delta < 1e-9, name
        grad = c - G @ beta
        active = beta != 0.0
        assert np.all(np.abs(grad[active]) <= 0.05 + 1e-6), name
        assert np.all(np.abs(grad[~active]) <= 0.05 + 1e-6), name
