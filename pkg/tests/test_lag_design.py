import numpy as np
import pytest

from factorlag.errors import DataError
from factorlag.lag_design import (
    apply_mask,
    build_lag_matrix,
    gram_rank_check,
    lag_labels,
    label_lag,
    rank_from_gram,
    select_full_rank_columns,
)
from factorlag.simulator import (
    population_lag_cov,
    preset,
    simulate,
    stationary_state_cov,
)


def test_labels_and_lag_parse():
    labels = lag_labels(2, 1)
    assert labels == ("F1_L0", "F2_L0", "F1_L1", "F2_L1")
    assert label_lag("F7_L24") == 24


def test_no_lags_is_factor_matrix():
    F = np.arange(12.0).reshape(6, 2)
    basis = build_lag_matrix(F, 0)
    np.testing.assert_array_equal(basis.X_full, F)
    assert basis.labels == ("F1_L0", "F2_L0")


def test_hand_constructed_single_lag():
    F = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])  # rows a, b, c
    basis = build_lag_matrix(F, 1)
    np.testing.assert_array_equal(basis.X_full, [[3, 4, 1, 2], [5, 6, 3, 4]])


def test_section4_dimensions():
    F = np.random.default_rng(0).standard_normal((764, 8))
    basis = build_lag_matrix(F, 24)
    assert basis.X_full.shape == (740, 200)
    assert basis.labels[:2] == ("F1_L0", "F2_L0")
    assert basis.labels[-1] == "F8_L24"


def test_shift_consistency():
    F = np.random.default_rng(1).standard_normal((40, 3))
    basis = build_lag_matrix(F, 4)
    r = 3
    for l in range(5):
        for j in range(r):
            col = basis.X_full[:, l * r + j]
            np.testing.assert_array_equal(col, F[4 - l:40 - l, j])


def test_build_validation():
    F = np.zeros((5, 2))
    with pytest.raises(DataError):
        build_lag_matrix(F, 5)
    with pytest.raises(DataError):
        build_lag_matrix(F, -1)


def test_gram_full_rank_orthonormal():
    Q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((50, 5)))
    report = gram_rank_check(Q * np.sqrt(50))
    assert report.full_rank
    assert report.rank == 5


def test_gram_duplicate_column_kernel():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(100)
    X = np.column_stack([x, x])
    report = gram_rank_check(X)
    assert not report.full_rank and report.rank == 1
    kern = report.kernel[:, 0]
    target = np.array([1.0, -1.0]) / np.sqrt(2.0)
    assert abs(abs(kern @ target) - 1.0) < 1e-10


def _subspace_angle(vec, basis):
    if basis.size == 0:
        return np.pi / 2
    proj = basis @ (basis.T @ vec)
    return np.arccos(np.clip(np.linalg.norm(proj) / np.linalg.norm(vec), 0.0, 1.0))


def test_example1_population_kernel_direction():
    # population Var(x_t) of the singular VAR(1) instance: the direction
    # implied by v'(I - A) with v _|_ b annihilates the stacked state
    spec = preset("example1")
    sigma = stationary_state_cov(spec.M, spec.G_bar)
    # brute-force Lyapunov oracle: partial sums of M^k GG' M'^k
    acc = np.zeros_like(sigma)
    term = spec.G_bar @ spec.G_bar.T
    Mk = np.eye(4)
    for _ in range(200):
        acc += Mk @ term @ Mk.T
        Mk = spec.M @ Mk
    np.testing.assert_allclose(sigma, acc, atol=1e-12)

    v = np.array([0.0, 1.0])  # v _|_ b = (1, 0)
    A = np.diag([0.5, 0.5])
    np.testing.assert_allclose(v @ (np.eye(2) - A), [0.0, 0.5])
    direction = np.concatenate([v, -A.T @ v])  # (0, 1, 0, -0.5)
    assert direction @ sigma @ direction == pytest.approx(0.0, abs=1e-12)

    report = rank_from_gram(sigma, tol_rel=1e-10)
    assert not report.full_rank
    assert _subspace_angle(direction / np.linalg.norm(direction), report.kernel) < 1e-6


def test_sample_gram_deficient_when_q_below_r():
    sim = simulate(preset("example1"), 10000, 4, seed=4)
    basis = build_lag_matrix(sim.F, 1)
    report = gram_rank_check(basis.X_full, tol_rel=1e-10)
    assert not report.full_rank
    assert report.kernel.shape[1] >= 1


def test_sample_gram_full_rank_when_q_equals_r():
    sim = simulate(preset("benchmark_q2"), 10000, 4, seed=5)
    basis = build_lag_matrix(sim.F, 1)
    report = gram_rank_check(basis.X_full, tol_rel=1e-10)
    assert report.full_rank


def test_apply_mask_all_true_and_lag0():
    F = np.random.default_rng(6).standard_normal((30, 2))
    basis = build_lag_matrix(F, 2)
    full = apply_mask(basis, np.ones(6, dtype=bool))
    np.testing.assert_array_equal(full.X, basis.X_full)
    lag0 = np.zeros(6, dtype=bool)
    lag0[:2] = True
    design = apply_mask(basis, lag0)
    np.testing.assert_array_equal(design.X, F[2:])
    assert design.labels == ("F1_L0", "F2_L0")


def test_apply_mask_validation():
    F = np.random.default_rng(7).standard_normal((20, 2))
    basis = build_lag_matrix(F, 1)
    with pytest.raises(DataError):
        apply_mask(basis, np.zeros(4, dtype=bool))
    with pytest.raises(DataError):
        apply_mask(basis, np.ones(3, dtype=bool))


def test_rank_monotone_in_columns():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((60, 6))
    X[:, 3] = X[:, 0]  # make one duplicate
    prev = 0
    for k in range(1, 7):
        rank = gram_rank_check(X[:, :k]).rank
        assert rank >= prev
        prev = rank


def test_select_full_rank_columns():
    np.testing.assert_array_equal(select_full_rank_columns(np.eye(5)), np.arange(5))
    spec = preset("benchmark")
    lagcov = population_lag_cov(spec.M, spec.G_bar, 2, 1)
    sel = select_full_rank_columns(lagcov, tol_rel=1e-8)
    assert sel.tolist() == [0, 1, 2]
