"""Symmetric eigendecomposition and normalized principal components.

The principal-component map compresses an n-vector to r normalized
components with identity variance under the given covariance.  Eigenvector
signs are fixed so the leading r x r block of the loading matrix has a
positive diagonal, which makes factor extraction deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, RankDeficiencyError


@dataclass(frozen=True)
class SymEigen:
    """Full symmetric eigendecomposition, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]


@dataclass(frozen=True)
class PCMap:
    """Normalized principal-component map of a covariance matrix.

    ``K`` (r x n) sends an observation vector to components with identity
    variance under the covariance; ``loadings`` (n x r) is its right
    inverse on the component space.
    """

    K: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class FactorEstimate:
    """Estimated factors (T x r), loadings (n x r), and the map that made them."""

    factors: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    K: np.ndarray


def sym_eigen(A):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``A`` is symmetrized as (A + A')/2 before solving; asymmetry beyond
    1e-10 (relative to the largest entry) is rejected.  Descending order
    breaks ties by the solver's original index order.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError("sym_eigen needs a square matrix")
    if not np.isfinite(A).all():
        raise DataError("matrix contains non-finite entries")
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.T).max() > 1e-10 * scale:
        raise DataError("matrix is not symmetric within 1e-10")
    w, v = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-w, kind="stable")
    return SymEigen(eigenvalues=w[order], eigenvectors=v[:, order])


def pc_map(Gamma, r):
    """Normalized principal-component map of covariance ``Gamma``.

    K = M^{-1/2} P with P the top r orthonormal row eigenvectors and M the
    diagonal of the top r eigenvalues, so K Gamma K' = I_r.  Signs are
    fixed by a positive diagonal of the leading r x r loading block; a
    diagonal entry of exactly zero falls back to the sign of the first
    nonzero entry of that eigenvector.
    """
    Gamma = np.asarray(Gamma, dtype=np.float64)
    n = Gamma.shape[0]
    if not 1 <= r <= n:
        raise DataError(f"need 1 <= r <= {n}, got r={r}")
    eig = sym_eigen(Gamma)
    mu = eig.eigenvalues
    tol = 1e-12 * max(mu[0], 0.0)
    if mu[r - 1] <= tol:
        num_rank = int(np.sum(mu > tol))
        raise RankDeficiencyError(
            f"covariance numerically rank {num_rank} < r={r}", rank=num_rank
        )
    V = eig.eigenvectors[:, :r].copy()
    for j in range(r):
        pivot = V[j, j]
        if pivot == 0.0:
            nz = np.nonzero(V[:, j])[0]
            pivot = V[nz[0], j] if nz.size else 1.0
        if pivot < 0.0:
            V[:, j] = -V[:, j]
    m = mu[:r]
    K = V.T / np.sqrt(m)[:, None]
    loadings = V * np.sqrt(m)[None, :]
    return PCMap(K=K, loadings=loadings, eigenvalues=m.copy())


def factors_from_values(values, r):
    """Principal-component factors of a zero-mean T x n value matrix.

    The covariance uses denominator T with no re-centering; the caller is
    responsible for prior standardization.
    """
    Y = np.asarray(values, dtype=np.float64)
    T, n = Y.shape
    if r > min(n, T):
        raise DataError(f"r={r} exceeds min(n, T)={min(n, T)}")
    Gamma = (Y.T @ Y) / T
    pc = pc_map(Gamma, r)
    F = Y @ pc.K.T
    return FactorEstimate(factors=F, loadings=pc.loadings, eigenvalues=pc.eigenvalues, K=pc.K)


def extract_factors(panel, r):
    """Normalized principal-component factors of a standardized panel."""
    if not panel.standardized:
        raise DataError("extract_factors needs a standardized panel")
    return factors_from_values(panel.values, r)


def estimate_num_factors(panel_or_values, r_max):
    """Select the factor count by the ICp2 information criterion.

    ICp2(r) = log V(r) + r ((n+T)/(nT)) log(min(n,T)), with V(r) the mean
    squared residual after removing r principal components; r = 0 is
    admitted.  Returns (argmin r, full criterion path over r = 0..r_max).
    """
    values = getattr(panel_or_values, "values", panel_or_values)
    Y = np.asarray(values, dtype=np.float64)
    T, n = Y.shape
    if r_max < 1:
        raise DataError("r_max must be at least 1")
    if r_max > min(n, T) / 2:
        raise DataError(f"r_max={r_max} exceeds min(n, T)/2 = {min(n, T) / 2:g}")
    Gamma = (Y.T @ Y) / T
    mu = sym_eigen(Gamma).eigenvalues
    total = mu.sum()
    penalty = (n + T) / (n * T) * np.log(min(n, T))
    ic = np.empty(r_max + 1)
    for r in range(r_max + 1):
        v_r = max((total - mu[:r].sum()) / n, 1e-300)
        ic[r] = np.log(v_r) + r * penalty
    return int(np.argmin(ic)), ic
