"""Stacked lag regressor construction, rank diagnostics, selection masks.

Column labels follow the stable "F{j}_L{l}" contract (factor j, lag l)
used by every downstream report.  With fewer primitive shocks than
factors the stacked design can be singular; the Gram rank check reports
the numerical kernel so selection can avoid it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .eigen import sym_eigen


@dataclass(frozen=True)
class LagBasis:
    """Stacked lag design: row t is (F_t', F_{t-1}', ..., F_{t-p}')."""

    X_full: np.ndarray  # (T - p) x r(p+1)
    p: int
    r: int
    labels: tuple

    @property
    def n_columns(self):
        return self.X_full.shape[1]


@dataclass(frozen=True)
class SelectionMask:
    """Per-variable boolean selection over the r(p+1) lag-basis columns."""

    selected: np.ndarray

    @property
    def indices(self):
        return np.nonzero(self.selected)[0]


@dataclass(frozen=True)
class Design:
    """A column subset of a lag basis, labels preserved in original order."""

    X: np.ndarray
    labels: tuple
    indices: np.ndarray


@dataclass(frozen=True)
class RankReport:
    full_rank: bool
    rank: int
    eigenvalues: np.ndarray
    kernel: np.ndarray  # columns span the numerical kernel; empty when full rank


def lag_labels(r, p):
    """Column labels F{j}_L{l}, lag-major, factors 1-based."""
    return tuple(f"F{j + 1}_L{l}" for l in range(p + 1) for j in range(r))


def label_lag(label):
    """Lag order encoded in a column label."""
    return int(label.rsplit("_L", 1)[1])


def build_lag_matrix(F_hat, p):
    """Stack factor lags 0..p into a (T-p) x r(p+1) design.

    Row i of the result corresponds to source time i + p, so downstream
    regressions must align dependent variables to rows p+1..T of the panel.
    """
    F = np.asarray(F_hat, dtype=np.float64)
    if F.ndim != 2:
        raise DataError("factor matrix must be 2-d")
    T, r = F.shape
    if p < 0:
        raise DataError("lag order must be non-negative")
    if p >= T:
        raise DataError(f"lag order p={p} needs T > p, got T={T}")
    X = np.empty((T - p, r * (p + 1)))
    for l in range(p + 1):
        X[:, l * r:(l + 1) * r] = F[p - l:T - l]
    return LagBasis(X_full=X, p=p, r=r, labels=lag_labels(r, p))


def rank_from_gram(G, tol_rel=1e-10):
    """Rank report for a Gram/covariance matrix at a relative tolerance."""
    eig = sym_eigen(G)
    mu = eig.eigenvalues
    cutoff = tol_rel * max(mu[0], 0.0)
    above = mu > cutoff
    rank = int(above.sum())
    kernel = eig.eigenvectors[:, ~above]
    return RankReport(full_rank=rank == G.shape[0], rank=rank, eigenvalues=mu, kernel=kernel)


def gram_rank_check(X, tol_rel=1e-10):
    """Numerical rank of X'X/rows with an orthonormal kernel basis if deficient."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise DataError("design needs at least one column")
    G = (X.T @ X) / X.shape[0]
    return rank_from_gram(G, tol_rel=tol_rel)


def apply_mask(basis, mask):
    """Select lag-basis columns, keeping original order and labels."""
    selected = np.asarray(mask.selected if isinstance(mask, SelectionMask) else mask, dtype=bool)
    if selected.shape != (basis.n_columns,):
        raise DataError(
            f"mask length {selected.size} does not match {basis.n_columns} columns"
        )
    if not selected.any():
        raise DataError("mask selects no columns")
    idx = np.nonzero(selected)[0]
    labels = tuple(basis.labels[i] for i in idx)
    return Design(X=basis.X_full[:, idx], labels=labels, indices=idx)


def select_full_rank_columns(Sigma, tol_rel=1e-8):
    """Greedy in-order selection of columns whose covariance is full rank.

    Walks columns left to right (so low lags are preferred) and keeps a
    column when its conditional variance given the kept set exceeds
    ``tol_rel`` times its own variance.  Returns kept column indices.
    """
    S = np.asarray(Sigma, dtype=np.float64)
    k = S.shape[0]
    kept = []
    # incremental Cholesky of S[kept, kept]
    L = np.zeros((k, k))
    m = 0
    for j in range(k):
        sjj = S[j, j]
        if sjj <= 0.0:
            continue
        if m == 0:
            cond = sjj
            row = np.empty(0)
        else:
            rhs = S[np.asarray(kept), j]
            row = np.empty(m)
            for i in range(m):
                row[i] = (rhs[i] - L[i, :i] @ row[:i]) / L[i, i]
            cond = sjj - row @ row
        if cond > tol_rel * sjj:
            L[m, :m] = row
            L[m, m] = np.sqrt(cond)
            kept.append(j)
            m += 1
    return np.asarray(kept, dtype=np.int64)
