"""OLS on the selected lag basis with HAC standard errors.

Because the regression residual is serially correlated under the factor
model, the score long-run variance is estimated by Newey-West with a
Bartlett kernel; the reference distribution is normal (asymptotic), and
standard errors scale as sqrt(avar_jj / T).
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, DataError, NumericalError, RankDeficiencyError
from ._kernels import bartlett_lrv
from .lag_design import label_lag

NO_WEAK_CANDIDATES = "no weak-factor candidates"

_STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "."))


@dataclass(frozen=True)
class InferenceResult:
    """Coefficients, HAC variance, and per-coefficient test statistics."""

    beta_hat: np.ndarray
    residuals: np.ndarray
    avar: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    stars: tuple
    labels: tuple
    T_eff: int
    bandwidth: int
    tail: str


@dataclass(frozen=True)
class WeakFactorTest:
    """Wald test of all lag > 0 coefficients being zero."""

    statistic: float
    dof: int
    p_value: float
    status: str = "ok"


def stars_for(p):
    for level, mark in _STAR_LEVELS:
        if p < level:
            return mark
    return ""


def ols(X, y):
    """Least-squares fit via a stable factorization.

    Returns (beta_hat, residuals).  A numerically singular design is
    rejected; run gram_rank_check and tighten the selection mask instead.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DataError("design and response row counts differ")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise RankDeficiencyError(
            f"design is numerically rank {rank} < {X.shape[1]}; "
            "run gram_rank_check and reduce the selection mask",
            rank=int(rank),
        )
    return beta, y - X @ beta


def auto_bandwidth(T_eff):
    """Newey-West automatic truncation lag floor(4 (T/100)^(2/9))."""
    return int(np.floor(4.0 * (T_eff / 100.0) ** (2.0 / 9.0)))


def hac_avar(X, residuals, bandwidth="auto"):
    """HAC asymptotic variance Gamma_x^{-1} Omega Gamma_x^{-1}.

    Omega is the Bartlett-kernel long-run variance of the scores
    x_t * resid_t; ``bandwidth=0`` degenerates to the White form.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    residuals = np.asarray(residuals, dtype=np.float64)
    T = X.shape[0]
    bw = auto_bandwidth(T) if bandwidth == "auto" else int(bandwidth)
    if bw < 0:
        raise ConfigError("bandwidth must be non-negative")
    if bw >= T:
        raise ConfigError(f"bandwidth {bw} must be below T_eff={T}")
    gamma_x = X.T @ X / T
    scores = np.ascontiguousarray(X * residuals[:, None])
    omega = bartlett_lrv(scores, bw)
    try:
        inner = np.linalg.solve(gamma_x, omega)
        avar = np.linalg.solve(gamma_x, inner.T).T
    except np.linalg.LinAlgError:
        raise NumericalError("Gamma_x is singular; run gram_rank_check on the design") from None
    return 0.5 * (avar + avar.T)


def infer(X, y, labels, bandwidth="auto", tail="two-sided"):
    """OLS + HAC inference on a selected design.

    ``tail='two-sided'`` reports 2 Phi(-|t|); ``tail='one-sided'`` reports
    Phi(-|t|) for parity with single-tail report conventions.
    """
    if tail not in ("two-sided", "one-sided"):
        raise ConfigError("tail must be 'two-sided' or 'one-sided'")
    if len(labels) != X.shape[1]:
        raise DataError("one label per design column required")
    beta, resid = ols(X, y)
    T = X.shape[0]
    bw = auto_bandwidth(T) if bandwidth == "auto" else int(bandwidth)
    avar = hac_avar(X, resid, bandwidth=bw)
    se = np.sqrt(np.maximum(np.diag(avar), 0.0) / T)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p = 2.0 * stats.norm.sf(np.abs(t))
    if tail == "one-sided":
        p = 0.5 * p
    return InferenceResult(
        beta_hat=beta,
        residuals=resid,
        avar=avar,
        se=se,
        t_stats=t,
        p_values=p,
        stars=tuple(stars_for(pv) for pv in p),
        labels=tuple(labels),
        T_eff=T,
        bandwidth=bw,
        tail=tail,
    )


def t_table(result):
    """Report rows (label, estimate, std error, t value, p value, stars)."""
    return [
        (lab, float(b), float(s), float(t), float(p), st)
        for lab, b, s, t, p, st in zip(
            result.labels, result.beta_hat, result.se,
            result.t_stats, result.p_values, result.stars,
        )
    ]


def weak_factor_test(result):
    """Wald test for weak factors: joint significance of all lag > 0 terms."""
    lag_idx = np.array([i for i, lab in enumerate(result.labels) if label_lag(lab) > 0])
    if lag_idx.size == 0:
        return WeakFactorTest(statistic=np.nan, dof=0, p_value=np.nan, status=NO_WEAK_CANDIDATES)
    b = result.beta_hat[lag_idx]
    V = result.avar[np.ix_(lag_idx, lag_idx)]
    try:
        w = float(result.T_eff * (b @ np.linalg.solve(V, b)))
    except np.linalg.LinAlgError:
        raise NumericalError("restricted HAC variance is singular in the weak-factor test") from None
    w = max(w, 0.0)
    return WeakFactorTest(
        statistic=w,
        dof=int(lag_idx.size),
        p_value=float(stats.chi2.sf(w, lag_idx.size)),
    )
