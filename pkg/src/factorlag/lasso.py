"""LASSO solver and rolling-window penalty calibration.

The solver is cyclic coordinate descent on the Gram system for the
objective (1/2T)||y - X b||^2 + lambda ||b||_1.  Calibration rolls a
fixed-length window through the calibration split, holds out the last
observation of each window, and picks the penalty with the lowest average
one-step squared error; the winning penalty then selects each variable's
lag basis on the full sample.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, DataError, NumericalError
from ._kernels import cd_lasso_gram, cd_lasso_path
from .eigen import factors_from_values
from .lag_design import SelectionMask, build_lag_matrix, gram_rank_check

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class LassoFit:
    """Solution of one penalized regression (no intercept; data standardized)."""

    coefficients: np.ndarray
    penalty: float
    active_set: np.ndarray
    sweeps: int


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of the rolling-window penalty search for one series.

    ``selection_incidence`` is the window x column boolean matrix of
    active sets at the optimal penalty (the Figure-1 style display).
    """

    penalty_grid: np.ndarray
    mse_per_penalty: np.ndarray
    optimal_penalty: float
    optimal_index: int
    window_starts: np.ndarray
    selection_incidence: np.ndarray
    labels: tuple


def kkt_violation(X, y, beta, lam):
    """Largest violation of the LASSO stationarity conditions.

    gradient_j = X_j'(y - X beta)/T must equal lam in magnitude on the
    active set and be at most lam off it.
    """
    T = X.shape[0]
    grad = X.T @ (y - X @ beta) / T
    active = beta != 0.0
    worst = 0.0
    if active.any():
        worst = np.abs(np.abs(grad[active]) - lam).max()
    if (~active).any():
        worst = max(worst, max(np.abs(grad[~active]).max() - lam, 0.0))
    return worst


def _solve_gram(G, c, lam, beta, g, max_sweeps, tol):
    sweeps, delta = cd_lasso_gram(G, c, lam, beta, g, max_sweeps, tol)
    if delta >= tol:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"(last max coefficient change {delta:.3e})"
        )
    return sweeps


def lasso_solve(X, y, lam, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL, beta0=None):
    """Solve one LASSO problem by cyclic coordinate descent.

    Converges when the largest coefficient change in a sweep drops below
    ``tol``; raises ConvergenceError (with the residual KKT violation)
    otherwise.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if lam < 0:
        raise ConfigError("penalty must be non-negative")
    T = X.shape[0]
    G = np.ascontiguousarray(X.T @ X / T)
    c = X.T @ y / T
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=np.float64)
    g = G @ beta
    try:
        sweeps = _solve_gram(G, c, lam, beta, g, max_sweeps, tol)
    except ConvergenceError as exc:
        raise ConvergenceError(f"{exc}; KKT violation {kkt_violation(X, y, beta, lam):.3e}") from None
    return LassoFit(
        coefficients=beta,
        penalty=float(lam),
        active_set=np.nonzero(beta)[0],
        sweeps=sweeps,
    )


def penalty_grid(X, y, n_grid=100, ratio=1e-3):
    """Descending log-spaced penalties from lambda_max down to ratio * lambda_max.

    lambda_max = max_j |X_j'y|/T is the smallest penalty with an all-zero
    solution.
    """
    if n_grid < 2:
        raise ConfigError("n_grid must be at least 2")
    if not 0.0 < ratio < 1.0:
        raise ConfigError("ratio must be in (0, 1)")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lam_max = np.abs(X.T @ y).max() / X.shape[0]
    if lam_max <= 0.0:
        raise NumericalError("response is orthogonal to every column; empty penalty grid")
    return lam_max * ratio ** np.linspace(0.0, 1.0, n_grid)


def _check_monotone_sparsity(counts, context):
    # counts indexed by descending penalty: sizes should be non-decreasing
    drops = int(np.sum(np.diff(counts) < 0))
    if drops:
        warnings.warn(
            f"{context}: active-set size decreased {drops} time(s) along the descending "
            "penalty grid (KKT boundary ties)",
            RuntimeWarning,
            stacklevel=3,
        )


def lasso_path_gram(G, c, grid, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL):
    """Continuation path of solutions over a descending penalty grid."""
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    betas = np.empty((len(grid), G.shape[0]))
    deltas = np.empty(len(grid))
    cd_lasso_path(np.ascontiguousarray(G), np.ascontiguousarray(c),
                  grid, max_sweeps, tol, betas, deltas)
    worst = float(deltas.max())
    if worst >= tol:
        raise ConvergenceError(
            f"path solve did not converge at some penalty "
            f"(last max coefficient change {worst:.3e})"
        )
    return betas


def rolling_calibrate(
    panel,
    series,
    r,
    p,
    window,
    calib_frac=0.8,
    grid=None,
    grid_size=100,
    grid_ratio=1e-3,
    stride=1,
    refit_factors_per_window=False,
    max_sweeps=DEFAULT_MAX_SWEEPS,
    tol=DEFAULT_TOL,
):
    """Rolling-window penalty calibration for one series.

    Factors are extracted once by PCA on the whole calibration split
    (first ``calib_frac`` of the sample).  Each window fits the LASSO path
    on the window minus its last aligned row and predicts that held-out
    response (a nowcast: the held-out row's regressors use factor values
    at the held-out time).  ``refit_factors_per_window`` re-estimates the
    factors inside every window for sensitivity analysis.
    """
    if not panel.standardized:
        raise DataError("rolling_calibrate needs a standardized panel")
    if not 0.0 < calib_frac <= 1.0:
        raise ConfigError("calib_frac must be in (0, 1]")
    calib_len = int(np.floor(calib_frac * panel.T))
    if window > calib_len:
        raise ConfigError(f"window={window} exceeds calibration length {calib_len}")
    if window < p + 2:
        raise ConfigError(f"window={window} too small for lag order p={p}")
    if stride < 1:
        raise ConfigError("stride must be at least 1")

    Y_cal = panel.values[:calib_len]
    y_raw = Y_cal[:, series]
    starts = np.arange(0, calib_len - window + 1, stride)

    if grid is None or refit_factors_per_window:
        fac = factors_from_values(Y_cal, r)
        basis_all = build_lag_matrix(fac.factors, p)
        if grid is None:
            grid = penalty_grid(basis_all.X_full, y_raw[p:], n_grid=grid_size, ratio=grid_ratio)
    grid = np.asarray(grid, dtype=np.float64)

    if refit_factors_per_window:
        return _calibrate_refit(panel, series, r, p, window, starts, grid, max_sweeps, tol)

    fac = factors_from_values(Y_cal, r)
    basis = build_lag_matrix(fac.factors, p)
    result = calibrate_from_design(
        basis.X_full, y_raw[p:], window - p, starts, grid, max_sweeps=max_sweeps, tol=tol
    )
    _check_monotone_sparsity(result["active_counts"], f"series {series} calibration")
    return CalibrationResult(
        penalty_grid=grid,
        mse_per_penalty=result["mse"],
        optimal_penalty=float(grid[result["opt"]]),
        optimal_index=int(result["opt"]),
        window_starts=starts,
        selection_incidence=result["incidence"],
        labels=basis.labels,
    )


def calibrate_from_design(X, y, rows_per_window, starts, grid, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL):
    """Core rolling protocol on an aligned design/response pair.

    ``X`` and ``y`` are already lag-aligned; window ``w`` uses design rows
    [w, w + rows_per_window), fitting on all but the last and predicting
    it.  The Gram system slides between consecutive starts instead of
    being rebuilt; within a window the path is solved by continuation
    down the descending grid.  Returns per-penalty MSE, the argmin index,
    the active incidence at that penalty, and active-set counts for
    diagnostics.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n_rows, k = X.shape
    L = rows_per_window - 1  # fit rows per window; last row is held out
    if L < 1:
        raise ConfigError("window leaves no rows to fit after the holdout")
    if starts[-1] + rows_per_window > n_rows:
        raise ConfigError("window extends past the design")

    sqerr = np.empty((len(starts), len(grid)))
    incidence = np.zeros((len(starts), len(grid), k), dtype=bool)

    Gsum = None
    csum = None
    prev_start = None
    for wi, w in enumerate(starts):
        if Gsum is None:
            Xf = X[w:w + L]
            Gsum = Xf.T @ Xf
            csum = Xf.T @ y[w:w + L]
        else:
            for s in range(prev_start, w):
                x_out, x_in = X[s], X[s + L]
                Gsum += np.outer(x_in, x_in) - np.outer(x_out, x_out)
                csum += x_in * y[s + L] - x_out * y[s]
        prev_start = w
        G = np.ascontiguousarray(Gsum / L)
        c = csum / L
        x_hold = X[w + L]
        y_hold = y[w + L]

        betas = np.empty((len(grid), k))
        deltas = np.empty(len(grid))
        cd_lasso_path(G, np.ascontiguousarray(c), np.ascontiguousarray(grid),
                      max_sweeps, tol, betas, deltas)
        if deltas.max() >= tol:
            raise ConvergenceError(
                f"window at start {w}: path solve did not converge "
                f"(last max coefficient change {deltas.max():.3e})"
            )
        sqerr[wi] = (y_hold - betas @ x_hold) ** 2
        incidence[wi] = betas != 0.0

    mse = sqerr.mean(axis=0)
    opt = int(np.argmin(mse))
    counts = incidence.sum(axis=2).sum(axis=0)
    return {
        "mse": mse,
        "opt": opt,
        "incidence": incidence[:, opt, :],
        "active_counts": counts,
    }


def _calibrate_refit(panel, series, r, p, window, starts, grid, max_sweeps, tol):
    # sensitivity path: factors re-estimated inside each window
    sqerr = np.empty((len(starts), len(grid)))
    incidence = None
    labels = None
    for wi, w in enumerate(starts):
        Yw = panel.values[w:w + window]
        fac = factors_from_values(Yw, r)
        basis = build_lag_matrix(fac.factors, p)
        labels = basis.labels
        yw = Yw[p:, series]
        Xf, yf = basis.X_full[:-1], yw[:-1]
        G = np.ascontiguousarray(Xf.T @ Xf / len(yf))
        c = Xf.T @ yf / len(yf)
        if incidence is None:
            incidence = np.zeros((len(starts), len(grid), basis.n_columns), dtype=bool)
        beta = np.zeros(basis.n_columns)
        g = G @ beta
        for gi, lam in enumerate(grid):
            _solve_gram(G, c, lam, beta, g, max_sweeps, tol)
            sqerr[wi, gi] = (yw[-1] - basis.X_full[-1] @ beta) ** 2
            incidence[wi, gi] = beta != 0.0
    mse = sqerr.mean(axis=0)
    opt = int(np.argmin(mse))
    _check_monotone_sparsity(incidence.sum(axis=2).sum(axis=0), f"series {series} calibration")
    return CalibrationResult(
        penalty_grid=grid,
        mse_per_penalty=mse,
        optimal_penalty=float(grid[opt]),
        optimal_index=opt,
        window_starts=starts,
        selection_incidence=incidence[:, opt, :],
        labels=labels,
    )


def select_from_design(basis, y, lam, tol_rel=1e-10, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL):
    """Full-sample LASSO selection with a rank-safety fallback.

    The mask is the active set of the fit at ``lam``; if the selected
    columns are numerically rank deficient, the smallest-magnitude
    coefficient is dropped until the Gram check passes.
    """
    fit = lasso_solve(basis.X_full, y, lam, max_sweeps=max_sweeps, tol=tol)
    active = list(fit.active_set)
    if not active:
        raise NumericalError(
            f"penalty {lam:g} selects no columns; use a smaller penalty"
        )
    while active:
        report = gram_rank_check(basis.X_full[:, active], tol_rel=tol_rel)
        if report.full_rank:
            break
        smallest = min(active, key=lambda j: abs(fit.coefficients[j]))
        active.remove(smallest)
    if not active:
        raise NumericalError("rank fallback removed every selected column")
    mask = np.zeros(basis.n_columns, dtype=bool)
    mask[active] = True
    return SelectionMask(selected=mask), fit


def final_select(panel, series, r, p, lam, tol_rel=1e-10, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL):
    """Whole-sample selection of a series' lag basis at a calibrated penalty."""
    if not panel.standardized:
        raise DataError("final_select needs a standardized panel")
    fac = factors_from_values(panel.values, r)
    basis = build_lag_matrix(fac.factors, p)
    y = panel.values[p:, series]
    mask, fit = select_from_design(basis, y, lam, tol_rel=tol_rel, max_sweeps=max_sweeps, tol=tol)
    return mask, fit
