"""End-to-end estimation pipeline over a prepared panel.

One run extracts factors once, then processes series independently:
optional rolling penalty calibration on the calibration split, full-sample
selection at the winning penalty, OLS + HAC inference on the selected
columns, and the weak-factor test.  Series jobs are pure functions of
their inputs, so they can run in worker processes; results merge by
series index and the output is identical for any job count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .decomposition import assemble, variance_shares
from .eigen import extract_factors, factors_from_values
from .inference import infer, weak_factor_test
from .lag_design import apply_mask, build_lag_matrix
from .lasso import (
    CalibrationResult,
    calibrate_from_design,
    penalty_grid,
    select_from_design,
)


@dataclass(frozen=True)
class PipelineSettings:
    r: int
    p: int
    lam: float = None
    calibrate: bool = False
    window: int = 488
    calib_frac: float = 0.8
    grid_size: int = 100
    grid_ratio: float = 1e-3
    stride: int = 1
    bandwidth: object = "auto"
    tail: str = "two-sided"
    tol_rel: float = 1e-10
    jobs: int = 1

    def __post_init__(self):
        if self.lam is None and not self.calibrate:
            raise ConfigError("either a fixed penalty or calibrate-first is required")
        if self.lam is not None and self.calibrate:
            raise ConfigError("a fixed penalty and calibrate-first are mutually exclusive")


@dataclass(frozen=True)
class SeriesEstimate:
    series: int
    penalty: float
    mask: np.ndarray
    labels: tuple
    inference: object
    weak_test: object
    calibration: CalibrationResult


@dataclass(frozen=True)
class EstimateRun:
    factors: object
    basis: object
    series_results: tuple
    decomposition: object
    shares: object


def _calibration_inputs(values, settings):
    calib_len = int(np.floor(settings.calib_frac * values.shape[0]))
    if settings.window > calib_len:
        raise ConfigError(
            f"window={settings.window} exceeds calibration length {calib_len}"
        )
    fac_c = factors_from_values(values[:calib_len], settings.r)
    basis_c = build_lag_matrix(fac_c.factors, settings.p)
    starts = np.arange(0, calib_len - settings.window + 1, settings.stride)
    return calib_len, basis_c, starts


def _run_series_chunk(payload):
    (series_list, basis, y_block, calib, settings) = payload
    out = []
    for pos, series in enumerate(series_list):
        y = y_block[:, pos]
        calibration = None
        if calib is not None:
            basis_c, y_c_block, starts, window, p = calib
            y_c = y_c_block[:, pos]
            grid = penalty_grid(
                basis_c.X_full, y_c, n_grid=settings.grid_size, ratio=settings.grid_ratio
            )
            core = calibrate_from_design(basis_c.X_full, y_c, window - p, starts, grid)
            lam = float(grid[core["opt"]])
            calibration = CalibrationResult(
                penalty_grid=grid,
                mse_per_penalty=core["mse"],
                optimal_penalty=lam,
                optimal_index=core["opt"],
                window_starts=starts,
                selection_incidence=core["incidence"],
                labels=basis_c.labels,
            )
        else:
            lam = float(settings.lam)
        mask, _ = select_from_design(basis, y, lam, tol_rel=settings.tol_rel)
        design = apply_mask(basis, mask)
        result = infer(design.X, y, design.labels,
                       bandwidth=settings.bandwidth, tail=settings.tail)
        out.append(SeriesEstimate(
            series=int(series),
            penalty=lam,
            mask=mask.selected,
            labels=design.labels,
            inference=result,
            weak_test=weak_factor_test(result),
            calibration=calibration,
        ))
    return out


def run_estimate(panel, settings, series=None):
    """Estimate every requested series of a prepared (standardized) panel."""
    if not panel.standardized:
        raise DataError("pipeline requires a standardized panel")
    series_list = list(range(panel.n)) if series is None else [int(s) for s in series]
    fac = extract_factors(panel, settings.r)
    basis = build_lag_matrix(fac.factors, settings.p)
    p = settings.p
    y_all = panel.values[p:]

    calib = None
    if settings.calibrate:
        calib_len, basis_c, starts = _calibration_inputs(panel.values, settings)
        y_calib = panel.values[p:calib_len]
        calib_template = (basis_c, None, starts, settings.window, p)
    jobs = max(1, int(settings.jobs))
    chunks = [c for c in np.array_split(series_list, jobs) if len(c)]

    payloads = []
    for chunk in chunks:
        cols = np.asarray(chunk, dtype=np.int64)
        chunk_calib = None
        if settings.calibrate:
            chunk_calib = (calib_template[0], y_calib[:, cols], starts,
                           settings.window, p)
        payloads.append((cols, basis, y_all[:, cols], chunk_calib, settings))

    if jobs == 1 or len(payloads) == 1:
        results = [r for payload in payloads for r in _run_series_chunk(payload)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for block in pool.map(_run_series_chunk, payloads) for r in block]
    results.sort(key=lambda r: r.series)

    decomposition = None
    shares = None
    if series is None:
        selections = [np.nonzero(r.mask)[0] for r in results]
        betas = [r.inference.beta_hat for r in results]
        decomposition = assemble(panel, fac, basis, selections, betas)
        shares = variance_shares(decomposition, panel)
    return EstimateRun(
        factors=fac,
        basis=basis,
        series_results=tuple(results),
        decomposition=decomposition,
        shares=shares,
    )
