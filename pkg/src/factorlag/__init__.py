"""Distributed-lag factor model estimation.

Workflow: prepare a panel, extract principal-component factors, select a
per-series basis of factor lags with the LASSO (penalty calibrated on
rolling windows), run OLS with HAC standard errors on the selection, and
decompose each series into static common, weak common, and idiosyncratic
parts.  A state-space simulator with exact ground truth drives the Monte
Carlo verification of the whole chain.
"""

__version__ = "0.1.0"

from ._kernels import kernel_engine
from .panel import (
    Panel,
    SeriesMeta,
    apply_tcodes,
    clean_outliers,
    load_csv,
    prepare,
    standardize,
    trim_missing,
    unstandardize,
)
from .eigen import (
    FactorEstimate,
    PCMap,
    SymEigen,
    estimate_num_factors,
    extract_factors,
    factors_from_values,
    pc_map,
    sym_eigen,
)
from .lag_design import (
    LagBasis,
    SelectionMask,
    apply_mask,
    build_lag_matrix,
    gram_rank_check,
    lag_labels,
    select_full_rank_columns,
)
from .lasso import (
    CalibrationResult,
    LassoFit,
    final_select,
    lasso_solve,
    penalty_grid,
    rolling_calibrate,
)
from .inference import (
    InferenceResult,
    WeakFactorTest,
    hac_avar,
    infer,
    ols,
    t_table,
    weak_factor_test,
)
from .decomposition import (
    Decomposition,
    VarianceShares,
    assemble,
    static_cc,
    variance_shares,
    weak_cc,
)
from .simulator import (
    ModelSpec,
    SimulatedPanel,
    StateSpaceModel,
    check_miniphase,
    materialize,
    population_fdl_beta,
    population_lag_cov,
    population_weak_share,
    preset,
    preset_names,
    simulate,
    stationary_state_cov,
    to_panel,
)
from .montecarlo import MonteCarloSummary, monte_carlo
from .pipeline import PipelineSettings, run_estimate

__all__ = [name for name in dir() if not name.startswith("_")]
