"""Canonical decomposition y = C + e_chi + xi on the estimation sample.

chi is the fitted distributed-lag common component, C its projection on
the contemporaneous factors, e_chi the weak remainder and xi the
idiosyncratic residual.  The identities C + e_chi + xi = y and
e_chi _|_ F hold by construction: e_chi is a least-squares residual
against the factor columns.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Decomposition:
    """All four components on the lag-aligned sample (T_eff x n)."""

    chi_hat: np.ndarray
    C_hat: np.ndarray
    e_chi_hat: np.ndarray
    xi_hat: np.ndarray
    loadings: np.ndarray      # n x r projection coefficients of chi on F
    series_ids: tuple
    time_index: tuple


@dataclass(frozen=True)
class VarianceShares:
    """Per-series variance fractions of each component.

    Shares are sample-variance ratios and need not sum to one in finite
    samples; the C/e_chi and chi/xi cross-covariances are carried so the
    gap is auditable.
    """

    series_ids: tuple
    share_C: np.ndarray
    share_weak: np.ndarray
    share_chi: np.ndarray
    share_xi: np.ndarray
    cross_C_weak: np.ndarray
    cross_chi_xi: np.ndarray


def static_cc(panel, factors):
    """Static common component: loadings of y on the factors.

    Since the factors have identity sample variance the OLS loadings
    coincide with the principal-component loadings.  Returns
    (C_hat, Lambda_hat) on the full factor sample.
    """
    values = getattr(panel, "values", panel)
    F = factors.factors
    if F.shape[1] < 1:
        raise DataError("at least one factor required")
    if F.shape[0] != values.shape[0]:
        raise DataError("factors and panel cover different samples")
    lam, _, _, _ = np.linalg.lstsq(F, values, rcond=None)
    return F @ lam, lam.T


def weak_cc(chi_hat, C_hat):
    """Weak common component: elementwise chi - C."""
    chi_hat = np.asarray(chi_hat)
    C_hat = np.asarray(C_hat)
    if chi_hat.shape != C_hat.shape:
        raise DataError(f"shape mismatch: {chi_hat.shape} vs {C_hat.shape}")
    return chi_hat - C_hat


def assemble(panel, factors, basis, selections, betas):
    """Assemble the decomposition from per-series selected-basis fits.

    ``selections[i]`` holds the selected column indices of ``basis`` for
    series i and ``betas[i]`` the matching OLS coefficients.  All parts
    live on rows p+1..T of the panel.  C is the in-sample projection of
    chi on the lag-0 factors, which makes e_chi exactly orthogonal to
    every factor; when a selection contains the whole lag-0 block this
    equals the static loadings of y itself.
    """
    p = basis.p
    y_eff = panel.values[p:]
    F_eff = factors.factors[p:]
    T_eff, n = y_eff.shape
    if len(selections) != n or len(betas) != n:
        raise DataError("one selection and one coefficient vector per series required")
    chi = np.empty((T_eff, n))
    for i, (idx, beta) in enumerate(zip(selections, betas)):
        chi[:, i] = basis.X_full[:, idx] @ beta
    # the projection is taken around the subsample means so the weak
    # remainder has exactly zero sample covariance with every factor
    F_c = F_eff - F_eff.mean(axis=0)
    lam, _, _, _ = np.linalg.lstsq(F_c, chi - chi.mean(axis=0), rcond=None)
    C = chi.mean(axis=0) + F_c @ lam
    return Decomposition(
        chi_hat=chi,
        C_hat=C,
        e_chi_hat=chi - C,
        xi_hat=y_eff - chi,
        loadings=lam.T,
        series_ids=panel.series_ids,
        time_index=panel.time_index[p:],
    )


def variance_shares(decomp, panel):
    """Sample-variance fraction of each component, per series."""
    values = getattr(panel, "values", panel)
    y_eff = values[-decomp.chi_hat.shape[0]:]
    var_y = y_eff.var(axis=0)
    if np.any(var_y <= 0):
        raise DataError("a series has zero variance on the estimation sample")

    def _center(a):
        return a - a.mean(axis=0)

    cC, ce, cchi, cxi = map(_center, (decomp.C_hat, decomp.e_chi_hat, decomp.chi_hat, decomp.xi_hat))
    T_eff = y_eff.shape[0]
    return VarianceShares(
        series_ids=decomp.series_ids,
        share_C=decomp.C_hat.var(axis=0) / var_y,
        share_weak=decomp.e_chi_hat.var(axis=0) / var_y,
        share_chi=decomp.chi_hat.var(axis=0) / var_y,
        share_xi=decomp.xi_hat.var(axis=0) / var_y,
        cross_C_weak=(cC * ce).sum(axis=0) / T_eff / var_y,
        cross_chi_xi=(cchi * cxi).sum(axis=0) / T_eff / var_y,
    )
