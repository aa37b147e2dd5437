"""Hot numerical kernels with two interchangeable engines.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
The engine is chosen once at import time from the ``FACTORLAG_KERNELS``
environment variable (``numba`` or ``numpy``); unset means numba when
importable, numpy otherwise.  Both engines implement the same update
sequence, so results agree to floating-point rounding; byte-level
reproducibility is guaranteed only within a fixed engine.

``benchmarks/bench_kernels.py`` times the two engines side by side.
"""

import os

import numpy as np

ENV_VAR = "FACTORLAG_KERNELS"


# ---------------------------------------------------------------------------
# pure-numpy engine
# ---------------------------------------------------------------------------

def _numpy_cd_lasso_gram(G, c, lam, beta, g, max_sweeps, tol):
    """Cyclic coordinate descent on the Gram system.

    Minimizes (1/2) beta' G beta - c' beta + lam * ||beta||_1 where
    G = X'X/T and c = X'y/T.  ``beta`` and ``g`` are updated in place;
    ``g`` must equal G @ beta on entry and keeps that identity on exit.

    Convergence is declared when a full cyclic sweep changes no
    coefficient by ``tol`` or more.  Before each sweep the solver tries
    to jump to the optimum by solving the stationarity system on the
    current support (discarding sign-inconsistent coordinates for a few
    rounds); the jump is accepted only when the candidate passes the full
    KKT conditions, so it lands exactly on the verified solution and
    everything else falls back to plain sweeps.
    Returns (sweeps_used, last_max_change).
    """
    k = G.shape[0]
    delta = np.inf
    sweeps = 0
    next_attempt = 0
    backoff = 2
    slack = lam + max(10.0 * tol, 1e-9)
    for s in range(max_sweeps):
        if s >= next_attempt and np.any(beta != 0.0):
            # a jump cannot succeed while an outside coordinate violates
            # KKT at the current point; let the sweep admit it first
            if np.abs(c - g)[beta == 0.0].max(initial=0.0) <= slack:
                if not _numpy_support_jump(G, c, lam, beta, g, tol):
                    next_attempt = s + backoff
                    backoff *= 2
        delta = 0.0
        for j in range(k):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            z = c[j] - g[j] + gjj * beta[j]
            if z > lam:
                bnew = (z - lam) / gjj
            elif z < -lam:
                bnew = (z + lam) / gjj
            else:
                bnew = 0.0
            d = bnew - beta[j]
            if d != 0.0:
                beta[j] = bnew
                g += G[:, j] * d
                ad = abs(d)
                if ad > delta:
                    delta = ad
        sweeps = s + 1
        if delta < tol:
            break
    return sweeps, delta


def _numpy_support_jump(G, c, lam, beta, g, tol):
    """Solve on the current support; accept only a full-KKT optimum."""
    active = np.nonzero(beta)[0]
    signs = np.sign(beta[active])
    slack = lam + max(10.0 * tol, 1e-9)
    for _ in range(4):
        if active.size == 0:
            return False
        sub = G[np.ix_(active, active)]
        try:
            cand = np.linalg.solve(sub, c[active] - lam * signs)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(cand)):
            return False
        if lam > 0.0:
            bad = (cand == 0.0) | (np.sign(cand) != signs)
            if bad.any():
                active = active[~bad]
                signs = signs[~bad]
                continue
        g_cand = G[:, active] @ cand
        if np.abs(c - g_cand).max() > slack:
            return False
        beta[:] = 0.0
        beta[active] = cand
        g[:] = g_cand
        return True
    return False


def _numpy_cd_lasso_path(G, c, grid, max_sweeps, tol, betas_out, deltas_out):
    """Path solver: continuation over a descending grid of penalties."""
    k = G.shape[0]
    beta = np.zeros(k)
    g = np.zeros(k)
    total = 0
    for gi, lam in enumerate(grid):
        sweeps, delta = _numpy_cd_lasso_gram(G, c, lam, beta, g, max_sweeps, tol)
        total += sweeps
        betas_out[gi] = beta
        deltas_out[gi] = delta
    return total


def _numpy_bartlett_lrv(S, bw):
    """Bartlett-kernel long-run variance of score rows S (T x k).

    Omega = Gamma_0 + sum_{j<=bw} (1 - j/(bw+1)) (Gamma_j + Gamma_j'),
    Gamma_j = S[j:]' S[:-j] / T.
    """
    T = S.shape[0]
    omega = S.T @ S
    for j in range(1, bw + 1):
        w = 1.0 - j / (bw + 1.0)
        gj = S[j:].T @ S[:-j]
        omega += w * (gj + gj.T)
    return omega / T


def _numpy_linear_recursion(M, impulses, x0):
    """State recursion x_t = M x_{t-1} + impulses[t]; returns the x path."""
    T = impulses.shape[0]
    out = np.empty_like(impulses)
    x = x0
    for t in range(T):
        x = M @ x + impulses[t]
        out[t] = x
    return out


def _numpy_ar1_filter(rho, u):
    """Per-column AR(1) recursion xi_t = rho * xi_{t-1} + u_t from xi_{-1}=0."""
    T = u.shape[0]
    out = np.empty_like(u)
    prev = np.zeros(u.shape[1])
    for t in range(T):
        prev = rho * prev + u[t]
        out[t] = prev
    return out


_NUMPY_IMPL = {
    "cd_lasso_gram": _numpy_cd_lasso_gram,
    "cd_lasso_path": _numpy_cd_lasso_path,
    "bartlett_lrv": _numpy_bartlett_lrv,
    "linear_recursion": _numpy_linear_recursion,
    "ar1_filter": _numpy_ar1_filter,
}


# ---------------------------------------------------------------------------
# numba engine
# ---------------------------------------------------------------------------

def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def cd_lasso_gram(G, c, lam, beta, g, max_sweeps, tol):
        k = G.shape[0]
        delta = np.inf
        sweeps = 0
        next_attempt = 0
        backoff = 2
        slack = lam + max(10.0 * tol, 1e-9)
        idx = np.empty(k, np.int64)
        sgn = np.empty(k)
        for s in range(max_sweeps):
            has_active = False
            for j in range(k):
                if beta[j] != 0.0:
                    has_active = True
                    break
            entry_blocked = False
            if s >= next_attempt and has_active:
                for j in range(k):
                    if beta[j] == 0.0 and abs(c[j] - g[j]) > slack:
                        entry_blocked = True
                        break
            if s >= next_attempt and has_active and not entry_blocked:
                # jump to the support's stationary point when it passes
                # the full KKT check; drop sign-inconsistent coordinates
                # for a few rounds, otherwise fall back to sweeps
                a = 0
                for j in range(k):
                    if beta[j] != 0.0:
                        idx[a] = j
                        sgn[a] = 1.0 if beta[j] > 0.0 else -1.0
                        a += 1
                accepted = False
                for _round in range(4):
                    if a == 0:
                        break
                    L = np.empty((a, a))
                    for p in range(a):
                        for q in range(a):
                            L[p, q] = G[idx[p], idx[q]]
                    cand = np.empty(a)
                    for p in range(a):
                        cand[p] = c[idx[p]] - lam * sgn[p]
                    ok = True
                    for p in range(a):
                        acc = L[p, p]
                        for r in range(p):
                            acc -= L[p, r] * L[p, r]
                        if acc <= 1e-300 or not np.isfinite(acc):
                            ok = False
                            break
                        L[p, p] = np.sqrt(acc)
                        for q in range(p + 1, a):
                            acc2 = L[q, p]
                            for r in range(p):
                                acc2 -= L[q, r] * L[p, r]
                            L[q, p] = acc2 / L[p, p]
                    if not ok:
                        break
                    for p in range(a):
                        acc = cand[p]
                        for r in range(p):
                            acc -= L[p, r] * cand[r]
                        cand[p] = acc / L[p, p]
                    for p in range(a - 1, -1, -1):
                        acc = cand[p]
                        for r in range(p + 1, a):
                            acc -= L[r, p] * cand[r]
                        cand[p] = acc / L[p, p]
                    finite = True
                    for p in range(a):
                        if not np.isfinite(cand[p]):
                            finite = False
                            break
                    if not finite:
                        break
                    if lam > 0.0:
                        t = 0
                        dropped = False
                        for p in range(a):
                            if cand[p] == 0.0 or (cand[p] > 0.0) != (sgn[p] > 0.0):
                                dropped = True
                            else:
                                idx[t] = idx[p]
                                sgn[t] = sgn[p]
                                cand[t] = cand[p]
                                t += 1
                        if dropped:
                            a = t
                            continue
                    g_cand = np.zeros(k)
                    for p in range(a):
                        bp = cand[p]
                        col = idx[p]
                        for i in range(k):
                            g_cand[i] += G[i, col] * bp
                    kkt_ok = True
                    for i in range(k):
                        if abs(c[i] - g_cand[i]) > slack:
                            kkt_ok = False
                            break
                    if not kkt_ok:
                        break
                    for i in range(k):
                        beta[i] = 0.0
                        g[i] = g_cand[i]
                    for p in range(a):
                        beta[idx[p]] = cand[p]
                    accepted = True
                    break
                if not accepted:
                    next_attempt = s + backoff
                    backoff *= 2
            delta = 0.0
            for j in range(k):
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                z = c[j] - g[j] + gjj * beta[j]
                if z > lam:
                    bnew = (z - lam) / gjj
                elif z < -lam:
                    bnew = (z + lam) / gjj
                else:
                    bnew = 0.0
                d = bnew - beta[j]
                if d != 0.0:
                    beta[j] = bnew
                    for i in range(k):
                        g[i] += G[i, j] * d
                    ad = abs(d)
                    if ad > delta:
                        delta = ad
            sweeps = s + 1
            if delta < tol:
                break
        return sweeps, delta

    @njit(cache=True)
    def _chol_append(G, L, fidx, fa, j):
        # grow the factor of G[fidx,fidx] by column j; -1 when near-singular
        for p in range(fa):
            acc = G[fidx[p], j]
            for r in range(p):
                acc -= L[p, r] * L[fa, r]
            L[fa, p] = acc / L[p, p]
        dsq = G[j, j]
        for r in range(fa):
            dsq -= L[fa, r] * L[fa, r]
        if dsq <= 1e-12 * max(G[j, j], 1e-300) or not np.isfinite(dsq):
            return -1
        L[fa, fa] = np.sqrt(dsq)
        fidx[fa] = j
        return fa + 1

    @njit(cache=True)
    def _chol_remove(G, L, fidx, fa, pos):
        # drop the column at factor position pos: truncate and re-append
        tail = fidx[pos + 1:fa].copy()
        fa = pos
        for t in range(tail.shape[0]):
            fa2 = _chol_append(G, L, fidx, fa, tail[t])
            if fa2 < 0:
                return -1
            fa = fa2
        return fa

    @njit(cache=True)
    def _chol_solve(L, fa, rhs, out):
        for p in range(fa):
            acc = rhs[p]
            for r in range(p):
                acc -= L[p, r] * out[r]
            out[p] = acc / L[p, p]
        for p in range(fa - 1, -1, -1):
            acc = out[p]
            for r in range(p + 1, fa):
                acc -= L[r, p] * out[r]
            out[p] = acc / L[p, p]

    @njit(cache=True)
    def cd_lasso_path(G, c, grid, max_sweeps, tol, betas_out, deltas_out):
        k = G.shape[0]
        beta = np.zeros(k)
        g = np.zeros(k)
        L = np.zeros((k, k))
        fidx = np.empty(k, np.int64)
        fa = 0
        rhs = np.empty(k)
        sol = np.empty(k)
        sgn = np.empty(k)
        g_cand = np.empty(k)
        mark = np.zeros(k, np.bool_)
        bad = np.empty(k, np.int64)
        total = 0
        for gi in range(grid.shape[0]):
            lam = grid[gi]
            slack = lam + max(10.0 * tol, 1e-9)
            delta = np.inf
            next_attempt = 0
            backoff = 2
            for s in range(max_sweeps):
                attempt = s >= next_attempt
                if attempt:
                    has_active = False
                    for j in range(k):
                        if beta[j] != 0.0:
                            has_active = True
                            break
                    if not has_active:
                        attempt = False
                if attempt:
                    # an outside KKT violation means the support must grow
                    # through a sweep before a jump can be optimal
                    for j in range(k):
                        if beta[j] == 0.0 and abs(c[j] - g[j]) > slack:
                            attempt = False
                            break
                if attempt:
                    # reconcile the factor with the current support
                    ok = True
                    p = 0
                    while p < fa:
                        if beta[fidx[p]] == 0.0:
                            fa = _chol_remove(G, L, fidx, fa, p)
                            if fa < 0:
                                fa = 0
                                ok = False
                                break
                        else:
                            p += 1
                    if ok:
                        for j in range(k):
                            mark[j] = False
                        for p in range(fa):
                            mark[fidx[p]] = True
                        for j in range(k):
                            if beta[j] != 0.0 and not mark[j]:
                                fa2 = _chol_append(G, L, fidx, fa, j)
                                if fa2 < 0:
                                    ok = False
                                    break
                                fa = fa2
                    accepted = False
                    if ok and fa > 0:
                        for _round in range(4):
                            for p in range(fa):
                                sgn[p] = 1.0 if beta[fidx[p]] > 0.0 else -1.0
                                rhs[p] = c[fidx[p]] - lam * sgn[p]
                            _chol_solve(L, fa, rhs, sol)
                            nbad = 0
                            for p in range(fa):
                                v = sol[p]
                                if (not np.isfinite(v)) or (
                                    lam > 0.0 and (v == 0.0 or (v > 0.0) != (sgn[p] > 0.0))
                                ):
                                    bad[nbad] = p
                                    nbad += 1
                            if nbad > 0:
                                failed = False
                                for b in range(nbad - 1, -1, -1):
                                    fa = _chol_remove(G, L, fidx, fa, bad[b])
                                    if fa < 0:
                                        fa = 0
                                        failed = True
                                        break
                                if failed or fa == 0:
                                    break
                                continue
                            for i in range(k):
                                g_cand[i] = 0.0
                            for p in range(fa):
                                bp = sol[p]
                                col = fidx[p]
                                for i in range(k):
                                    g_cand[i] += G[i, col] * bp
                            kkt_ok = True
                            for i in range(k):
                                if abs(c[i] - g_cand[i]) > slack:
                                    kkt_ok = False
                                    break
                            if not kkt_ok:
                                break
                            for i in range(k):
                                beta[i] = 0.0
                                g[i] = g_cand[i]
                            for p in range(fa):
                                beta[fidx[p]] = sol[p]
                            accepted = True
                            break
                    if not accepted:
                        next_attempt = s + backoff
                        backoff *= 2
                delta = 0.0
                for j in range(k):
                    gjj = G[j, j]
                    if gjj <= 0.0:
                        continue
                    z = c[j] - g[j] + gjj * beta[j]
                    if z > lam:
                        bnew = (z - lam) / gjj
                    elif z < -lam:
                        bnew = (z + lam) / gjj
                    else:
                        bnew = 0.0
                    d = bnew - beta[j]
                    if d != 0.0:
                        beta[j] = bnew
                        for i in range(k):
                            g[i] += G[i, j] * d
                        ad = abs(d)
                        if ad > delta:
                            delta = ad
                total += 1
                if delta < tol:
                    break
            for j in range(k):
                betas_out[gi, j] = beta[j]
            deltas_out[gi] = delta
        return total

    @njit(cache=True)
    def bartlett_lrv(S, bw):
        T = S.shape[0]
        omega = S.T @ S
        for j in range(1, bw + 1):
            w = 1.0 - j / (bw + 1.0)
            gj = S[j:].T @ S[:-j]
            omega += w * (gj + gj.T)
        return omega / T

    @njit(cache=True)
    def linear_recursion(M, impulses, x0):
        T = impulses.shape[0]
        m = M.shape[0]
        out = np.empty_like(impulses)
        x = x0.copy()
        for t in range(T):
            xn = impulses[t].copy()
            for i in range(m):
                acc = 0.0
                for j in range(m):
                    acc += M[i, j] * x[j]
                xn[i] += acc
            out[t] = xn
            x = xn
        return out

    @njit(cache=True)
    def ar1_filter(rho, u):
        T, n = u.shape
        out = np.empty_like(u)
        prev = np.zeros(n)
        for t in range(T):
            for i in range(n):
                prev[i] = rho[i] * prev[i] + u[t, i]
                out[t, i] = prev[i]
        return out

    return {
        "cd_lasso_gram": cd_lasso_gram,
        "cd_lasso_path": cd_lasso_path,
        "bartlett_lrv": bartlett_lrv,
        "linear_recursion": linear_recursion,
        "ar1_filter": ar1_filter,
    }


def _select_engine():
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if choice in ("numpy", "python"):
        return "numpy", _NUMPY_IMPL
    if choice == "numba":
        return "numba", _build_numba_impl()
    if choice:
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {choice!r}")
    try:
        return "numba", _build_numba_impl()
    except ImportError:
        return "numpy", _NUMPY_IMPL


ENGINE, _IMPL = _select_engine()

cd_lasso_gram = _IMPL["cd_lasso_gram"]
cd_lasso_path = _IMPL["cd_lasso_path"]
bartlett_lrv = _IMPL["bartlett_lrv"]
linear_recursion = _IMPL["linear_recursion"]
ar1_filter = _IMPL["ar1_filter"]


def kernel_engine():
    """Name of the active kernel engine ('numba' or 'numpy')."""
    return ENGINE
