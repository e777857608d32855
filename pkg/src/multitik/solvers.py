"""Inner solvers: given eta, minimize J_eta(u) = 1/2||Ku - g||^2 + eta . psi(u).

Three solver families cover the supported penalty models:

  * quad-quad: one SPD solve of the normal equations.
  * elastic-net (l1 + squared l2): monotone FISTA on the composite
    objective, then an active-set Newton polish that drives the l1
    subgradient certificate to roundoff. The polish is what makes
    severely ill-posed instances usable inside an outer parameter
    iteration; FISTA alone stalls with an objective gap that finite
    differences then read as noise.
  * h1-tv (squared H^1 seminorm + TV): scaled ADMM on the split z = Du
    with the u-update matrix factored once per eta.

All solvers accept eta as a RegParams or a plain pair and tolerate zero
components (the selection layer enforces positivity; oracles legitimately
probe the single-penalty edges). The optional `state` dict carries warm
starts and cached factorizations across calls at nearby eta; pass the
same dict to consecutive calls and leave it None for one-shot use.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import MultitikError, RegParams, TikhonovSolution
from .penalties import penalty_operator

ENET_TOL = 1e-10
ENET_MAX_ITER = 20000
ADMM_TOL = 1e-8
ADMM_MAX_ITER = 5000

#: active sets larger than this skip the Newton polish (cubic cost)
POLISH_LIMIT = 1200


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances for the iterative solvers; None fields take the
    solver-specific default (ENET_*/ADMM_* above). admm_rho defaults to
    eta2, which matches the soft-threshold scale."""

    tol: float | None = None
    max_iter: int | None = None
    admm_rho: float | None = None

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.admm_rho is not None and not self.admm_rho > 0:
            raise ValueError("admm_rho must be positive")


def _eta_pair(eta):
    if isinstance(eta, RegParams):
        e1, e2 = eta.eta1, eta.eta2
    else:
        e1, e2 = float(eta[0]), float(eta[1])
    if not (np.isfinite(e1) and np.isfinite(e2)) or e1 < 0 or e2 < 0:
        raise ValueError(f"eta components must be finite and >= 0, got {(e1, e2)}")
    return e1, e2


def _phi(K, g, u):
    r = K @ u - g
    return 0.5 * float(r @ r)


def solve_quadratic(K, g_obs, L1, L2, eta):
    """Direct solve of (K'K + eta1 L1'L1 + eta2 L2'L2) u = K' g_obs.

    L1 or L2 may be None to drop that term. The returned psi entries are
    1/2 ||L_i u||^2 (zero for an absent operator). Fails explicitly if
    the system is not positive definite (kernel overlap)."""
    K = np.asarray(K, dtype=float)
    g_obs = np.asarray(g_obs, dtype=float)
    e1, e2 = _eta_pair(eta)
    n = K.shape[1]
    A = K.T @ K
    if L1 is not None:
        A = A + e1 * (L1.T @ L1)
    if L2 is not None:
        A = A + e2 * (L2.T @ L2)
    b = K.T @ g_obs
    try:
        cf = sla.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise MultitikError(
            "quadratic Tikhonov system is singular; the penalty kernels "
            "overlap ker(K)"
        ) from exc
    u = sla.cho_solve(cf, b)
    res = float(np.linalg.norm(A @ u - b)) / (1.0 + float(np.linalg.norm(b)))
    p1 = 0.5 * float(np.linalg.norm(L1 @ u) ** 2) if L1 is not None else 0.0
    p2 = 0.5 * float(np.linalg.norm(L2 @ u) ** 2) if L2 is not None else 0.0
    return TikhonovSolution(
        u=u,
        phi=_phi(K, g_obs, u),
        psi=(p1, p2),
        iterations=1,
        converged=True,
        inner_residual=res,
    )


def _power_lambda_max(G, tol=1e-8, max_iter=10000):
    # deterministic start so repeated runs are bitwise stable
    n = G.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam_new = float(v @ w)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def _enet_certificate(G, b, e1, e2, u):
    """Max violation of the l1 subgradient conditions at u."""
    grad = G @ u - b + e2 * u
    active = u != 0
    worst = 0.0
    if np.any(active):
        worst = float(np.max(np.abs(grad[active] + e1 * np.sign(u[active]))))
    if np.any(~active):
        worst = max(worst, float(np.max(np.abs(grad[~active]) - e1)))
    return worst


def _polish_enet(K, g, G, b, e1, e2, u, max_pass=60, exact=False):
    """Active-set Newton finisher for the elastic-net objective.

    Takes the sign pattern of u, solves the reduced stationarity system,
    drops sign-inconsistent coordinates, and activates inactive-set KKT
    violators until the subgradient certificate holds. The reduced solve
    prefers Cholesky on G_AA + eta2 I and falls back to an SVD of the
    stacked matrix [K_A; sqrt(eta2) I] when the normal equations are too
    ill-conditioned (squaring the condition number is exactly what kills
    the tiny-eta regime).

    exact mode is for outer iterations that need phi resolved near
    roundoff (discrepancy targets scale with delta^2, so small noise
    makes them brutal): always the stacked SVD, one activation per pass,
    and a slack proportional to the gradient scale instead of an
    absolute one, which in the tiny-eta regime means polishing until the
    computed KKT violations vanish."""
    n = u.shape[0]
    s = np.sign(u)
    out = u.copy()
    for p in range(max_pass):
        active = s != 0
        k = int(active.sum())
        if k > POLISH_LIMIT:
            return out, False, p
        if k == 0:
            # gradient at the origin is -b
            if np.all(np.abs(b) <= e1 * (1.0 + 1e-12) + 1e-300):
                return np.zeros(n), True, p
            i = int(np.argmax(np.abs(b)))
            s[i] = np.sign(b[i])
            continue
        idx = np.where(active)[0]
        rhs = b[idx] - e1 * s[idx]
        uA = None
        if not exact:
            GA = G[np.ix_(idx, idx)] + e2 * np.eye(k)
            try:
                cf = sla.cho_factor(GA, lower=True)
                cand = sla.cho_solve(cf, rhs)
                resid = float(np.linalg.norm(GA @ cand - rhs))
                if np.isfinite(resid) and resid <= 1e-9 * (
                    1.0 + float(np.linalg.norm(rhs))
                ):
                    uA = cand
            except np.linalg.LinAlgError:
                pass
        if uA is None:
            KA = K[:, idx]
            M = np.vstack([KA, np.sqrt(e2) * np.eye(k)]) if e2 > 0 else KA
            U, sv, Vt = np.linalg.svd(M, full_matrices=False)
            keep = sv > 1e-14 * sv[0]
            w = Vt[keep] @ rhs
            uA = Vt[keep].T @ (w / sv[keep] ** 2)
        flipped = np.sign(uA) != s[idx]  # exact zeros count as flips too
        if np.any(flipped):
            s[idx[flipped]] = 0
            continue
        out = np.zeros(n)
        out[idx] = uA
        grad = G @ out - b + e2 * out
        inactive = ~active
        if not np.any(inactive):
            return out, True, p
        viol = np.abs(grad[inactive]) - e1
        if exact:
            slack = 1e-12 * max(e1, float(np.abs(grad).max()) * 1e-3)
        else:
            slack = 1e-11 * max(1.0, e1)
        if float(viol.max()) <= slack:
            return out, True, p
        order = np.argsort(viol)[::-1]
        take = order[:1] if exact else order[: max(1, min(10, k // 10))]
        take = take[viol[take] > 0]
        if take.size == 0:
            return out, True, p
        j = np.where(inactive)[0][take]
        s[j] = -np.sign(grad[j])
    return out, False, max_pass


def solve_elastic_net(K, g_obs, eta, opts=None, state=None):
    """Minimize 1/2||Ku - g||^2 + eta1 ||u||_1 + eta2/2 ||u||^2.

    FISTA with monotone restart, step 1/(lambda_max(K'K) + eta2) from a
    power iteration, then the active-set polish. eta1 = 0 short-circuits
    to an exact ridge solve through a cached eigendecomposition of K'K.
    state caches G = K'K, b, the spectral bound, the eigendecomposition,
    the warm start, and the last objective history ('obj_hist')."""
    K = np.asarray(K, dtype=float)
    g_obs = np.asarray(g_obs, dtype=float)
    e1, e2 = _eta_pair(eta)
    opts = opts or SolverOptions()
    tol = ENET_TOL if opts.tol is None else opts.tol
    max_iter = ENET_MAX_ITER if opts.max_iter is None else opts.max_iter
    if state is None:
        state = {}
    n = K.shape[1]
    G = state.get("G")
    if G is None:
        G = K.T @ K
        state["G"] = G
    b = state.get("b")
    if b is None:
        b = K.T @ g_obs
        state["b"] = b

    if e1 == 0.0:
        if e2 == 0.0:
            raise MultitikError("elastic net needs at least one positive weight")
        ew = state.get("eigh")
        if ew is None:
            ew = np.linalg.eigh(G)
            state["eigh"] = ew
        lam, V = ew
        u = V @ ((V.T @ b) / (lam + e2))
        res = float(np.linalg.norm(G @ u + e2 * u - b)) / (
            1.0 + float(np.linalg.norm(b))
        )
        state["u"] = u
        return TikhonovSolution(
            u=u,
            phi=_phi(K, g_obs, u),
            psi=(float(np.sum(np.abs(u))), 0.5 * float(u @ u)),
            iterations=1,
            converged=True,
            inner_residual=res,
        )

    lam_max = state.get("lam_max")
    if lam_max is None:
        lam_max = _power_lambda_max(G) * (1.0 + 1e-6)
        state["lam_max"] = lam_max
    lip = lam_max + e2
    u0 = state.get("u")
    if u0 is None:
        u0 = np.zeros(n)
    c0 = 0.5 * float(g_obs @ g_obs)
    hist = np.empty(max_iter + 1)

    from . import kernels  # deferred so quad-only workloads never touch numba

    u, _, it, conv = kernels.fista_enet(
        G, b, c0, e1, e2, lip, u0, tol, max_iter, hist
    )
    state["obj_hist"] = hist[: it + 1].copy()
    exact = tol < 1e-12  # sub-roundoff request: resolve phi to the bone
    u, polished, _ = _polish_enet(
        K, g_obs, G, b, e1, e2, u, max_pass=200 if exact else 60, exact=exact
    )
    state["u"] = u
    cert = _enet_certificate(G, b, e1, e2, u)
    return TikhonovSolution(
        u=u,
        phi=_phi(K, g_obs, u),
        psi=(float(np.sum(np.abs(u))), 0.5 * float(u @ u)),
        iterations=it,
        converged=bool(polished or conv),
        inner_residual=cert,
    )


def _dtd(n):
    A = np.zeros((n, n))
    i = np.arange(n)
    A[i, i] = 2.0
    A[0, 0] = 1.0
    A[n - 1, n - 1] = 1.0
    A[i[:-1], i[:-1] + 1] = -1.0
    A[i[:-1] + 1, i[:-1]] = -1.0
    return A


def solve_h1tv(K, g_obs, eta, grid_h, opts=None, state=None):
    """Minimize 1/2||Ku - g||^2 + eta1 |u|_{H1}^2 + eta2 |u|_TV, 1-D.

    |u|_{H1}^2 = sum (Du)^2 / h and |u|_TV = sum |Du| with D the forward
    difference. ADMM on z = Du; rho defaults to eta2 so the shrinkage
    threshold eta2/rho is 1. eta2 = 0 reduces to one exact quadratic
    solve. state caches K'K, K'g and the (z, w) warm pair."""
    K = np.asarray(K, dtype=float)
    g_obs = np.asarray(g_obs, dtype=float)
    e1, e2 = _eta_pair(eta)
    if grid_h <= 0:
        raise ValueError("grid_h must be positive")
    opts = opts or SolverOptions()
    tol = ADMM_TOL if opts.tol is None else opts.tol
    max_iter = ADMM_MAX_ITER if opts.max_iter is None else opts.max_iter
    if state is None:
        state = {}
    n = K.shape[1]
    if n < 2:
        raise ValueError("h1-tv needs at least two grid points")
    G = state.get("G")
    if G is None:
        G = K.T @ K
        state["G"] = G
    Ktg = state.get("Ktg")
    if Ktg is None:
        Ktg = K.T @ g_obs
        state["Ktg"] = Ktg
    DtD = state.get("DtD")
    if DtD is None:
        DtD = _dtd(n)
        state["DtD"] = DtD

    def _finish(u, iterations, converged, resid):
        d = np.diff(u)
        return TikhonovSolution(
            u=u,
            phi=_phi(K, g_obs, u),
            psi=(float(d @ d) / grid_h, float(np.sum(np.abs(d)))),
            iterations=iterations,
            converged=converged,
            inner_residual=resid,
        )

    if e2 == 0.0:
        A = G + (2.0 * e1 / grid_h) * DtD
        try:
            cf = sla.cho_factor(A, lower=True)
        except np.linalg.LinAlgError as exc:
            raise MultitikError("h1-tv quadratic limit is singular") from exc
        u = sla.cho_solve(cf, Ktg)
        res = float(np.linalg.norm(A @ u - Ktg)) / (
            1.0 + float(np.linalg.norm(Ktg))
        )
        return _finish(u, 1, True, res)

    rho = opts.admm_rho if opts.admm_rho is not None else e2
    A = G + (2.0 * e1 / grid_h + rho) * DtD
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise MultitikError("h1-tv inner system is singular") from exc
    z0 = state.get("z")
    w0 = state.get("w")
    if z0 is None or z0.shape[0] != n - 1:
        z0 = np.zeros(n - 1)
        w0 = np.zeros(n - 1)

    from . import kernels

    u, z, w, it, conv, pri, dual = kernels.admm_h1tv(
        L, Ktg, z0, w0, rho, e2 / rho, tol, max_iter
    )
    state["z"] = z
    state["w"] = w
    return _finish(u, it, bool(conv), max(pri, dual))


def solve_tikhonov(problem, model, eta, opts=None, state=None):
    """Dispatch to the solver for model.model_id and recompute phi, psi
    from the returned u so the bookkeeping is solver-independent."""
    mid = model.model_id
    if model.psi1.kind == "sq-h1" and abs(model.psi1.h - problem.grid.h) > 1e-12 * (
        1.0 + problem.grid.h
    ):
        raise ValueError(
            f"model grid spacing {model.psi1.h} does not match problem "
            f"grid spacing {problem.grid.h}"
        )
    if mid == "quad-quad":
        n = problem.n
        sol = solve_quadratic(
            problem.K,
            problem.g_obs,
            penalty_operator(model.psi1, n),
            penalty_operator(model.psi2, n),
            eta,
        )
    elif mid == "elastic-net":
        sol = solve_elastic_net(problem.K, problem.g_obs, eta, opts, state)
    elif mid == "h1-tv":
        sol = solve_h1tv(
            problem.K, problem.g_obs, eta, model.psi1.h, opts, state
        )
    else:  # unreachable while PenaltyModel validates pairs
        raise MultitikError(f"no solver for model {mid!r}")
    return TikhonovSolution(
        u=sol.u,
        phi=_phi(problem.K, problem.g_obs, sol.u),
        psi=model.eval(sol.u),
        iterations=sol.iterations,
        converged=sol.converged,
        inner_residual=sol.inner_residual,
    )
