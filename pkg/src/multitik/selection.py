"""Parameter choice rules for the two-penalty problem.

Two principles are implemented on top of the value function
F(eta) = min_u J_eta(u):

  * balanced discrepancy: find eta with phi = c and eta1 psi1 = eta2 psi2
    (c = 1/2 c_m^2 delta^2), written as a 2x2 root-finding problem

        T(eta) = (phi - c + eta2 psi2 - eta1 psi1,
                  phi - c + eta1 psi1 - eta2 psi2)

    and solved by Broyden's method with a finite-difference initial
    Jacobian, positivity safeguarding, and a stall-triggered refresh.

  * balancing: minimize Phi_gamma(eta) = F(eta)^(gamma+2)/(eta1 eta2)
    by the fixed-point iteration
    eta_i <- (phi + eta_{-i} psi_{-i}) / ((1+gamma) psi_i),
    whose fixed points satisfy gamma eta_i psi_i = phi for both i.

Both return a SelectionResult with the full iteration trace. The grid
oracle (needs u_true) provides the baselines the principles are judged
against.
"""

from dataclasses import dataclass

import numpy as np

from .core import (
    MultitikError,
    PenaltyDegenerate,
    RegParams,
    SelectionResult,
    SingularJacobian,
    weight_t,
)
from .solvers import ADMM_TOL, ENET_TOL, SolverOptions, solve_tikhonov

BROYDEN_MAX_ITER = 50
FIXED_POINT_MAX_ITER = 200

#: default inner tolerance per model, for the near-convergence tightening
_DEFAULT_INNER_TOL = {"elastic-net": ENET_TOL, "h1-tv": ADMM_TOL, "quad-quad": 1e-12}


@dataclass(frozen=True)
class SelectionOptions:
    """Knobs for the outer iterations.

    eta0 = None uses (1e-2, 1e-2) * mean(g_obs^2), a data-scale guess
    that is invariant to grid refinement. outer_max_iter = None resolves
    to 50 (Broyden) or 200 (fixed point). outer_tol is relative: Broyden
    stops at ||T|| <= outer_tol * delta^2/2, the fixed point at relative
    eta change < outer_tol.
    """

    gamma: float = 1.0
    c_m: float = 1.0
    eta0: RegParams | None = None
    outer_tol: float = 1e-6
    outer_max_iter: int | None = None
    fd_step: float = 1e-3
    eta_min: float = 1e-14
    solver: SolverOptions | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.c_m < 1.0:
            raise ValueError("c_m must be at least 1")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if not self.eta_min > 0:
            raise ValueError("eta_min must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


def default_eta0(problem):
    s = 1e-2 * float(np.mean(problem.g_obs**2))
    return RegParams(s, s)


def _eta0_array(problem, opts):
    if opts.eta0 is not None:
        return opts.eta0.as_array()
    return default_eta0(problem).as_array()


def relative_error(u, u_true):
    """||u - u_true|| / ||u_true||; the grid weight cancels."""
    u_true = np.asarray(u_true, dtype=float).ravel()
    nt = float(np.linalg.norm(u_true))
    if nt == 0.0:
        raise ValueError("u_true is zero; relative error undefined")
    return float(np.linalg.norm(np.asarray(u, dtype=float).ravel() - u_true)) / nt


def value_function(problem, model, eta, opts=None, state=None):
    """F(eta) = phi(u_eta) + eta1 psi1(u_eta) + eta2 psi2(u_eta)."""
    sol = solve_tikhonov(problem, model, eta, opts, state)
    e1, e2 = (eta.eta1, eta.eta2) if isinstance(eta, RegParams) else eta
    return sol.phi + e1 * sol.psi[0] + e2 * sol.psi[1]


def phi_gamma(problem, model, eta, gamma, opts=None, state=None):
    """Balancing functional Phi_gamma(eta) = F(eta)^(gamma+2) / (eta1 eta2)."""
    F = value_function(problem, model, eta, opts, state)
    if F <= 0.0:
        raise PenaltyDegenerate(
            "value function vanishes (noise-free interpolation); "
            "Phi_gamma is degenerate"
        )
    e1, e2 = (eta.eta1, eta.eta2) if isinstance(eta, RegParams) else eta
    return float(F ** (gamma + 2.0) / (e1 * e2))


def residual_bdp(problem, model, eta, delta, c_m=1.0, opts=None, state=None):
    """The 2-vector whose zero is the balanced discrepancy point."""
    T, _ = _residual_bdp_sol(problem, model, eta, delta, c_m, opts, state)
    return T


def _residual_bdp_sol(problem, model, eta, delta, c_m, opts, state):
    sol = solve_tikhonov(problem, model, eta, opts, state)
    e1, e2 = (eta.eta1, eta.eta2) if isinstance(eta, RegParams) else eta
    c = 0.5 * c_m * c_m * delta * delta
    bal = e1 * sol.psi[0] - e2 * sol.psi[1]
    return np.array([sol.phi - c - bal, sol.phi - c + bal]), sol


def _trace_row(k, eta, sol, resid):
    return (
        float(k),
        float(eta[0]),
        float(eta[1]),
        sol.phi,
        sol.psi[0],
        sol.psi[1],
        float(resid),
    )


def select_broyden(problem, model, delta=None, opts=None):
    """Balanced discrepancy point by Broyden's method.

    Stops at ||T|| <= outer_tol * delta^2/2. Raises SingularJacobian
    (with the trace attached) if the model Jacobian degenerates; an
    iteration-cap exit returns converged=False with the best iterate.
    Near convergence the inner tolerance is tightened to
    1e-2 * outer_tol * delta^2/2 so outer residuals are not dominated by
    inner solver error.
    """
    opts = opts or SelectionOptions()
    if delta is None:
        delta = problem.delta
    if not delta > 0:
        raise ValueError("balanced discrepancy needs delta > 0")
    if delta >= float(np.linalg.norm(problem.g_obs)):
        raise ValueError(
            "delta >= ||g_obs||: the discrepancy level is not attainable"
        )
    max_iter = (
        BROYDEN_MAX_ITER if opts.outer_max_iter is None else opts.outer_max_iter
    )
    half_d2 = 0.5 * delta * delta
    target = opts.outer_tol * half_d2
    base_solver = opts.solver or SolverOptions()
    base_tol = (
        base_solver.tol
        if base_solver.tol is not None
        else _DEFAULT_INNER_TOL[model.model_id]
    )
    tight_solver = SolverOptions(
        tol=min(base_tol, 1e-2 * target),
        max_iter=base_solver.max_iter,
        admm_rho=base_solver.admm_rho,
    )
    state = {}
    n_solves = [0]

    def evaluate(eta, tighten=False):
        n_solves[0] += 1
        sopts = tight_solver if tighten else base_solver
        return _residual_bdp_sol(
            problem, model, eta, delta, opts.c_m, sopts, state
        )

    eta = _eta0_array(problem, opts)
    T, sol = evaluate(eta)
    trace = [_trace_row(0, eta, sol, np.linalg.norm(T))]
    J = np.zeros((2, 2))
    for j in range(2):
        ep = eta.copy()
        dh = opts.fd_step * ep[j]
        ep[j] += dh
        Tp, _ = evaluate(ep)
        J[:, j] = (Tp - T) / dh

    best_norm = float(np.linalg.norm(T))
    best_eta, best_sol = eta.copy(), sol
    recent = []
    converged = False
    message = ""
    k = 0
    for k in range(1, max_iter + 1):
        if np.linalg.norm(T) <= target:
            converged = True
            break
        try:
            step = np.linalg.solve(J, -T)
        except np.linalg.LinAlgError:
            raise SingularJacobian(
                "Broyden Jacobian is singular; see .trace for the iterates",
                trace=np.array(trace),
            ) from None
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(
                "Broyden step is not finite; see .trace for the iterates",
                trace=np.array(trace),
            )
        halvings = 0
        while np.any(eta + step <= 0.0) and halvings < 30:
            step *= 0.5
            halvings += 1
        eta_new = np.maximum(eta + step, opts.eta_min)
        step = eta_new - eta
        tn_cur = float(np.linalg.norm(T))
        # the 1e-8 floor matters when delta^2 targets dip under the
        # plain inner solver's resolution: tightening must engage before
        # the iteration can get anywhere near such a target
        near = tn_cur <= max(100.0 * target, 1e-8)
        T_new, sol = evaluate(eta_new, tighten=near)
        # damp uphill steps: the secant model goes stale over the large
        # eta moves the tiny-noise regime produces, and an undamped
        # iteration then orbits the root without ever landing on it
        ls = 0
        while float(np.linalg.norm(T_new)) > tn_cur and ls < 8:
            step *= 0.5
            eta_new = np.maximum(eta + step, opts.eta_min)
            step = eta_new - eta
            if not np.any(step):
                break
            T_new, sol = evaluate(eta_new, tighten=near)
            ls += 1
        dT = T_new - T
        ss = float(step @ step)
        if ss > 0.0:
            J = J + np.outer(dT - J @ step, step) / ss
        eta, T = eta_new, T_new
        tn = float(np.linalg.norm(T))
        trace.append(_trace_row(k, eta, sol, tn))
        if tn < best_norm:
            best_norm, best_eta, best_sol = tn, eta.copy(), sol
        recent.append(tn)
        if len(recent) > 5 and recent[-1] > 0.99 * recent[-6]:
            # stalled: rebuild the Jacobian by finite differences
            for j in range(2):
                ep = eta.copy()
                dh = opts.fd_step * ep[j]
                ep[j] += dh
                Tp, _ = evaluate(ep)
                J[:, j] = (Tp - T) / dh
            recent.clear()
    else:
        k = max_iter

    if not converged and np.linalg.norm(T) <= target:
        converged = True
    if not converged:
        message = (
            f"no convergence in {max_iter} iterations; "
            f"best ||T|| = {best_norm:.3e} vs target {target:.3e}"
        )
        eta, sol = best_eta, best_sol
    return SelectionResult(
        eta_star=RegParams(eta[0], eta[1]),
        solution=sol,
        trace=np.array(trace),
        principle="balanced-discrepancy",
        weight_t=weight_t(eta),
        converged=converged,
        message=message,
    )


def _balancing_root(problem, model, gamma, eta0, opts, state, trace):
    """Damped Broyden solve of the balancing identities gamma eta_i psi_i
    = phi, posed in the scaled form C_i(eta) = gamma psi_i - phi/eta_i = 0.

    The unscaled system gamma eta_i psi_i - phi has a spurious degenerate
    root at eta = 0 whenever K is injective (phi and eta psi both vanish
    there), and Newton steps taken below the balance point fall into it.
    Dividing by eta_i removes that root without moving the positive one.

    Appends accepted iterates to trace (residual_norm column holds
    max_i |gamma eta_i psi_i - phi| / F there) and returns
    (eta, sol, converged, message).
    """
    max_iter = (
        BROYDEN_MAX_ITER if opts.outer_max_iter is None else opts.outer_max_iter
    )

    def evaluate(eta):
        s = solve_tikhonov(problem, model, eta, opts.solver, state)
        F = s.phi + eta[0] * s.psi[0] + eta[1] * s.psi[1]
        if F <= 0.0:
            raise PenaltyDegenerate(
                "value function vanished in the balancing root solve"
            )
        C = np.array(
            [
                gamma * s.psi[0] - s.phi / eta[0],
                gamma * s.psi[1] - s.phi / eta[1],
            ]
        )
        # certificate scale: the identities themselves, relative to F
        res = max(
            abs(gamma * eta[0] * s.psi[0] - s.phi),
            abs(gamma * eta[1] * s.psi[1] - s.phi),
        ) / F
        return C, s, res

    eta = eta0.copy()
    C, sol, res = evaluate(eta)
    k0 = len(trace)
    trace.append(_trace_row(k0, eta, sol, res))
    J = np.zeros((2, 2))
    for j in range(2):
        ep = eta.copy()
        dh = opts.fd_step * ep[j]
        ep[j] += dh
        Cp, _, _ = evaluate(ep)
        J[:, j] = (Cp - C) / dh
    best = (res, eta.copy(), sol)
    for k in range(1, max_iter + 1):
        if res <= opts.outer_tol:
            return eta, sol, True, ""
        try:
            step = np.linalg.solve(J, -C)
        except np.linalg.LinAlgError:
            raise SingularJacobian(
                "balancing-system Jacobian is singular; see .trace",
                trace=np.array(trace),
            ) from None
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(
                "balancing-system step is not finite; see .trace",
                trace=np.array(trace),
            )
        halvings = 0
        while np.any(eta + step <= 0.0) and halvings < 30:
            step *= 0.5
            halvings += 1
        eta_new = np.maximum(eta + step, opts.eta_min)
        step = eta_new - eta
        cn_cur = float(np.linalg.norm(C))
        C_new, sol, res = evaluate(eta_new)
        ls = 0
        while float(np.linalg.norm(C_new)) > cn_cur and ls < 8:
            step *= 0.5
            eta_new = np.maximum(eta + step, opts.eta_min)
            step = eta_new - eta
            if not np.any(step):
                break
            C_new, sol, res = evaluate(eta_new)
            ls += 1
        ss = float(step @ step)
        if ss > 0.0:
            J = J + np.outer(C_new - C - J @ step, step) / ss
        eta, C = eta_new, C_new
        trace.append(_trace_row(k0 + k, eta, sol, res))
        if res < best[0]:
            best = (res, eta.copy(), sol)
    if res <= opts.outer_tol:
        return eta, sol, True, ""
    _, eta, sol = best
    return (
        eta,
        sol,
        False,
        f"balancing root solve: no convergence in {max_iter} iterations",
    )


def select_fixed_point(problem, model, gamma=None, opts=None):
    """Balancing principle via the fixed-point iteration.

    The plain sweep is not globally contracting: its fixed point can be
    repelling (the scalar symmetric problem has sweep-map derivative
    2 - 1/(1+gamma) > 1 at the root for every gamma). When the sweep
    fails to settle, the balancing system gamma eta_i psi_i = phi is
    solved directly by a damped Broyden iteration restarted from eta0.

    residual_norm in the trace holds the relative eta change per plain
    sweep, and max_i |gamma eta_i psi_i - phi| / F for iterates of the
    fallback root solve. Raises
    PenaltyDegenerate if a penalty value collapses under eta_min scale
    (division guard); non-convergence of both phases is flagged, the
    best iterate returned.
    """
    opts = opts or SelectionOptions()
    if gamma is None:
        gamma = opts.gamma
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    max_iter = (
        FIXED_POINT_MAX_ITER
        if opts.outer_max_iter is None
        else opts.outer_max_iter
    )
    state = {}
    eta0 = _eta0_array(problem, opts)
    eta = eta0.copy()
    sol = solve_tikhonov(problem, model, eta, opts.solver, state)
    trace = [_trace_row(0, eta, sol, np.inf)]
    converged = False
    message = ""
    for k in range(1, max_iter + 1):
        p1, p2 = sol.psi
        if p1 < opts.eta_min or p2 < opts.eta_min:
            raise PenaltyDegenerate(
                f"psi = ({p1:.3e}, {p2:.3e}) too small for the balancing "
                "update; penalty degenerate at this iterate"
            )
        eta_new = np.array(
            [
                (sol.phi + eta[1] * p2) / ((1.0 + gamma) * p1),
                (sol.phi + eta[0] * p1) / ((1.0 + gamma) * p2),
            ]
        )
        rel = float(np.max(np.abs(eta_new - eta) / eta))
        eta = eta_new
        sol = solve_tikhonov(problem, model, eta, opts.solver, state)
        trace.append(_trace_row(k, eta, sol, rel))
        if rel < opts.outer_tol:
            converged = True
            break
        if float(np.max(eta)) < 1e3 * opts.eta_min:
            # contracting toward zero, not toward the root
            break
    if not converged:
        eta, sol, converged, message = _balancing_root(
            problem, model, gamma, eta0, opts, state, trace
        )
    return SelectionResult(
        eta_star=RegParams(eta[0], eta[1]),
        solution=sol,
        trace=np.array(trace),
        principle="balancing",
        weight_t=weight_t(eta),
        converged=converged,
        message=message,
    )


@dataclass(frozen=True)
class GridSpec:
    """Log grids for the oracle; values ascending, strictly positive
    except that an axis pinned at [0.0] degenerates to the single-penalty
    oracle along the other axis."""

    eta1: np.ndarray
    eta2: np.ndarray

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            v = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            if v.size == 0 or np.any(v < 0) or np.any(np.diff(v) < 0):
                raise ValueError(f"{name} grid must be nonnegative ascending")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @staticmethod
    def log_default(n1=25, n2=25, lo=1e-10, hi=1.0):
        return GridSpec(np.logspace(np.log10(lo), np.log10(hi), n1),
                        np.logspace(np.log10(lo), np.log10(hi), n2))

    def refined(self):
        """Nested doubling: n points -> 2n-1 points on the same span."""

        def dbl(v):
            if v.size == 1:
                return v
            out = np.empty(2 * v.size - 1)
            out[::2] = v
            out[1::2] = np.sqrt(v[:-1] * v[1:])
            return out

        return GridSpec(dbl(self.eta1), dbl(self.eta2))


def oracle_grid(problem, model, grid_spec=None, opts=None):
    """Smallest relative error over a log grid of eta pairs.

    Returns (eta, error) where eta is a RegParams, or a plain tuple when
    a grid axis touches zero. Only converged solves count; ties go to the
    smaller eta1, then eta2 (row-major argmin on the error table). Inner
    sweeps run eta2 descending with warm starts, reset per eta1 row:
    warm-starting ascending from the no-regularization corner poisons the
    iterative solvers.
    """
    if problem.u_true is None:
        raise MultitikError("oracle needs problem.u_true")
    if grid_spec is None:
        grid_spec = GridSpec.log_default()
    g1, g2 = grid_spec.eta1, grid_spec.eta2
    err = np.full((g1.size, g2.size), np.inf)
    for i, e1 in enumerate(g1):
        state = {}
        for j in range(g2.size - 1, -1, -1):
            sol = solve_tikhonov(problem, model, (e1, g2[j]), opts, state)
            if sol.converged:
                err[i, j] = relative_error(sol.u, problem.u_true)
    if not np.any(np.isfinite(err)):
        raise MultitikError("no grid point produced a converged solve")
    flat = int(np.argmin(err))  # row-major: ties -> smaller eta1, then eta2
    i, j = divmod(flat, g2.size)
    best = (float(g1[i]), float(g2[j]))
    if best[0] > 0.0 and best[1] > 0.0:
        best = RegParams(*best)
    return best, float(err[i, j])
