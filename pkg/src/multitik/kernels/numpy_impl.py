"""Pure-numpy reference implementations of the iterative kernels.

Both backends share these signatures and semantics exactly; this module is
the readable specification, numba_impl the fast twin. Agreement between
the two is a test, at solver tolerance rather than bitwise (BLAS and
explicit loops round differently).

fista_enet minimizes

    J(u) = 1/2 u'Gu - b'u + c0 + eta1 ||u||_1 + eta2/2 ||u||^2

with monotone FISTA (a step that would raise J falls back to plain ISTA
from the current iterate, momentum reset). The y-point product G@y is
recombined from cached G@u terms so each iteration costs one matvec.

admm_h1tv runs scaled ADMM on the split z = Du for

    1/2 ||Ku - g||^2 + (eta1/h) sum (Du)^2 + eta2 ||Du||_1

The u-update matrix K'K + (2 eta1/h + rho) D'D is constant, so the caller
factors it once (lower Cholesky) and the kernel only does triangular
solves. Stopping follows the usual primal/dual residual test with
abs_tol = rel_tol = tol.
"""

import numpy as np
from scipy.linalg import cho_solve


def _enet_obj(G, b, c0, eta1, eta2, u, Gu):
    return (
        0.5 * float(u @ Gu)
        - float(b @ u)
        + c0
        + eta1 * float(np.sum(np.abs(u)))
        + 0.5 * eta2 * float(u @ u)
    )


def fista_enet(G, b, c0, eta1, eta2, lip, u0, tol, max_iter, obj_hist):
    """Returns (u, J, iterations, converged). obj_hist[:iterations+1] is
    filled with the accepted objective sequence, obj_hist[0] = J(u0)."""
    u = u0.copy()
    Gu = G @ u
    J = _enet_obj(G, b, c0, eta1, eta2, u, Gu)
    obj_hist[0] = J
    u_prev = u.copy()
    Gu_prev = Gu.copy()
    t = 1.0
    thr = eta1 / lip
    it = 0
    converged = 0
    for it in range(1, max_iter + 1):
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        y = u + beta * (u - u_prev)
        Gy = Gu + beta * (Gu - Gu_prev)
        grad = Gy - b + eta2 * y
        u_new = np.sign(y - grad / lip) * np.maximum(
            np.abs(y - grad / lip) - thr, 0.0
        )
        Gu_new = G @ u_new
        J_new = _enet_obj(G, b, c0, eta1, eta2, u_new, Gu_new)
        if J_new > J:
            # monotone safeguard: plain ISTA step from u, momentum reset
            t_next = 1.0
            grad = Gu - b + eta2 * u
            u_new = np.sign(u - grad / lip) * np.maximum(
                np.abs(u - grad / lip) - thr, 0.0
            )
            Gu_new = G @ u_new
            J_new = _enet_obj(G, b, c0, eta1, eta2, u_new, Gu_new)
            if J_new > J:  # lip is an upper bound, so this means we are done
                obj_hist[it] = J
                converged = 1
                break
        u_prev, Gu_prev = u, Gu
        u, Gu = u_new, Gu_new
        diff = J - J_new
        J = J_new
        obj_hist[it] = J
        t = t_next
        if diff <= tol * max(1.0, abs(J)):
            converged = 1
            break
    return u, J, it, converged


def admm_h1tv(L_chol, Ktg, z0, w0, rho, thr, tol, max_iter):
    """Returns (u, z, w, iterations, converged, pri_res, dual_res).

    L_chol is the lower Cholesky factor of the u-update matrix; z0, w0
    warm-start the split variable and the scaled dual.
    """
    n = Ktg.shape[0]
    z = z0.copy()
    w = w0.copy()
    sq_pri = np.sqrt(n - 1.0)
    sq_dual = np.sqrt(float(n))
    u = np.zeros(n)
    pri = np.inf
    dual = np.inf
    it = 0
    converged = 0
    DT = np.zeros(n)
    for it in range(1, max_iter + 1):
        v = z - w
        DT[0] = -v[0]
        DT[1:-1] = v[:-1] - v[1:]
        DT[-1] = v[-1]
        u = cho_solve((L_chol, True), Ktg + rho * DT)
        du = np.diff(u)
        z_old = z
        z = np.sign(du + w) * np.maximum(np.abs(du + w) - thr, 0.0)
        w = w + du - z
        dz = z - z_old
        DT[0] = -dz[0]
        DT[1:-1] = dz[:-1] - dz[1:]
        DT[-1] = dz[-1]
        pri = float(np.linalg.norm(du - z))
        dual = rho * float(np.linalg.norm(DT))
        DT2 = np.zeros(n)
        DT2[0] = -w[0]
        DT2[1:-1] = w[:-1] - w[1:]
        DT2[-1] = w[-1]
        eps_pri = sq_pri * tol + tol * max(
            float(np.linalg.norm(du)), float(np.linalg.norm(z))
        )
        eps_dual = sq_dual * tol + tol * rho * float(np.linalg.norm(DT2))
        if pri <= eps_pri and dual <= eps_dual:
            converged = 1
            break
    return u, z, w, it, converged, pri, dual
