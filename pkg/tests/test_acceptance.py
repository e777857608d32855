"""End-to-end acceptance checks, one test per shipped guarantee.

Each test prints a single criterion line with the measured margins (visible
under pytest -s; pytest -v gives the pass/fail verdict per criterion).
Runtime budgets are asserted, so a pathological slowdown fails loudly.
"""

import time

import numpy as np
import pytest

from multitik import (
    GridSpec,
    SelectionOptions,
    SolverOptions,
    make_model,
    make_test_problem,
    oracle_grid,
    relative_error,
    select_broyden,
    select_fixed_point,
    solve_elastic_net,
    solve_h1tv,
    solve_tikhonov,
    value_function,
)
from multitik.cli import main
from multitik.problems import DEFAULT_MODEL

from oracles import enet_kkt_violation, h1tv_objective, h1tv_subgrad_descent


# the deblurring image is large enough that oracle sweeps need a looser,
# capped inner solver; mirrors the experiment driver
_ORACLE_SOLVER = {
    "ex41": SolverOptions(tol=1e-7, max_iter=4000),
    "ex42": SolverOptions(),
    "ex43": SolverOptions(tol=1e-8, max_iter=2000),
}


def _default_model(prob, example):
    shape = prob.shape if len(prob.shape) == 2 else None
    return make_model(DEFAULT_MODEL[example], h=prob.grid.h, shape=shape)


def _single_grid(name, npts=25):
    g = np.logspace(-10, 0, npts)
    zero = np.array([0.0])
    return GridSpec(g, zero) if name in ("h1", "l1") else GridSpec(zero, g)


def _bdp_error(example, eps, seed):
    prob = make_test_problem(example, eps=eps, seed=seed)
    model = _default_model(prob, example)
    res = select_broyden(prob, model)
    assert res.converged, f"{example} eps={eps}: {res.message}"
    return prob, model, res, relative_error(res.solution.u, prob.u_true)


def test_criterion_1_scalar_closed_forms(scalar_problem, scalar_model):
    t0 = time.monotonic()
    bdp = select_broyden(scalar_problem, scalar_model)
    bal = select_fixed_point(scalar_problem, scalar_model, gamma=1.0)
    dt = time.monotonic() - t0
    err_bdp = max(abs(bdp.eta_star.eta1 - 0.5), abs(bdp.eta_star.eta2 - 0.5))
    err_bal = max(abs(bal.eta_star.eta1 - 0.25), abs(bal.eta_star.eta2 - 0.25))
    assert bdp.converged and err_bdp <= 1e-6
    assert bal.converged and err_bal <= 1e-6
    assert dt < 1.0
    print(
        f"criterion 1: PASS (bdp err {err_bdp:.1e}, "
        f"balance err {err_bal:.1e}, {dt:.2f}s < 1s)"
    )


def test_criterion_2_selection_certificates():
    t0 = time.monotonic()
    worst_disc = worst_bal = worst_fp = 0.0
    for example, eps in (("ex41", 5e-2), ("ex42", 5e-3)):
        prob = make_test_problem(example, eps=eps, seed=11)
        model = _default_model(prob, example)
        half_d2 = 0.5 * prob.delta**2

        res = select_broyden(prob, model)
        assert res.converged, f"{example}: {res.message}"
        sol = res.solution
        e1, e2 = res.eta_star.eta1, res.eta_star.eta2
        F = sol.phi + e1 * sol.psi[0] + e2 * sol.psi[1]
        disc = abs(sol.phi - half_d2) / half_d2
        bal = abs(e1 * sol.psi[0] - e2 * sol.psi[1]) / F
        assert disc <= 1e-5, f"{example}: discrepancy identity {disc:.2e}"
        assert bal <= 1e-5, f"{example}: balance identity {bal:.2e}"

        fp = select_fixed_point(prob, model)
        assert fp.converged, f"{example}: {fp.message}"
        sol = fp.solution
        e1, e2 = fp.eta_star.eta1, fp.eta_star.eta2
        F = sol.phi + e1 * sol.psi[0] + e2 * sol.psi[1]
        ident = max(abs(e1 * sol.psi[0] - sol.phi), abs(e2 * sol.psi[1] - sol.phi))
        assert ident <= 1e-5 * F, f"{example}: balancing identity {ident / F:.2e}"

        worst_disc = max(worst_disc, disc)
        worst_bal = max(worst_bal, bal)
        worst_fp = max(worst_fp, ident / F)
    dt = time.monotonic() - t0
    assert dt < 60.0
    print(
        f"criterion 2: PASS (discrepancy {worst_disc:.1e}, balance "
        f"{worst_bal:.1e}, fixed-point {worst_fp:.1e}, all <= 1e-5; "
        f"{dt:.1f}s < 60s)"
    )


def test_criterion_3_value_function_properties():
    t0 = time.monotonic()
    p41 = make_test_problem("ex41", eps=5e-2, seed=11)
    p42 = make_test_problem("ex42", eps=5e-3, seed=11)
    tight_admm = SolverOptions(tol=1e-10)
    cases = [
        ("quad-quad", p41, make_model("quad-quad", h=p41.grid.h), None),
        ("elastic-net", p42, make_model("elastic-net"), None),
        ("h1-tv", p41, make_model("h1-tv", h=p41.grid.h), tight_admm),
    ]
    rng = np.random.default_rng(2718)

    for label, prob, model, sopts in cases:
        # monotone and midpoint-concave along random ordered pairs
        for _ in range(20):
            pts = 10.0 ** rng.uniform(-6, -1, size=(2, 2))
            lo = np.minimum(pts[0], pts[1])
            hi = np.maximum(pts[0], pts[1])
            mid = 0.5 * (lo + hi)
            F_lo = value_function(prob, model, tuple(lo), sopts)
            F_hi = value_function(prob, model, tuple(hi), sopts)
            F_mid = value_function(prob, model, tuple(mid), sopts)
            assert F_lo <= F_hi + 1e-9 * F_hi, f"{label}: F not monotone"
            assert (
                F_mid >= 0.5 * (F_lo + F_hi) - 1e-9 * F_hi
            ), f"{label}: F not midpoint-concave"

        # psi_i nonincreasing in eta_i along log sweeps
        sweep = np.logspace(-6, -1, 8)
        for axis in range(2):
            vals = []
            for s in sweep:
                eta = [1e-3, 1e-3]
                eta[axis] = s
                sol = solve_tikhonov(prob, model, tuple(eta), sopts)
                vals.append(sol.psi[axis])
            drops = np.diff(vals)
            assert np.all(
                drops <= 1e-9 * (1.0 + np.abs(vals[:-1]))
            ), f"{label}: psi_{axis + 1} not nonincreasing"

    # derivative identity dF/deta_i = psi_i on the smooth model
    model = make_model("quad-quad", h=p41.grid.h)
    worst_fd = 0.0
    for _ in range(5):
        eta = 10.0 ** rng.uniform(-4, -2, size=2)
        sol = solve_tikhonov(p41, model, tuple(eta))
        for i in range(2):
            h = 1e-4 * eta[i]
            ep, em = eta.copy(), eta.copy()
            ep[i] += h
            em[i] -= h
            fd = (
                value_function(p41, model, tuple(ep))
                - value_function(p41, model, tuple(em))
            ) / (2.0 * h)
            rel = abs(fd - sol.psi[i]) / sol.psi[i]
            worst_fd = max(worst_fd, rel)
            assert rel <= 1e-3, f"dF/deta_{i + 1} off by {rel:.2e}"

    dt = time.monotonic() - t0
    assert dt < 300.0
    print(
        f"criterion 3: PASS (monotone+concave 20 pairs x 3 models, "
        f"psi sweeps nonincreasing, dF/deta vs psi {worst_fd:.1e} <= 1e-3; "
        f"{dt:.1f}s < 300s)"
    )


def test_criterion_4_inner_solver_certificates(ex41_problem):
    rng = np.random.default_rng(31)
    worst_kkt = 0.0
    for _ in range(50):
        K = rng.standard_normal((8, 8))
        g = rng.standard_normal(8)
        eta = (10.0 ** rng.uniform(-3, -1), 10.0 ** rng.uniform(-3, -1))
        sol = solve_elastic_net(K, g, eta)
        assert sol.converged
        viol = enet_kkt_violation(K, g, sol.u, eta)
        worst_kkt = max(worst_kkt, viol)
        assert viol <= 1e-6

    p = ex41_problem
    worst_gap = -np.inf
    for eta in ((1e-4, 1e-4), (1e-2, 1e-3)):
        sol = solve_h1tv(p.K, p.g_obs, eta, p.grid.h)
        J_admm = h1tv_objective(p.K, p.g_obs, sol.u, eta, p.grid.h)
        J_ref = h1tv_subgrad_descent(p.K, p.g_obs, eta, p.grid.h, iters=2000)
        worst_gap = max(worst_gap, J_admm - J_ref)
        assert J_admm <= J_ref + 1e-8
    print(
        f"criterion 4: PASS (worst elastic-net KKT violation {worst_kkt:.1e} "
        f"<= 1e-6 over 50 instances; ADMM vs subgradient oracle gap "
        f"{worst_gap:.1e} <= 1e-8 at two eta)"
    )


def test_criterion_5_error_tables_at_desk_scale():
    t0 = time.monotonic()
    lines = []

    # denoising-deblurring 1-D example: near-oracle error, beats both
    # single penalties
    prob, model, res, e_bdp = _bdp_error("ex41", 5e-2, 909)
    osolver = _ORACLE_SOLVER["ex41"]
    _, e_opt = oracle_grid(prob, model, GridSpec.log_default(), osolver)
    _, e_h1 = oracle_grid(prob, model, _single_grid("h1"), osolver)
    _, e_tv = oracle_grid(prob, model, _single_grid("tv"), osolver)
    assert e_bdp <= 3.0 * e_opt, f"e_bdp={e_bdp:.3e} vs 3*e_opt={3 * e_opt:.3e}"
    assert e_bdp < min(e_h1, e_tv), (
        f"e_bdp={e_bdp:.3e} vs singles ({e_h1:.3e}, {e_tv:.3e})"
    )
    lines.append(
        f"ex41 e_bdp={e_bdp:.2e} <= 3*e_opt={3 * e_opt:.2e}, "
        f"< min(e_h1={e_h1:.2e}, e_tv={e_tv:.2e})"
    )

    # error decreases with the noise level
    errs = [_bdp_error("ex41", eps, 1010)[3] for eps in (5e-2, 5e-3, 5e-4)]
    assert errs[0] > errs[1] > errs[2], f"no decreasing trend: {errs}"
    lines.append(
        "ex41 trend " + " > ".join(f"{e:.2e}" for e in errs)
    )

    # sparse spike reconstruction at tiny noise
    prob, model, res, e_bdp = _bdp_error("ex42", 5e-6, 909)
    osolver = _ORACLE_SOLVER["ex42"]
    _, e_l1 = oracle_grid(prob, model, _single_grid("l1"), osolver)
    _, e_l2 = oracle_grid(prob, model, _single_grid("l2"), osolver)
    assert e_bdp < e_l1 and e_bdp < e_l2, (
        f"e_bdp={e_bdp:.3e} vs singles ({e_l1:.3e}, {e_l2:.3e})"
    )
    lines.append(
        f"ex42 e_bdp={e_bdp:.2e} < e_l1={e_l1:.2e}, < e_l2={e_l2:.2e}"
    )

    # image deblurring from half the pixels
    prob, model, res, e_bdp = _bdp_error("ex43", 1e-2, 909)
    osolver = _ORACLE_SOLVER["ex43"]
    _, e_l1 = oracle_grid(prob, model, _single_grid("l1"), osolver)
    _, e_l2 = oracle_grid(prob, model, _single_grid("l2"), osolver)
    assert e_bdp < e_l1, f"e_bdp={e_bdp:.3e} vs e_l1={e_l1:.3e}"
    assert e_bdp < 1.5 * e_l2, f"e_bdp={e_bdp:.3e} vs 1.5*e_l2={1.5 * e_l2:.3e}"
    lines.append(
        f"ex43 e_bdp={e_bdp:.2e} < e_l1={e_l1:.2e}, < 1.5*e_l2={1.5 * e_l2:.2e}"
    )

    dt = time.monotonic() - t0
    assert dt < 600.0
    print(
        "criterion 5: PASS ("
        + "; ".join(lines)
        + f"; {dt:.0f}s < 600s)"
    )


def test_criterion_6_broyden_iteration_economy():
    prob = make_test_problem("ex41", eps=5e-2, seed=404)
    model = _default_model(prob, "ex41")
    res = select_broyden(prob, model)
    iters = int(res.trace[-1, 0])
    assert res.converged
    assert iters <= 15
    print(f"criterion 6: PASS (converged in {iters} outer iterations <= 15)")


def test_criterion_7_reproduce_is_deterministic(tmp_path, capsys):
    args = [
        "reproduce",
        "table1",
        "--eps",
        "5e-2",
        "--n",
        "60",
        "--grid",
        "8",
        "--seed",
        "5",
        "--no-plot",
    ]
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(args + ["--out", str(out)])
        capsys.readouterr()
        outs.append(out)
    t1 = (outs[0] / "table.csv").read_bytes()
    t2 = (outs[1] / "table.csv").read_bytes()
    assert t1 == t2
    m1 = (outs[0] / "meta.txt").read_bytes()
    m2 = (outs[1] / "meta.txt").read_bytes()
    assert m1 == m2
    print(
        f"criterion 7: PASS (two identical runs, table.csv {len(t1)} bytes "
        "byte-identical)"
    )
