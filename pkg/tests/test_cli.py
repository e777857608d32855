import numpy as np
import pytest

from multitik import (
    Grid,
    Problem,
    load_problem,
    make_model,
    save_problem,
    solve_tikhonov,
)
from multitik.cli import main


@pytest.fixture(scope="module")
def scalar_bundle(tmp_path_factory):
    # 1x1 identity problem whose selection roots are known in closed form
    p = Problem(
        K=np.array([[1.0]]),
        g_obs=np.array([1.0]),
        delta=0.5,
        grid=Grid(1.0, np.array([0.5])),
        shape=(1,),
        u_true=np.array([0.8]),
    )
    d = tmp_path_factory.mktemp("bundles") / "scalar"
    save_problem(p, d)
    return d


@pytest.fixture(scope="module")
def ex42_bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("bundles") / "ex42"
    rc = main(
        [
            "make-problem",
            "--example",
            "ex42",
            "--n",
            "40",
            "--eps",
            "5e-3",
            "--seed",
            "1",
            "--out",
            str(d),
        ]
    )
    assert rc == 0
    return d


def _printed_pair(capsys):
    line = capsys.readouterr().out.strip().splitlines()[-1]
    a, b = line.split()
    return float(a), float(b)


def test_make_problem_then_solve(tmp_path, capsys):
    bdir = tmp_path / "prob"
    rc = main(
        [
            "make-problem",
            "--example",
            "ex42",
            "--n",
            "40",
            "--seed",
            "7",
            "--out",
            str(bdir),
        ]
    )
    assert rc == 0
    assert (bdir / "K.csv").exists() and (bdir / "meta.txt").exists()
    odir = tmp_path / "run"
    rc = main(
        ["solve", "--problem", str(bdir), "--eta", "1e-3,1e-3", "--out", str(odir)]
    )
    assert rc == 0
    u = np.loadtxt(odir / "u.csv", delimiter=",")
    assert u.shape == (40,)
    meta = (odir / "meta.txt").read_text()
    assert "converged=True" in meta
    assert "model=elastic-net" in meta  # picked up from the bundle example
    capsys.readouterr()


def test_select_bdp_prints_closed_form_root(scalar_bundle, tmp_path, capsys):
    out = tmp_path / "sel"
    rc = main(
        [
            "select",
            "bdp",
            "--problem",
            str(scalar_bundle),
            "--model",
            "l2-l2",
            "--out",
            str(out),
        ]
    )
    e1, e2 = _printed_pair(capsys)
    assert rc == 0
    assert e1 == pytest.approx(0.5, abs=1e-6)
    assert e2 == pytest.approx(0.5, abs=1e-6)
    assert (out / "traces" / "select_bdp.csv").exists()


def test_select_balance_prints_gamma_quarter(scalar_bundle, tmp_path, capsys):
    out = tmp_path / "sel"
    rc = main(
        [
            "select",
            "balance",
            "--problem",
            str(scalar_bundle),
            "--model",
            "l2-l2",
            "--out",
            str(out),
        ]
    )
    e1, e2 = _printed_pair(capsys)
    assert rc == 0
    assert e1 == pytest.approx(0.25, abs=1e-6)
    assert e2 == pytest.approx(0.25, abs=1e-6)
    trace = np.loadtxt(
        out / "traces" / "select_balance.csv", delimiter=",", skiprows=1
    )
    assert trace.ndim == 2 and trace.shape[1] == 7


def test_select_oracle_small_grid(scalar_bundle, tmp_path, capsys):
    out = tmp_path / "sel"
    rc = main(
        [
            "select",
            "oracle",
            "--grid",
            "5",
            "--problem",
            str(scalar_bundle),
            "--model",
            "l2-l2",
            "--out",
            str(out),
        ]
    )
    e1, e2 = _printed_pair(capsys)
    assert rc == 0
    assert e1 > 0 and e2 > 0
    assert "error=" in (out / "meta.txt").read_text()


def test_solve_output_reparses_exactly(scalar_bundle, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(
        [
            "solve",
            "--problem",
            str(scalar_bundle),
            "--model",
            "l2-l2",
            "--eta",
            "0.3,0.2",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    prob = load_problem(scalar_bundle)
    sol = solve_tikhonov(prob, make_model("l2-l2"), (0.3, 0.2))
    u = np.atleast_1d(np.loadtxt(out / "u.csv", delimiter=","))
    assert np.array_equal(u, sol.u)
    capsys.readouterr()


def test_solve_runs_are_byte_identical(ex42_bundle, tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(
            [
                "solve",
                "--problem",
                str(ex42_bundle),
                "--eta",
                "1e-3,1e-3",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        outs.append(out)
    capsys.readouterr()
    assert (outs[0] / "u.csv").read_bytes() == (outs[1] / "u.csv").read_bytes()
    assert (outs[0] / "meta.txt").read_bytes() == (outs[1] / "meta.txt").read_bytes()


def test_reproduce_tiny_table_and_determinism(tmp_path, capsys):
    tables = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(
            [
                "reproduce",
                "table1",
                "--eps",
                "5e-2",
                "--n",
                "30",
                "--grid",
                "6",
                "--seed",
                "1",
                "--no-plot",
                "--out",
                str(out),
            ]
        )
        capsys.readouterr()
        tables.append(out / "table.csv")
        assert tables[-1].exists()
        assert not (out / "plots").exists()
    header, row = tables[0].read_text().strip().splitlines()
    assert header.startswith("eps,eta_bdp1,eta_bdp2,eta_opt1,eta_opt2,eta_h1")
    cells = row.split(",")
    assert len(cells) == len(header.split(","))
    assert float(cells[0]) == pytest.approx(5e-2)
    assert tables[0].read_bytes() == tables[1].read_bytes()


def test_reproduce_rejects_bad_eps(tmp_path, capsys):
    rc = main(
        ["reproduce", "table1", "--eps", "-1", "--out", str(tmp_path / "x")]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed=9\nn=25\n")
    d1 = tmp_path / "p1"
    rc = main(
        [
            "--config",
            str(cfg),
            "make-problem",
            "--example",
            "ex42",
            "--out",
            str(d1),
        ]
    )
    assert rc == 0
    meta = (d1 / "meta.txt").read_text()
    assert "seed: 9" in meta and "n: 25" in meta
    # explicit flags still win over the config file
    d2 = tmp_path / "p2"
    rc = main(
        [
            "--config",
            str(cfg),
            "make-problem",
            "--example",
            "ex42",
            "--seed",
            "3",
            "--out",
            str(d2),
        ]
    )
    assert rc == 0
    meta = (d2 / "meta.txt").read_text()
    assert "seed: 3" in meta and "n: 25" in meta
    capsys.readouterr()


def test_missing_bundle_is_reported(tmp_path, capsys):
    rc = main(
        [
            "solve",
            "--problem",
            str(tmp_path / "nothing-here"),
            "--eta",
            "1,1",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_bundle_without_example_needs_model(scalar_bundle, tmp_path, capsys):
    rc = main(
        [
            "solve",
            "--problem",
            str(scalar_bundle),
            "--eta",
            "1,1",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "--model" in capsys.readouterr().err


def test_malformed_eta_is_a_usage_error(scalar_bundle, tmp_path):
    with pytest.raises(SystemExit):
        main(
            [
                "solve",
                "--problem",
                str(scalar_bundle),
                "--eta",
                "1,2,3",
                "--out",
                str(tmp_path / "out"),
            ]
        )
