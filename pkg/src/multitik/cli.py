"""Command line front end.

Subcommands:
  make-problem   build a test problem and write its CSV bundle
  solve          solve one instance at a fixed eta
  select         run a parameter choice rule (bdp | balance | oracle)
  reproduce      full experiment table (table1 | table2 | deblur)

A config file (--config, plain key=value lines, keys named like the long
flags) supplies defaults; explicit flags win. Every run writes meta.txt
with the resolved configuration. Numeric CSV cells are %.17e so re-parsing
round-trips exactly and repeated runs are byte-identical. Exit status is 0
only if every requested sub-run converged.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import MultitikError, TRACE_COLUMNS
from .penalties import make_model
from .problems import (
    DEFAULT_MODEL,
    load_problem,
    make_test_problem,
    save_problem,
)
from .selection import (
    GridSpec,
    SelectionOptions,
    oracle_grid,
    relative_error,
    select_broyden,
    select_fixed_point,
)
from .solvers import SolverOptions, solve_tikhonov

_FMT = "%.17e"

REPRODUCE_TARGETS = {
    # target: (example, default eps list, single-penalty column names)
    "table1": ("ex41", (5e-2, 5e-3, 5e-4), ("h1", "tv")),
    "table2": ("ex42", (5e-3, 5e-4, 5e-5, 5e-6), ("l1", "l2")),
    "deblur": ("ex43", (1e-2,), ("l1", "l2")),
}

# oracle inner-solver settings per example; the deblurring image is large
# enough that oracle sweeps need a looser, capped solver
_ORACLE_SOLVER = {
    "ex41": SolverOptions(tol=1e-7, max_iter=4000),
    "ex42": SolverOptions(),
    "ex43": SolverOptions(tol=1e-8, max_iter=2000),
}


@dataclass
class ExperimentConfig:
    example: str
    eps_list: list
    seed: int = 0
    gamma: float = 1.0
    c_m: float = 1.0
    grid: int = 25
    out_dir: Path = Path("multitik-out")
    n: int | None = None
    plot: bool = True
    singles: tuple = ()

    def __post_init__(self):
        if not self.eps_list or any(e <= 0 for e in self.eps_list):
            raise ValueError("eps_list must be nonempty with positive entries")


def _write_meta(out_dir, pairs):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "meta.txt", "w") as f:
        for k, v in pairs:
            f.write(f"{k}={v}\n")


def _fmt(x):
    return _FMT % x


def _write_trace(path, trace):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for row in np.atleast_2d(trace):
            f.write(",".join(_FMT % v for v in row) + "\n")


def _svg_line_plot(path, x, series, labels, title):
    """Minimal standalone SVG: axes box, one polyline per series, legend."""
    w, hgt = 640.0, 360.0
    ml, mr, mt, mb = 50.0, 15.0, 30.0, 35.0
    pw, ph = w - ml - mr, hgt - mt - mb
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in series]
    ymin = min(float(y.min()) for y in ys)
    ymax = max(float(y.max()) for y in ys)
    if ymax == ymin:
        ymax = ymin + 1.0
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad
    xmin, xmax = float(x.min()), float(x.max())

    def sx(v):
        return ml + (v - xmin) / (xmax - xmin) * pw

    def sy(v):
        return mt + (ymax - v) / (ymax - ymin) * ph

    colors = ("#888888", "#c0392b", "#2471a3")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" '
        f'height="{hgt:.0f}" viewBox="0 0 {w:.0f} {hgt:.0f}">',
        f'<rect width="{w:.0f}" height="{hgt:.0f}" fill="white"/>',
        f'<text x="{ml:.1f}" y="18" font-family="sans-serif" '
        f'font-size="13">{title}</text>',
        f'<rect x="{ml:.1f}" y="{mt:.1f}" width="{pw:.1f}" height="{ph:.1f}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    for i, (y, lab) in enumerate(zip(ys, labels)):
        pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(x, y))
        col = colors[i % len(colors)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{col}" '
            'stroke-width="1.5"/>'
        )
        lx = ml + pw - 120
        lyy = mt + 16 + 16 * i
        parts.append(
            f'<line x1="{lx:.1f}" y1="{lyy:.1f}" x2="{lx + 24:.1f}" '
            f'y2="{lyy:.1f}" stroke="{col}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{lx + 30:.1f}" y="{lyy + 4:.1f}" '
            f'font-family="sans-serif" font-size="12">{lab}</text>'
        )
    for v, anchor, xx, yy in (
        (ymin, "end", ml - 4, mt + ph),
        (ymax, "end", ml - 4, mt + 8),
    ):
        parts.append(
            f'<text x="{xx:.1f}" y="{yy:.1f}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    for v, xx in ((xmin, ml), (xmax, ml + pw)):
        parts.append(
            f'<text x="{xx:.1f}" y="{mt + ph + 16:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    parts.append("</svg>")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")


def _parse_eta(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("eta must be two comma-separated numbers")
    return tuple(parts)


def _parse_eps_list(text):
    return [float(p) for p in text.split(",")]


def _eps_label(eps):
    return f"{eps:.0e}".replace("-0", "-").replace("+0", "+")


def _single_grid(name, npts):
    g = np.logspace(-10, 0, npts)
    zero = np.array([0.0])
    # the pinned-zero axis reduces the pair oracle to one penalty
    if name in ("h1", "l1"):
        return GridSpec(g, zero)
    return GridSpec(zero, g)


def _single_eta_value(name, pair):
    return pair[0] if name in ("h1", "l1") else pair[1]


def cmd_make_problem(args):
    prob = make_test_problem(args.example, n=args.n, eps=args.eps, seed=args.seed)
    out = Path(args.out)
    save_problem(prob, out, eps=args.eps, seed=args.seed, example=args.example)
    print(f"wrote problem bundle to {out}")
    return 0


def _load_bundle(args):
    prob = load_problem(args.problem)
    meta = {}
    with open(Path(args.problem) / "meta.txt") as f:
        for line in f:
            if ":" in line:
                k, v = line.split(":", 1)
                meta[k.strip()] = v.strip()
    example = meta.get("example") or None
    model_id = args.model or (example and DEFAULT_MODEL.get(example))
    if model_id is None:
        raise MultitikError("bundle does not name an example; pass --model")
    shape = prob.shape if len(prob.shape) == 2 else None
    model = make_model(model_id, h=prob.grid.h, shape=shape)
    return prob, model


def cmd_solve(args):
    prob, model = _load_bundle(args)
    opts = SolverOptions(tol=args.tol, max_iter=args.max_iter)
    sol = solve_tikhonov(prob, model, args.eta, opts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "u.csv", sol.u, fmt=_FMT, delimiter=",")
    pairs = [
        ("command", "solve"),
        ("problem", args.problem),
        ("model", model.model_id),
        ("eta1", _fmt(args.eta[0])),
        ("eta2", _fmt(args.eta[1])),
        ("phi", _fmt(sol.phi)),
        ("psi1", _fmt(sol.psi[0])),
        ("psi2", _fmt(sol.psi[1])),
        ("iterations", sol.iterations),
        ("converged", sol.converged),
        ("inner_residual", _fmt(sol.inner_residual)),
    ]
    if prob.u_true is not None:
        pairs.append(("relative_error", _fmt(relative_error(sol.u, prob.u_true))))
    _write_meta(out, pairs)
    print(f"phi={sol.phi:.6e} converged={sol.converged}")
    return 0 if sol.converged else 1


def cmd_select(args):
    prob, model = _load_bundle(args)
    out = Path(args.out)
    sopts = SelectionOptions(
        gamma=args.gamma,
        c_m=args.cm,
        outer_tol=args.tol if args.tol is not None else 1e-6,
        outer_max_iter=args.max_iter,
    )
    pairs = [
        ("command", f"select {args.principle}"),
        ("problem", args.problem),
        ("model", model.model_id),
        ("gamma", args.gamma),
        ("c_m", args.cm),
    ]
    if args.principle == "oracle":
        spec = GridSpec.log_default(args.grid, args.grid)
        eta, err = oracle_grid(prob, model, spec)
        e = eta.as_array() if hasattr(eta, "as_array") else np.array(eta)
        print(f"{_fmt(e[0])} {_fmt(e[1])}")
        pairs += [
            ("eta1", _fmt(e[0])),
            ("eta2", _fmt(e[1])),
            ("error", _fmt(err)),
            ("converged", True),
        ]
        _write_meta(out, pairs)
        return 0
    if args.principle == "bdp":
        res = select_broyden(prob, model, opts=sopts)
    else:
        res = select_fixed_point(prob, model, opts=sopts)
    print(f"{_fmt(res.eta_star.eta1)} {_fmt(res.eta_star.eta2)}")
    pairs += [
        ("eta1", _fmt(res.eta_star.eta1)),
        ("eta2", _fmt(res.eta_star.eta2)),
        ("weight_t", _fmt(res.weight_t)),
        ("converged", res.converged),
        ("message", res.message),
    ]
    if prob.u_true is not None:
        pairs.append(
            ("relative_error", _fmt(relative_error(res.solution.u, prob.u_true)))
        )
    _write_meta(out, pairs)
    _write_trace(out / "traces" / f"select_{args.principle}.csv", res.trace)
    return 0 if res.converged else 1


def cmd_reproduce(cfg):
    """One table row per eps: balanced-discrepancy point, pair oracle,
    single-penalty oracles. Sub-run failures are recorded in the row and
    the run continues."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    s1, s2 = cfg.singles
    header = (
        "eps,eta_bdp1,eta_bdp2,eta_opt1,eta_opt2,"
        f"eta_{s1},eta_{s2},e_bdp,e_opt,e_{s1},e_{s2},status"
    )
    rows = []
    all_ok = True
    osolver = _ORACLE_SOLVER[cfg.example]
    for eps in cfg.eps_list:
        prob = make_test_problem(cfg.example, n=cfg.n, eps=eps, seed=cfg.seed)
        shape = prob.shape if len(prob.shape) == 2 else None
        model = make_model(DEFAULT_MODEL[cfg.example], h=prob.grid.h, shape=shape)
        status = []
        cells = {}

        try:
            res = select_broyden(
                prob, model, opts=SelectionOptions(c_m=cfg.c_m)
            )
            cells["eta_bdp"] = res.eta_star.as_array()
            cells["e_bdp"] = relative_error(res.solution.u, prob.u_true)
            if not res.converged:
                status.append(f"bdp:{res.message}")
                all_ok = False
            _write_trace(
                out / "traces" / f"bdp_eps{_eps_label(eps)}.csv", res.trace
            )
            if cfg.plot and prob.grid.points is not None:
                _svg_line_plot(
                    out / "plots" / f"u_bdp_eps{_eps_label(eps)}.svg",
                    prob.grid.points,
                    [prob.u_true, res.solution.u],
                    ["u_true", "u_bdp"],
                    f"{cfg.example} eps={eps:g}: balanced discrepancy",
                )
        except MultitikError as exc:
            status.append(f"bdp-failed:{exc}")
            all_ok = False

        try:
            spec = GridSpec.log_default(cfg.grid, cfg.grid)
            eta_opt, e_opt = oracle_grid(prob, model, spec, osolver)
            cells["eta_opt"] = (
                eta_opt.as_array()
                if hasattr(eta_opt, "as_array")
                else np.array(eta_opt)
            )
            cells["e_opt"] = e_opt
        except MultitikError as exc:
            status.append(f"oracle-pair-failed:{exc}")
            all_ok = False

        for name in cfg.singles:
            try:
                pair, e_single = oracle_grid(
                    prob, model, _single_grid(name, cfg.grid), osolver
                )
                pair = pair.as_array() if hasattr(pair, "as_array") else pair
                cells[f"eta_{name}"] = _single_eta_value(name, pair)
                cells[f"e_{name}"] = e_single
            except MultitikError as exc:
                status.append(f"oracle-{name}-failed:{exc}")
                all_ok = False

        def num(key, sub=None):
            v = cells.get(key)
            if v is None:
                return "nan"
            if sub is not None:
                v = v[sub]
            return _fmt(v)

        rows.append(
            ",".join(
                [
                    _fmt(eps),
                    num("eta_bdp", 0),
                    num("eta_bdp", 1),
                    num("eta_opt", 0),
                    num("eta_opt", 1),
                    num(f"eta_{s1}"),
                    num(f"eta_{s2}"),
                    num("e_bdp"),
                    num("e_opt"),
                    num(f"e_{s1}"),
                    num(f"e_{s2}"),
                    "ok" if not status else ";".join(status).replace(",", " "),
                ]
            )
        )

    (out / "table.csv").write_text(header + "\n" + "\n".join(rows) + "\n")
    meta = [
        ("command", "reproduce"),
        ("example", cfg.example),
        ("eps_list", ",".join(_fmt(e) for e in cfg.eps_list)),
        ("seed", cfg.seed),
        ("gamma", cfg.gamma),
        ("c_m", cfg.c_m),
        ("grid", cfg.grid),
        ("n", cfg.n if cfg.n is not None else "default"),
        ("plot", cfg.plot),
    ]
    _write_meta(out, meta)
    print((out / "table.csv").read_text(), end="")
    return 0 if all_ok else 1


def _load_config(path):
    cfg = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def build_parser():
    p = argparse.ArgumentParser(
        prog="multitik",
        description="Two-parameter Tikhonov regularization with automatic "
        "parameter balancing",
    )
    p.add_argument("--config", help="key=value defaults file; flags override")
    sub = p.add_subparsers(dest="command", required=True)

    mk = sub.add_parser("make-problem", help="build a test problem bundle")
    mk.add_argument("--example", required=True, choices=("ex41", "ex42", "ex43"))
    mk.add_argument("--n", type=int, default=None)
    mk.add_argument("--eps", type=float, default=0.0)
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("--out", required=True)
    mk.set_defaults(func=cmd_make_problem)

    sv = sub.add_parser("solve", help="solve at a fixed eta")
    sv.add_argument("--problem", required=True, help="problem bundle directory")
    sv.add_argument("--model", choices=("h1-tv", "elastic-net", "quad-quad", "l2-l2"))
    sv.add_argument("--eta", required=True, type=_parse_eta)
    sv.add_argument("--tol", type=float, default=None)
    sv.add_argument("--max-iter", type=int, default=None)
    sv.add_argument("--out", required=True)
    sv.set_defaults(func=cmd_solve)

    se = sub.add_parser("select", help="run a parameter choice rule")
    se.add_argument("principle", choices=("bdp", "balance", "oracle"))
    se.add_argument("--problem", required=True)
    se.add_argument("--model", choices=("h1-tv", "elastic-net", "quad-quad", "l2-l2"))
    se.add_argument("--gamma", type=float, default=1.0)
    se.add_argument("--cm", type=float, default=1.0)
    se.add_argument("--tol", type=float, default=None)
    se.add_argument("--max-iter", type=int, default=None)
    se.add_argument("--grid", type=int, default=25)
    se.add_argument("--out", required=True)
    se.set_defaults(func=cmd_select)

    rp = sub.add_parser("reproduce", help="reproduce an experiment table")
    rp.add_argument("target", choices=tuple(REPRODUCE_TARGETS))
    rp.add_argument("--eps", type=_parse_eps_list, default=None)
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--cm", type=float, default=1.0)
    rp.add_argument("--gamma", type=float, default=1.0)
    rp.add_argument("--grid", type=int, default=25)
    rp.add_argument("--n", type=int, default=None)
    rp.add_argument("--no-plot", action="store_true")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=None)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if "--config" in argv:
        i = argv.index("--config")
        cfg = _load_config(argv[i + 1])
        # defaults live on the subparsers; apply only to the one being
        # invoked (key names repeat across subcommands with different
        # types), running values through the same type= converters as
        # command line text would
        choices = parser._subparsers._group_actions[0].choices
        invoked = next((t for t in argv if t in choices), None)
        if invoked is not None:
            sp = choices[invoked]
            typed = {}
            for a in sp._actions:
                if a.dest in cfg and a.dest != "help":
                    raw = cfg[a.dest]
                    if isinstance(a.const, bool):
                        typed[a.dest] = raw.lower() in ("1", "true", "yes")
                    else:
                        typed[a.dest] = a.type(raw) if a.type else raw
            sp.set_defaults(**typed)
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            example, default_eps, singles = REPRODUCE_TARGETS[args.target]
            cfg = ExperimentConfig(
                example=example,
                eps_list=args.eps if args.eps is not None else list(default_eps),
                seed=args.seed,
                gamma=args.gamma,
                c_m=args.cm,
                grid=args.grid,
                out_dir=Path(args.out),
                n=args.n,
                plot=not args.no_plot,
                singles=singles,
            )
            return cmd_reproduce(cfg)
        return args.func(args)
    except (MultitikError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
