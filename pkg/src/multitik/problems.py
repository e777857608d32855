"""Built-in test problems: two 1-D Fredholm convolutions and a subsampled
2-D Gaussian deblurring, plus the noise model and a CSV bundle format.

Discretization conventions (these fix what every eta value means):

  * 1-D: midpoint rule on a uniform grid, t_j = a + (j - 1/2) h with
    h = (b - a)/n, collocation points s_i = t_i, entries K_ij = h k(s_i, t_j).
  * 2-D: K applies a separable Gaussian blur (kernel truncated and
    normalized to unit sum, replicate boundary) to the row-major flattened
    image, then keeps a deterministic subset of pixel rows.

Noise: g_obs_i = g_true_i + max_i|g_true_i| * eps * zeta_i with zeta drawn
once from numpy's default_rng(seed) as standard_normal(m); the stored
delta is the realized norm ||g_obs - g_true||, so the discrepancy level is
attainable by construction.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Grid, Problem

KERNEL_IDS = ("h1tv-convolution", "bump-kernel", "gaussian-blur")


@dataclass(frozen=True)
class KernelSpec:
    """Recipe for one forward operator.

    interval and n drive the 1-D kernels; blur_sigma, blur_width and
    subsample drive the 2-D blur (n is then the image side length).
    """

    id: str
    n: int = 100
    interval: tuple = (0.0, 1.0)
    blur_sigma: float = 1.0
    blur_width: int = 5
    subsample: float = 1.0

    def __post_init__(self):
        if self.id not in KERNEL_IDS:
            raise ValueError(f"unknown kernel id {self.id!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.blur_width % 2 != 1:
            raise ValueError("blur_width must be odd")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        object.__setattr__(
            self, "interval", (float(self.interval[0]), float(self.interval[1]))
        )


def midpoint_grid(a, b, n):
    h = (b - a) / n
    return a + (np.arange(n) + 0.5) * h, h


def _blur_1d(n, sigma, width):
    """1-D discrete Gaussian blur, unit-sum kernel, replicate boundary."""
    half = width // 2
    off = np.arange(-half, half + 1)
    w = np.exp(-(off.astype(float) ** 2) / (2.0 * sigma**2))
    w /= w.sum()
    B = np.zeros((n, n))
    for i in range(n):
        for d, wd in zip(off, w):
            j = min(max(i + d, 0), n - 1)
            B[i, j] += wd
    return B


def subsample_mask(n_pixels, subsample):
    """Deterministic retained-row mask: every round(1/subsample)-th pixel
    in row-major order. subsample=1 keeps everything."""
    step = int(round(1.0 / subsample))
    return np.arange(n_pixels) % step == 0


def discretize_kernel(spec):
    """Assemble the forward matrix K for a KernelSpec."""
    if spec.id == "h1tv-convolution":
        t, h = midpoint_grid(*spec.interval, spec.n)
        tau = t[:, None] - t[None, :]
        K = np.where(np.abs(tau) <= 3.0, 1.0 + np.cos(np.pi * tau / 3.0), 0.0)
        return h * K
    if spec.id == "bump-kernel":
        t, h = midpoint_grid(*spec.interval, spec.n)
        tau = t[:, None] - t[None, :]
        return h * 0.25 * (1.0 / 16.0 + tau**2) ** (-1.5)
    # gaussian-blur: kron(B, B) acts on row-major vec(U) as B U B^T
    B = _blur_1d(spec.n, spec.blur_sigma, spec.blur_width)
    K = np.kron(B, B)
    mask = subsample_mask(spec.n * spec.n, spec.subsample)
    return K[mask]


def add_noise(g_true, eps, seed, zeta=None):
    """Additive scaled Gaussian noise; returns (g_obs, realized delta).

    zeta overrides the random draw (testing hook). The seed-to-stream
    mapping is fixed: default_rng(seed).standard_normal(len(g_true)).
    """
    g_true = np.asarray(g_true, dtype=float)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return g_true.copy(), 0.0
    if zeta is None:
        zeta = np.random.default_rng(seed).standard_normal(g_true.shape[0])
    else:
        zeta = np.asarray(zeta, dtype=float)
    g_obs = g_true + np.max(np.abs(g_true)) * eps * zeta
    return g_obs, float(np.linalg.norm(g_obs - g_true))


def phantom_ex41(t):
    # flat block next to a C^1 cosine bump: flat and smoothly varying
    # regions, with jumps only at the block edges
    u = np.zeros_like(t)
    m = (t >= 0.5) & (t <= 5.5)
    u[m] = 0.5 * (1.0 + np.cos(2.0 * np.pi * (t[m] - 3.0) / 5.0))
    u[(t >= -4.5) & (t <= -1.5)] = 0.7
    return u


def phantom_ex42(t):
    # two narrow bumps of different height
    return np.exp(-((t - 0.3) ** 2) / (2 * 0.03**2)) + 0.8 * np.exp(
        -((t - 0.7) ** 2) / (2 * 0.03**2)
    )


def phantom_ex43(n):
    # two filled blocks and a plus-shaped cross, intensity 1
    U = np.zeros((n, n))
    q = n / 50.0  # pinned geometry is on a 50x50 canvas; scale for other n

    def sl(lo, hi):
        return slice(int(round(lo * q)), int(round(hi * q)))

    U[sl(5, 16), sl(5, 16)] = 1.0
    U[sl(30, 43), sl(6, 17)] = 1.0
    U[sl(33, 37), sl(26, 45)] = 1.0
    U[sl(25, 44), sl(33, 37)] = 1.0
    return U


EXAMPLES = ("ex41", "ex42", "ex43")

#: penalty model each example is normally solved with
DEFAULT_MODEL = {"ex41": "h1-tv", "ex42": "elastic-net", "ex43": "elastic-net"}


def make_test_problem(example, n=None, eps=0.0, seed=0, subsample=None):
    """Build one of the named test problems with noisy data.

    n defaults to 100 for the 1-D examples and 50 (image side) for ex43;
    subsample applies to ex43 only and defaults to 0.5.
    """
    if example == "ex41":
        n = 100 if n is None else int(n)
        spec = KernelSpec("h1tv-convolution", n=n, interval=(-6.0, 6.0))
        t, h = midpoint_grid(*spec.interval, n)
        u_true = phantom_ex41(t)
        grid = Grid(h=h, points=t)
        shape = (n,)
    elif example == "ex42":
        n = 100 if n is None else int(n)
        spec = KernelSpec("bump-kernel", n=n, interval=(0.0, 1.0))
        t, h = midpoint_grid(*spec.interval, n)
        u_true = phantom_ex42(t)
        grid = Grid(h=h, points=t)
        shape = (n,)
    elif example == "ex43":
        n = 50 if n is None else int(n)
        subsample = 0.5 if subsample is None else float(subsample)
        spec = KernelSpec("gaussian-blur", n=n, subsample=subsample)
        u_true = phantom_ex43(n).ravel()
        grid = Grid(h=1.0)
        shape = (n, n)
    else:
        raise ValueError(f"unknown example {example!r}")

    K = discretize_kernel(spec)
    g_true = K @ u_true
    g_obs, delta = add_noise(g_true, eps, seed)
    return Problem(
        K=K,
        g_obs=g_obs,
        delta=delta,
        grid=grid,
        shape=shape,
        u_true=u_true,
        g_true=g_true,
    )


# ---------------------------------------------------------------------------
# CSV bundle

_FMT = "%.17e"


def save_problem(problem, out_dir, eps=None, seed=None, example=None):
    """Write a problem as a CSV bundle into out_dir.

    Files: K.csv (row-major), u_true.csv, g_obs.csv, g_true.csv (when
    present), meta.txt with key: value lines. eps/seed/example are
    provenance the Problem itself does not carry; pass them if known.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "K.csv", problem.K, fmt=_FMT, delimiter=",")
    np.savetxt(out / "g_obs.csv", problem.g_obs, fmt=_FMT, delimiter=",")
    if problem.u_true is not None:
        np.savetxt(out / "u_true.csv", problem.u_true, fmt=_FMT, delimiter=",")
    if problem.g_true is not None:
        np.savetxt(out / "g_true.csv", problem.g_true, fmt=_FMT, delimiter=",")
    meta = {
        "n": problem.n,
        "m": problem.m,
        "delta": _FMT % problem.delta,
        "eps": "" if eps is None else _FMT % eps,
        "seed": "" if seed is None else int(seed),
        "shape": "x".join(str(s) for s in problem.shape),
        "h": _FMT % problem.grid.h,
        "t0": ""
        if problem.grid.points is None
        else _FMT % problem.grid.points[0],
        "example": example or "",
    }
    with open(out / "meta.txt", "w") as f:
        for k, v in meta.items():
            f.write(f"{k}: {v}\n")


def load_problem(in_dir):
    """Read a CSV bundle written by save_problem."""
    src = Path(in_dir)
    meta = {}
    with open(src / "meta.txt") as f:
        for line in f:
            if ":" in line:
                k, v = line.split(":", 1)
                meta[k.strip()] = v.strip()
    K = np.loadtxt(src / "K.csv", delimiter=",", ndmin=2)
    g_obs = np.loadtxt(src / "g_obs.csv", delimiter=",", ndmin=1)
    u_true = None
    if (src / "u_true.csv").exists():
        u_true = np.loadtxt(src / "u_true.csv", delimiter=",", ndmin=1)
    g_true = None
    if (src / "g_true.csv").exists():
        g_true = np.loadtxt(src / "g_true.csv", delimiter=",", ndmin=1)
    shape = tuple(int(s) for s in meta["shape"].split("x"))
    h = float(meta["h"])
    points = None
    if meta.get("t0"):
        points = float(meta["t0"]) + np.arange(int(meta["n"])) * h
    return Problem(
        K=K,
        g_obs=g_obs,
        delta=float(meta["delta"]),
        grid=Grid(h=h, points=points),
        shape=shape,
        u_true=u_true,
        g_true=g_true,
    )
