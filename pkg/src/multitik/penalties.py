"""Penalty functionals and the two-penalty models built from them.

Four penalty kinds are supported on a uniform grid with spacing h:

  sq-l2   psi(u) = 1/2 ||u||_2^2
  sq-h1   psi(u) = sum_i ((u_{i+1} - u_i))^2 / h        (discrete |u|_{H^1}^2)
  tv      psi(u) = sum_i |u_{i+1} - u_i|                (1-D), or the
          anisotropic/isotropic pixel-difference sum in 2-D
  l1      psi(u) = ||u||_1

Differences are forward differences with Neumann (no wrap) ends, so a
constant signal has zero sq-h1 and tv penalty. The squared kinds are
2-homogeneous, tv and l1 are 1-homogeneous.
"""

from dataclasses import dataclass

import numpy as np

_KINDS = ("sq-l2", "sq-h1", "tv", "l1")


@dataclass(frozen=True)
class Penalty:
    """One penalty functional.

    h matters only for sq-h1. shape enables 2-D tv on row-major flattened
    images; isotropic picks sqrt(dx^2 + dy^2) per pixel instead of
    |dx| + |dy|.
    """

    kind: str
    h: float = 1.0
    shape: tuple | None = None
    isotropic: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.shape is not None:
            object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    @property
    def degree(self):
        """Homogeneity degree p with psi(c u) = |c|^p psi(u)."""
        return 2 if self.kind in ("sq-l2", "sq-h1") else 1

    @property
    def is_quadratic(self):
        return self.kind in ("sq-l2", "sq-h1")


def forward_diff_matrix(n):
    """(n-1) x n forward-difference matrix, rows u[i+1] - u[i]."""
    D = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    D[idx, idx] = -1.0
    D[idx, idx + 1] = 1.0
    return D


def eval_penalty(penalty, u):
    u = np.asarray(u, dtype=float).ravel()
    if not np.all(np.isfinite(u)):
        raise ValueError("penalty evaluation needs finite input")
    kind = penalty.kind
    if kind == "sq-l2":
        return 0.5 * float(u @ u)
    if kind == "l1":
        return float(np.sum(np.abs(u)))
    if kind == "sq-h1":
        d = np.diff(u)
        return float(d @ d) / penalty.h
    # tv
    if penalty.shape is not None and len(penalty.shape) == 2:
        U = u.reshape(penalty.shape)
        dx = np.diff(U, axis=0)
        dy = np.diff(U, axis=1)
        if penalty.isotropic:
            # pad the short axes so the pixelwise norm lines up
            gx = np.zeros(penalty.shape)
            gy = np.zeros(penalty.shape)
            gx[:-1, :] = dx
            gy[:, :-1] = dy
            return float(np.sum(np.hypot(gx, gy)))
        return float(np.sum(np.abs(dx)) + np.sum(np.abs(dy)))
    return float(np.sum(np.abs(np.diff(u))))


def penalty_operator(penalty, n):
    """Matrix L with psi(u) = 1/2 ||L u||^2, for the quadratic kinds only."""
    if penalty.kind == "sq-l2":
        return np.eye(n)
    if penalty.kind == "sq-h1":
        return np.sqrt(2.0 / penalty.h) * forward_diff_matrix(n)
    raise ValueError(f"penalty kind {penalty.kind!r} is not quadratic")


def soft_threshold(x, tau):
    """Componentwise soft shrinkage: sign(x) * max(|x| - tau, 0).

    This is the proximal map of tau*||.||_1, so for each component it
    minimizes 1/2 (v - x)^2 + tau |v| over v.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


_MODEL_PAIRS = {
    ("sq-h1", "tv"): "h1-tv",
    ("l1", "sq-l2"): "elastic-net",
    ("sq-l2", "sq-l2"): "quad-quad",
    ("sq-l2", "sq-h1"): "quad-quad",
    ("sq-h1", "sq-l2"): "quad-quad",
    ("sq-h1", "sq-h1"): "quad-quad",
}


@dataclass(frozen=True)
class PenaltyModel:
    """An ordered pair of penalties defining J_eta = phi + eta1 psi1 + eta2 psi2.

    Only pairs with a dedicated solver are accepted; model_id names the
    solver family ("h1-tv", "elastic-net", "quad-quad").
    """

    psi1: Penalty
    psi2: Penalty

    def __post_init__(self):
        key = (self.psi1.kind, self.psi2.kind)
        if key not in _MODEL_PAIRS:
            raise ValueError(f"unsupported penalty pair {key}")

    @property
    def model_id(self):
        return _MODEL_PAIRS[(self.psi1.kind, self.psi2.kind)]

    def eval(self, u):
        return (eval_penalty(self.psi1, u), eval_penalty(self.psi2, u))


def make_model(model_id, h=1.0, shape=None):
    """Build one of the named models on a grid with spacing h.

    "l2-l2" is the symmetric ridge pair (both penalties sq-l2); it
    classifies as quad-quad and exists mainly for closed-form checks.
    """
    if model_id == "h1-tv":
        return PenaltyModel(Penalty("sq-h1", h=h), Penalty("tv", h=h, shape=shape))
    if model_id == "elastic-net":
        return PenaltyModel(Penalty("l1"), Penalty("sq-l2"))
    if model_id == "quad-quad":
        return PenaltyModel(Penalty("sq-h1", h=h), Penalty("sq-l2"))
    if model_id == "l2-l2":
        return PenaltyModel(Penalty("sq-l2"), Penalty("sq-l2"))
    raise ValueError(f"unknown model id {model_id!r}")
