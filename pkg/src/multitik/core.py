"""Core value types shared across the package.

Everything here is an immutable record: arrays are stored as read-only
views so a solver cannot scribble on a problem it was handed.
"""

from dataclasses import dataclass, field

import numpy as np


class MultitikError(Exception):
    """Base class for errors raised by this package."""


class PenaltyDegenerate(MultitikError):
    """A penalty value vanished (or blew up) where the selection rules
    need it strictly positive and finite."""


class SingularJacobian(MultitikError):
    """The Broyden model Jacobian became numerically singular.

    Carries the iteration trace accumulated so far in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def _frozen_array(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform grid metadata for a discretized signal.

    h is the cell width; points holds the 1-D node coordinates (midpoints)
    when the signal is one dimensional, and is None for pixel images where
    the coordinates are implicit.
    """

    h: float
    points: np.ndarray | None = None

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.points is not None:
            object.__setattr__(self, "points", _frozen_array(self.points))


@dataclass(frozen=True)
class Problem:
    """A discrete linear inverse problem K u = g with noisy data.

    delta is the realized noise norm ||g_obs - g_true||_2, not the nominal
    one, so the discrepancy target is attainable by construction. shape is
    the shape of the unknown (e.g. (100,) for a signal, (50, 50) for an
    image); u vectors are stored flattened in row-major order.
    """

    K: np.ndarray
    g_obs: np.ndarray
    delta: float
    grid: Grid
    shape: tuple
    u_true: np.ndarray | None = None
    g_true: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "K", _frozen_array(self.K))
        object.__setattr__(self, "g_obs", _frozen_array(self.g_obs))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        for name in ("u_true", "g_true"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen_array(v))
        m, n = self.K.shape
        if self.g_obs.shape != (m,):
            raise ValueError(f"g_obs has shape {self.g_obs.shape}, expected ({m},)")
        if int(np.prod(self.shape)) != n:
            raise ValueError(f"shape {self.shape} does not match n={n}")
        if self.u_true is not None and self.u_true.shape != (n,):
            raise ValueError("u_true must be flattened to length n")
        if self.g_true is not None:
            if self.g_true.shape != (m,):
                raise ValueError("g_true must have length m")
            realized = float(np.linalg.norm(self.g_obs - self.g_true))
            tol = 1e-12 * (1.0 + float(np.linalg.norm(self.g_true)))
            if abs(self.delta - realized) > tol:
                raise ValueError(
                    f"delta={self.delta!r} does not match realized noise "
                    f"norm {realized!r}"
                )
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def m(self):
        return self.K.shape[0]

    @property
    def n(self):
        return self.K.shape[1]


@dataclass(frozen=True)
class RegParams:
    """A pair of strictly positive regularization weights."""

    eta1: float
    eta2: float

    def __post_init__(self):
        for name, v in (("eta1", self.eta1), ("eta2", self.eta2)):
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        object.__setattr__(self, "eta1", float(self.eta1))
        object.__setattr__(self, "eta2", float(self.eta2))

    def as_array(self):
        return np.array([self.eta1, self.eta2])


def weight_t(eta):
    """Relative weight t = eta1 / (eta1 + eta2) of the first penalty.

    Accepts a RegParams or any 2-sequence. t in (0, 1); t -> 1 means the
    first penalty dominates.
    """
    if isinstance(eta, RegParams):
        e1, e2 = eta.eta1, eta.eta2
    else:
        e1, e2 = float(eta[0]), float(eta[1])
    return e1 / (e1 + e2)


@dataclass(frozen=True)
class TikhonovSolution:
    """Minimizer record for J_eta(u) = 1/2 ||Ku - g||^2 + eta . psi(u).

    phi is the data-fidelity value at u, psi the pair of penalty values.
    inner_residual is the solver's own stopping quantity (scheme-specific;
    see each solver's docstring).
    """

    u: np.ndarray
    phi: float
    psi: tuple
    iterations: int
    converged: bool
    inner_residual: float

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen_array(self.u))
        object.__setattr__(
            self, "psi", (float(self.psi[0]), float(self.psi[1]))
        )

    @property
    def objective(self):
        return self.phi  # fidelity only; callers add eta . psi as needed

    def total_objective(self, eta):
        if isinstance(eta, RegParams):
            e1, e2 = eta.eta1, eta.eta2
        else:
            e1, e2 = eta
        return self.phi + e1 * self.psi[0] + e2 * self.psi[1]


#: allowed tags for SelectionResult.principle
PRINCIPLES = ("balanced-discrepancy", "balancing", "oracle")

#: column order of SelectionResult.trace rows and of trace CSV files
TRACE_COLUMNS = ("iter", "eta1", "eta2", "phi", "psi1", "psi2", "residual_norm")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a parameter-choice rule.

    trace is a float array with one row per outer iteration, columns
    TRACE_COLUMNS. converged mirrors the underlying iteration; a
    non-converged result still carries the best iterate found.
    """

    eta_star: RegParams
    solution: TikhonovSolution
    trace: np.ndarray
    principle: str
    weight_t: float
    converged: bool = True
    message: str = field(default="")

    def __post_init__(self):
        if self.principle not in PRINCIPLES:
            raise ValueError(f"unknown principle tag {self.principle!r}")
        tr = np.atleast_2d(np.array(self.trace, dtype=float))
        if tr.size and tr.shape[1] != len(TRACE_COLUMNS):
            raise ValueError(
                f"trace must have {len(TRACE_COLUMNS)} columns, got {tr.shape[1]}"
            )
        tr.flags.writeable = False
        object.__setattr__(self, "trace", tr)
        object.__setattr__(self, "weight_t", float(self.weight_t))
