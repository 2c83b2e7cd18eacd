"""Deterministic model map: Lorenz 96 advanced by one RK4 step.

All functions operate on the last axis, so a trajectory of shape
``(steps, N)`` can be pushed through the model in one call.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationError, ValidationError

FORCING = 8.0
DEFAULT_DT = 0.05

JACOBIAN_SUPREMUM = "jacobian-supremum"
PAIRWISE_SAMPLING = "pairwise-sampling"


def _as_state(x, min_dim=1):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValidationError("state must be at least one-dimensional")
    if x.shape[-1] < min_dim:
        raise ValidationError(f"state dimension {x.shape[-1]} < {min_dim}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("state contains non-finite entries")
    return x


@lru_cache(maxsize=None)
def _neighbours(n):
    idx = np.arange(n)
    return (idx - 2) % n, (idx - 1) % n, (idx + 1) % n


def lorenz96_tendency(state, forcing=FORCING):
    """Lorenz 96 right-hand side with cyclic indexing.

    ``dx_i/dt = -x_{i-2} x_{i-1} + x_{i-1} x_{i+1} - x_i + F``
    """
    x = _as_state(state, min_dim=4)
    im2, im1, ip1 = _neighbours(x.shape[-1])
    xm2, xm1, xp1 = x[..., im2], x[..., im1], x[..., ip1]
    return -xm2 * xm1 + xm1 * xp1 - x + forcing


def lorenz96_jacobian(state):
    """Jacobian of :func:`lorenz96_tendency`, shape ``(..., N, N)``."""
    x = _as_state(state, min_dim=4)
    n = x.shape[-1]
    idx = np.arange(n)
    im2, im1, ip1 = _neighbours(n)
    xm2, xm1, xp1 = x[..., im2], x[..., im1], x[..., ip1]
    jac = np.zeros(x.shape + (n,))
    jac[..., idx, im2] = -xm1
    jac[..., idx, im1] = xp1 - xm2
    jac[..., idx, idx] = -1.0
    jac[..., idx, ip1] = xm1
    return jac


def rk4_step(tendency, state, dt, step=None):
    """Advance ``state`` by one classical Runge-Kutta step of size ``dt``.

    Raises
    ------
    IntegrationError
        If any stage produces a non-finite value. ``step`` is attached to
        the error so callers can report where a run blew up.
    """
    if not dt >= 0:
        raise ValidationError(f"dt must be non-negative, got {dt}")
    x = np.asarray(state, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = tendency(x)
        k2 = _stage(tendency, x + 0.5 * dt * k1, step)
        k3 = _stage(tendency, x + 0.5 * dt * k2, step)
        k4 = _stage(tendency, x + dt * k3, step)
        out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("RK4 step produced non-finite state", step=step)
    return out


def _stage(tendency, x, step):
    if not np.all(np.isfinite(x)):
        raise IntegrationError("RK4 stage produced non-finite state", step=step)
    return tendency(x)


def flow_jacobian(state, dt, tendency=lorenz96_tendency, jacobian=lorenz96_jacobian):
    """Exact tangent-linear of one RK4 step (not of the continuous flow).

    The derivative is carried through all four stages by the chain rule.
    Leading axes of ``state`` are treated as a batch.
    """
    if not dt >= 0:
        raise ValidationError(f"dt must be non-negative, got {dt}")
    x = _as_state(state)
    n = x.shape[-1]
    eye = np.eye(n)

    k1 = tendency(x)
    j1 = jacobian(x)
    x2 = x + 0.5 * dt * k1
    k2 = tendency(x2)
    j2 = jacobian(x2) @ (eye + 0.5 * dt * j1)
    x3 = x + 0.5 * dt * k2
    k3 = tendency(x3)
    j3 = jacobian(x3) @ (eye + 0.5 * dt * j2)
    x4 = x + dt * k3
    j4 = jacobian(x4) @ (eye + dt * j3)
    return eye + dt / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4)


@dataclass(frozen=True)
class ModelStep:
    """The model map ``f``: one RK4 step of a given tendency.

    Calling the instance advances a state (or a batch of states).
    """

    dt: float = DEFAULT_DT
    tendency: Callable = field(default=lorenz96_tendency, repr=False)
    tendency_jacobian: Optional[Callable] = field(default=lorenz96_jacobian, repr=False)
    name: str = "lorenz96"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be finite and positive, got {self.dt}")

    def __call__(self, state, step=None):
        return rk4_step(self.tendency, state, self.dt, step=step)

    def jacobian(self, state):
        if self.tendency_jacobian is None:
            raise ValidationError(f"model {self.name!r} has no tendency Jacobian")
        return flow_jacobian(state, self.dt, self.tendency, self.tendency_jacobian)


def linear_model(matrix, dt=DEFAULT_DT):
    """RK4 discretization of ``dx/dt = A x``; used as an exactly-solvable test model."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValidationError("linear model matrix must be square")

    def tendency(x):
        return x @ a.T

    def jac(x):
        return np.broadcast_to(a, np.shape(x) + (a.shape[0],))

    return ModelStep(dt=dt, tendency=tendency, tendency_jacobian=jac, name="linear")


def linear_flow_matrix(matrix, dt):
    """Closed-form RK4 propagator ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``."""
    ha = dt * np.atleast_2d(np.asarray(matrix, dtype=float))
    out = np.eye(ha.shape[0])
    term = np.eye(ha.shape[0])
    for p in range(1, 5):
        term = term @ ha / p
        out = out + term
    return out


def spinup(model, n, steps, perturbation=0.01):
    """Integrate from the forcing equilibrium with a small kick on component 1."""
    x = np.full(n, FORCING)
    x[0] += perturbation
    for k in range(steps):
        x = model(x, step=k)
    return x


@dataclass(frozen=True)
class LipschitzEstimate:
    L: float
    method: str
    sample_count: int


def estimate_lipschitz(trajectory, model, method=JACOBIAN_SUPREMUM, radius=1e-4,
                       pairs_per_state=1, rng=None, chunk=512):
    """Empirical Lipschitz constant of ``model`` along a trajectory (infinity norm).

    ``jacobian-supremum`` returns the largest induced infinity-norm of the
    flow Jacobian over the visited states. ``pairwise-sampling`` returns the
    largest ratio ``|f(a) - f(b)| / |a - b|`` over random perturbations ``b``
    of radius ``radius`` around each visited state ``a``.

    Both only see the visited region, so the result is a lower bound on any
    global constant. The two methods answer different questions and need
    not agree: a map whose Jacobian is the identity has constant 1 under
    both, while a constant map gives 0 under both, but a nonlinear map can
    exceed the Jacobian value at finite radius.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 2 or traj.shape[0] < 2:
        raise ValidationError("trajectory must hold at least two states")
    if not np.all(np.isfinite(traj)):
        raise ValidationError("trajectory contains non-finite entries")

    if method == JACOBIAN_SUPREMUM:
        best = 0.0
        for start in range(0, traj.shape[0], chunk):
            jac = model.jacobian(traj[start:start + chunk])
            best = max(best, float(np.abs(jac).sum(axis=-1).max()))
        return LipschitzEstimate(L=best, method=method, sample_count=traj.shape[0])

    if method == PAIRWISE_SAMPLING:
        if rng is None:
            from .stochastic import RngStream
            rng = RngStream(seed=0, stream_id="init")
        a = np.repeat(traj, pairs_per_state, axis=0)
        direction = rng.uniform(a.size).reshape(a.shape) * 2.0 - 1.0
        scale = np.abs(direction).max(axis=-1, keepdims=True)
        scale[scale == 0] = 1.0
        b = a + radius * direction / scale
        num = np.abs(model(a) - model(b)).max(axis=-1)
        den = np.abs(a - b).max(axis=-1)
        return LipschitzEstimate(L=float((num / den).max()), method=method,
                                 sample_count=a.shape[0])

    raise ValidationError(f"unknown Lipschitz method {method!r}")
