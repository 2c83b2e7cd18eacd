"""Sequential 3DVar with a static background covariance."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import IllPosedAnalysisError, ValidationError

IDENTITY = "identity"
SELECTION = "selection"


@dataclass(frozen=True)
class ObservationOperator:
    """Linear observation operator: the identity or a selection of components.

    Selection ``indices`` are 1-based component numbers.
    """

    kind: str = IDENTITY
    indices: tuple = ()

    def __post_init__(self):
        if self.kind not in (IDENTITY, SELECTION):
            raise ValidationError(f"unknown observation operator {self.kind!r}")
        if self.kind == SELECTION:
            idx = tuple(int(i) for i in self.indices)
            if not idx:
                raise ValidationError("selection operator needs at least one index")
            if len(set(idx)) != len(idx) or min(idx) < 1:
                raise ValidationError("selection indices must be unique and >= 1")
            object.__setattr__(self, "indices", idx)

    @classmethod
    def selection(cls, indices):
        return cls(SELECTION, tuple(indices))

    def _check(self, n):
        if self.kind == SELECTION and max(self.indices) > n:
            raise ValidationError(f"selection index {max(self.indices)} exceeds N={n}")

    def matrix(self, n):
        self._check(n)
        if self.kind == IDENTITY:
            return np.eye(n)
        return np.eye(n)[[i - 1 for i in self.indices]]

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            return x
        self._check(x.shape[-1])
        return x[..., [i - 1 for i in self.indices]]


@dataclass
class AssimilationConfig:
    """Background covariance ``B``, observation covariance ``R`` and operator ``H``."""

    B: np.ndarray
    R: np.ndarray
    H: ObservationOperator = field(default_factory=ObservationOperator)

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n, p = self.B.shape[0], self.R.shape[0]
        if self.B.shape != (n, n) or self.R.shape != (p, p):
            raise ValidationError("B and R must be square")
        if self.H.kind == IDENTITY and p != n:
            raise ValidationError("identity H needs R with the same size as B")
        if self.H.kind == SELECTION and p != len(self.H.indices):
            raise ValidationError("R size must match number of selected components")

    @classmethod
    def scaled_identity(cls, n, b, r, H=None):
        H = H or ObservationOperator()
        p = n if H.kind == IDENTITY else len(H.indices)
        return cls(b * np.eye(n), r * np.eye(p), H)

    @cached_property
    def _hmat(self):
        return self.H.matrix(self.B.shape[0])

    @cached_property
    def _bht(self):
        return self.B @ self._hmat.T

    @cached_property
    def _innovation_factor(self):
        s = self._hmat @ self._bht + self.R
        try:
            return sla.cho_factor(0.5 * (s + s.T))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise IllPosedAnalysisError(f"H B H^T + R is not positive definite: {exc}") from exc


def observe(x_t, H, R_sqrt, rng):
    """``H(x_t) + R_sqrt z`` with ``z`` standard normal drawn from ``rng``."""
    hx = H.apply(x_t)
    r_sqrt = np.atleast_2d(np.asarray(R_sqrt, dtype=float))
    if r_sqrt.shape != (hx.shape[-1], hx.shape[-1]):
        raise ValidationError("R_sqrt shape does not match observation space")
    return hx + r_sqrt @ rng.normal(hx.shape[-1])


def threedvar_analysis(forecast, y, cfg):
    """Minimizer of the 3DVar cost for a linear observation operator.

    ``x_a = x_f + B H^T (H B H^T + R)^{-1} (y - H x_f)``, with the inverse
    applied through a Cholesky factorization.
    """
    xf = np.asarray(forecast, dtype=float)
    innov = np.asarray(y, dtype=float) - cfg.H.apply(xf)
    w = sla.cho_solve(cfg._innovation_factor, innov)
    return xf + cfg._bht @ w


def assimilate(observations, first_forecast, model, cfg):
    """Run the analysis cycle ``x_a^k = 3DVar(f(x_a^{k-1}), y^k)``.

    The first analysis uses ``first_forecast`` as its background.
    Returns the analysis trajectory, one row per observation.
    """
    ys = np.asarray(observations, dtype=float)
    out = np.empty((ys.shape[0], np.shape(first_forecast)[-1]))
    xf = np.asarray(first_forecast, dtype=float)
    for k in range(ys.shape[0]):
        if k > 0:
            xf = model(out[k - 1], step=k)
        out[k] = threedvar_analysis(xf, ys[k], cfg)
    return out
