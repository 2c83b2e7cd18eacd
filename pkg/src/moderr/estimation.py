"""Model-error residuals and their first two sample moments.

A trajectory of ``tau`` states yields ``tau - 1`` residuals
``x^{k+1} - f(x^k)``; moments are taken over those residuals with the
usual ``1/(n-1)`` covariance divisor.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

TRUE_BETA = "true-beta"
ESTIMATED_BETA = "estimated-beta"


@dataclass(frozen=True)
class ErrorSequence:
    samples: np.ndarray
    kind: str = ESTIMATED_BETA

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2:
            raise ValidationError("error samples must form a (count, N) array")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class MomentEstimate:
    mean: np.ndarray
    cov: np.ndarray
    sample_count: int

    @classmethod
    def from_sequence(cls, seq):
        return cls(sample_mean(seq), sample_cov(seq), len(seq))


def _samples(seq):
    return seq.samples if isinstance(seq, ErrorSequence) else np.atleast_2d(np.asarray(seq, dtype=float))


def residual_sequence(trajectory, model, kind=ESTIMATED_BETA):
    """Residuals ``x^{k+1} - f(x^k)`` for ``k = 0 .. tau - 2``.

    Applied to an analysis trajectory this is the model-error estimate;
    applied to the truth it recovers the realized model error exactly.
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.ndim != 2 or traj.shape[0] < 2:
        raise ValidationError("trajectory must hold at least two states")
    return ErrorSequence(traj[1:] - model(traj[:-1]), kind)


def sample_mean(seq):
    x = _samples(seq)
    if x.shape[0] < 1:
        raise ValidationError("sample mean of an empty sequence")
    return x.mean(axis=0)


def sample_cov(seq):
    """Two-pass sample covariance with divisor ``n - 1``."""
    x = _samples(seq)
    if x.shape[0] < 2:
        raise ValidationError("sample covariance needs at least two samples")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class MomentErrorReport:
    """Pairwise absolute differences between sampled, estimated and prescribed moments.

    Naming follows the three moment sets: ``sampled`` (from the true model
    errors), ``estimated`` (from analysis residuals) and ``prescribed``
    (the generating distribution).
    """

    mean_sampled_vs_prescribed: np.ndarray
    mean_sampled_vs_estimated: np.ndarray
    mean_prescribed_vs_estimated: np.ndarray
    cov_sampled_vs_prescribed: np.ndarray
    cov_sampled_vs_estimated: np.ndarray
    cov_prescribed_vs_estimated: np.ndarray

    def max_abs(self):
        return {name: float(np.max(getattr(self, name))) for name in self.__dataclass_fields__}


def moment_error_report(sampled, estimated, prescribed_mean, prescribed_cov):
    """Build a :class:`MomentErrorReport` from two :class:`MomentEstimate` objects
    and the prescribed mean and covariance."""
    mu_bar = np.asarray(prescribed_mean, dtype=float)
    q_bar = np.asarray(prescribed_cov, dtype=float)
    if not (sampled.mean.shape == estimated.mean.shape == mu_bar.shape):
        raise ValidationError("mean vectors have inconsistent dimensions")
    if not (sampled.cov.shape == estimated.cov.shape == q_bar.shape):
        raise ValidationError("covariance matrices have inconsistent dimensions")
    return MomentErrorReport(
        mean_sampled_vs_prescribed=np.abs(sampled.mean - mu_bar),
        mean_sampled_vs_estimated=np.abs(sampled.mean - estimated.mean),
        mean_prescribed_vs_estimated=np.abs(mu_bar - estimated.mean),
        cov_sampled_vs_prescribed=np.abs(sampled.cov - q_bar),
        cov_sampled_vs_estimated=np.abs(sampled.cov - estimated.cov),
        cov_prescribed_vs_estimated=np.abs(q_bar - estimated.cov),
    )
