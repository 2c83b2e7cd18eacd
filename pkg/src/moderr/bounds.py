"""Numerical certificates for the analysis-accuracy error bounds.

Each certificate evaluates a sufficient condition on the analysis error
(the hypothesis), measures the actual estimation error, and records
whether the implication held. A certificate whose hypothesis is not met
is vacuous and counts as passed.

Vector quantities are compared in the infinity norm; covariance bounds
are componentwise.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError

PRODUCT = "product-lemma"
BETA = "beta-bound"
MEAN = "mean-bound"
COV = "cov-entry-bound"


@dataclass
class BoundCertificate:
    theorem: str
    epsilon: float
    hypothesis_met: bool
    measured_lhs: float
    bound_rhs: float
    passed: bool
    L: float = float("nan")
    tight: bool = False
    details: dict = field(default_factory=dict)

    @property
    def vacuous(self):
        return not self.hypothesis_met

    def to_dict(self):
        out = asdict(self)
        out["vacuous"] = self.vacuous
        return out


def _verdict(hypothesis_met, lhs, rhs, strict=True):
    if not hypothesis_met:
        return True
    return bool(lhs < rhs) if strict else bool(lhs <= rhs)


def _safe_ratio(num, den):
    """``num / den`` with a zero denominator read as +inf."""
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(den == 0, np.inf, num / np.where(den == 0, 1.0, den))


def check_product_bound(f, g, L, M, eps):
    """Perturbed product: small ``|f - L|`` and ``|g - M|`` imply ``|fg - LM| < eps``."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    thr_f = min(1.0, float(_safe_ratio(eps, 2 * abs(M))))
    thr_g = min(1.0, eps / (2 * abs(L) + 2))
    hyp = abs(f - L) < thr_f and abs(g - M) < thr_g
    lhs = abs(f * g - L * M)
    return BoundCertificate(
        theorem=PRODUCT, epsilon=eps, hypothesis_met=bool(hyp), measured_lhs=lhs,
        bound_rhs=eps, passed=_verdict(hyp, lhs, eps),
        details={"threshold_f": thr_f, "threshold_g": thr_g,
                 "error_f": abs(f - L), "error_g": abs(g - M)},
    )


def _aligned(truth, analysis, *sequences):
    xt = np.asarray(truth, dtype=float)
    xa = np.asarray(analysis, dtype=float)
    if xt.ndim != 2 or xt.shape != xa.shape:
        raise ValidationError(f"truth {xt.shape} and analysis {xa.shape} are misaligned")
    for seq in sequences:
        s = seq.samples if hasattr(seq, "samples") else np.asarray(seq)
        if s.shape != (xt.shape[0] - 1, xt.shape[1]):
            raise ValidationError(
                f"error sequence {s.shape} does not match {xt.shape[0]} states "
                f"(expected {xt.shape[0] - 1} samples)")
    return xt, xa


def analysis_error(truth, analysis):
    """Largest infinity-norm analysis error over all timesteps."""
    return float(np.abs(np.asarray(truth) - np.asarray(analysis)).max())


def tight_epsilon(truth, analysis, L):
    """Smallest epsilon the analysis accuracy supports: ``(L + 1) max_k |x_t - x_a|``."""
    return (L + 1.0) * analysis_error(truth, analysis)


def _lipschitz_certificate(theorem, truth, analysis, L, lhs, eps, details):
    if L < 0:
        raise ValidationError("Lipschitz constant must be non-negative")
    err = analysis_error(truth, analysis)
    tight = eps is None
    if tight:
        eps = (L + 1.0) * err
        hyp = True
    else:
        if not eps > 0:
            raise ValidationError("eps must be positive")
        hyp = bool(err < eps / (L + 1.0))
    details = dict(details, max_analysis_error=err, required_analysis_error=eps / (L + 1.0))
    return BoundCertificate(
        theorem=theorem, epsilon=float(eps), hypothesis_met=hyp, measured_lhs=float(lhs),
        bound_rhs=float(eps), passed=_verdict(hyp, lhs, eps, strict=not tight),
        L=float(L), tight=tight, details=details,
    )


def beta_bound_certificate(truth, analysis, L, true_beta, est_beta, eps=None):
    """Per-step model-error bound: ``|beta~ - beta| < eps`` when the analysis is
    within ``eps / (L + 1)`` of the truth at every step.

    With ``eps=None`` the certificate is issued at the tight value
    ``(L + 1) max_k |x_t - x_a|``, where the hypothesis holds with equality
    and the comparison is non-strict.
    """
    _aligned(truth, analysis, true_beta, est_beta)
    diff = np.abs(est_beta.samples - true_beta.samples).max(axis=1)
    details = {"worst_step": int(diff.argmax()), "mean_step_error": float(diff.mean())}
    return _lipschitz_certificate(BETA, truth, analysis, L, diff.max(), eps, details)


def mean_bound_certificate(truth, analysis, L, true_mu, est_mu, eps=None):
    """Mean bound: ``|mu~ - mu| < eps`` under the same hypothesis as the per-step bound."""
    xt, _ = _aligned(truth, analysis)
    true_mu = np.asarray(true_mu, dtype=float)
    est_mu = np.asarray(est_mu, dtype=float)
    if true_mu.shape != (xt.shape[1],) or est_mu.shape != true_mu.shape:
        raise ValidationError("mean vectors do not match the state dimension")
    diff = np.abs(est_mu - true_mu)
    details = {"per_component_error": diff.tolist()}
    return _lipschitz_certificate(MEAN, truth, analysis, L, diff.max(), eps, details)


@dataclass(frozen=True)
class AccuracyRequirement:
    """Analysis accuracy needed in components ``i`` and ``j`` (1-based) for
    the ``(i, j)`` covariance entry to be within ``epsilon``.

    ``threshold_i[k]`` and ``threshold_j[k]`` belong to model-error sample
    ``k``. Sample ``k`` is built from states ``k`` and ``k + 1``, so a state
    must satisfy the thresholds of every sample it enters; see
    :meth:`state_thresholds`.
    """

    i: int
    j: int
    epsilon: float
    L: float
    threshold_i: np.ndarray
    threshold_j: np.ndarray

    def state_thresholds(self):
        def per_state(thr):
            out = np.full(thr.shape[0] + 1, np.inf)
            out[:-1] = thr
            out[1:] = np.minimum(out[1:], thr)
            return out
        return per_state(self.threshold_i), per_state(self.threshold_j)


def cov_accuracy_requirement(eps, true_beta, mu, L, i, j):
    """Per-sample analysis-error thresholds for the covariance entry ``(i, j)``.

    With ``n`` samples and ``c = (n - 1) / n``, component ``i`` needs

        min(1, eps c / (8 |beta_j|), eps c / (8 |mu_j|)) / (L + 1)

    and component ``j`` the stricter

        min(1, eps c / (8 |beta_i| + 8), eps c / (8 |mu_i| + 8)) / (L + 1).

    A zero denominator makes that branch +inf.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if L < 0:
        raise ValidationError("Lipschitz constant must be non-negative")
    beta = true_beta.samples if hasattr(true_beta, "samples") else np.atleast_2d(true_beta)
    mu = np.asarray(mu, dtype=float)
    n, dim = beta.shape
    if n < 2:
        raise ValidationError("need at least two model-error samples")
    if mu.shape != (dim,):
        raise ValidationError("mean does not match model-error dimension")
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ValidationError(f"component indices must lie in 1..{dim}")
    c = (n - 1) / n
    bi, bj = np.abs(beta[:, i - 1]), np.abs(beta[:, j - 1])
    mi, mj = abs(mu[i - 1]), abs(mu[j - 1])
    thr_i = np.minimum(1.0, np.minimum(_safe_ratio(eps * c, 8 * bj), _safe_ratio(eps * c, 8 * mj)))
    thr_j = np.minimum(1.0, np.minimum(eps * c / (8 * bi + 8), eps * c / (8 * mi + 8)))
    scale = 1.0 / (L + 1.0)
    return AccuracyRequirement(i=i, j=j, epsilon=eps, L=L,
                               threshold_i=scale * thr_i, threshold_j=scale * thr_j)


def cov_bound_certificate(truth, analysis, L, true_beta, est_beta, true_moments,
                          est_moments, eps, i, j):
    """Covariance-entry bound ``|Q_ij - Q~_ij| < eps`` for 1-based ``(i, j)``.

    The hypothesis checks the analysis errors of components ``i`` and ``j``
    at every state against :func:`cov_accuracy_requirement`. The details
    also record whether the stricter uniform-in-time version holds (every
    state below the smallest threshold of its component).
    """
    xt, xa = _aligned(truth, analysis, true_beta, est_beta)
    req = cov_accuracy_requirement(eps, true_beta, true_moments.mean, L, i, j)
    state_i, state_j = req.state_thresholds()
    err = np.abs(xt - xa)
    err_i, err_j = err[:, i - 1], err[:, j - 1]
    hyp = bool(np.all(err_i < state_i) and np.all(err_j < state_j))
    uniform = bool(err_i.max() < req.threshold_i.min() and err_j.max() < req.threshold_j.min())
    lhs = abs(true_moments.cov[i - 1, j - 1] - est_moments.cov[i - 1, j - 1])
    return BoundCertificate(
        theorem=COV, epsilon=float(eps), hypothesis_met=hyp, measured_lhs=float(lhs),
        bound_rhs=float(eps), passed=_verdict(hyp, lhs, eps), L=float(L),
        details={
            "i": i, "j": j,
            "uniform_hypothesis_met": uniform,
            "max_error_i": float(err_i.max()), "max_error_j": float(err_j.max()),
            "min_threshold_i": float(req.threshold_i.min()),
            "min_threshold_j": float(req.threshold_j.min()),
            "worst_margin_i": float((state_i - err_i).min()),
            "worst_margin_j": float((state_j - err_j).min()),
        },
    )
