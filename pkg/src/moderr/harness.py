"""Lorenz 96 twin experiment: truth, observations, 3DVar, moments, certificates."""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import bounds
from .assimilation import AssimilationConfig, assimilate
from .dynamics import JACOBIAN_SUPREMUM, ModelStep, estimate_lipschitz, spinup
from .errors import ConfigError, ValidationError
from .estimation import (TRUE_BETA, ErrorSequence, MomentEstimate,
                         moment_error_report, residual_sequence)
from .stochastic import (GaussianSpec, RngStream, build_true_cov,
                         build_true_mean, sample_gaussian)

log = logging.getLogger(__name__)

CSV_FMT = "%.17g"
DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3)
SPINUP_PERTURBATION = 0.01
INITIAL_FORECAST_STD = 1.0


@dataclass
class ExperimentConfig:
    N: int = 40
    steps: int = 3000
    dt: float = 0.05
    seed: int = 1
    R_variance: float = 1e-8
    B_variance: float = 1e12
    spinup_steps: int = 1000
    cyclic_cov: bool = False
    model_error: bool = True
    epsilons: Tuple[float, ...] = DEFAULT_EPSILONS
    cov_entry: Optional[Tuple[int, int]] = None
    output_dir: str = "out"

    def __post_init__(self):
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if self.cov_entry is not None:
            self.cov_entry = tuple(int(c) for c in self.cov_entry)
        self.validate()

    def validate(self):
        checks = [
            ("N", self.N >= 5, "N ≥ 5"),
            ("steps", self.steps >= 3, "steps ≥ 3"),
            ("dt", np.isfinite(self.dt) and self.dt > 0, "dt > 0"),
            ("seed", 0 <= self.seed < 2 ** 64, "seed must be a 64-bit unsigned integer"),
            ("R_variance", self.R_variance > 0, "R_variance > 0"),
            ("B_variance", self.B_variance > 0, "B_variance > 0"),
            ("spinup_steps", self.spinup_steps >= 0, "spinup_steps ≥ 0"),
            ("epsilons", all(e > 0 for e in self.epsilons), "every epsilon > 0"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise ConfigError(f"invalid {name}: {rule} violated", field=name)
        if self.cov_entry is not None:
            if len(self.cov_entry) != 2 or not all(1 <= c <= self.N for c in self.cov_entry):
                raise ConfigError(f"invalid cov_entry: indices must lie in 1..{self.N}",
                                  field="cov_entry")

    @property
    def entry(self):
        return self.cov_entry or (self.N // 2, self.N // 2)

    def echo(self):
        """Config as plain JSON-able data, without the output location."""
        out = dataclasses.asdict(self)
        out.pop("output_dir")
        out["epsilons"] = list(self.epsilons)
        out["cov_entry"] = list(self.entry)
        return out


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _parse_ints(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


_PARSERS = {
    "N": int,
    "steps": int,
    "dt": float,
    "seed": int,
    "R_variance": float,
    "B_variance": float,
    "spinup_steps": int,
    "cyclic_cov": _parse_bool,
    "model_error": _parse_bool,
    "epsilons": _parse_floats,
    "cov_entry": _parse_ints,
    "output_dir": str,
}


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment. Absent keys keep defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, field=key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", line=lineno, field=key) from exc
    return ExperimentConfig(**values)


def parse_config(path):
    return parse_config_text(Path(path).read_text())


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    truth: np.ndarray
    observations: np.ndarray
    analysis: np.ndarray
    beta: ErrorSequence
    beta_tilde: ErrorSequence
    sampled: MomentEstimate
    estimated: MomentEstimate
    prescribed_mean: np.ndarray
    prescribed_cov: np.ndarray
    report: object
    lipschitz: object
    certificates: List[bounds.BoundCertificate] = field(default_factory=list)

    @property
    def hovmoller(self):
        return np.abs(self.truth - self.analysis)

    def certificate(self, theorem, tight=False, eps=None):
        for c in self.certificates:
            if c.theorem == theorem and c.tight == tight and (eps is None or c.epsilon == eps):
                return c
        raise KeyError((theorem, tight, eps))


def generate_truth(model, x0, draws):
    """``x^{k+1} = f(x^k) + beta^k`` starting from ``x0``."""
    truth = np.empty((draws.shape[0] + 1, x0.shape[0]))
    truth[0] = x0
    for k in range(draws.shape[0]):
        truth[k + 1] = model(truth[k], step=k) + draws[k]
    return truth


def run_twin_experiment(cfg, observations=None):
    """Run the full twin experiment for ``cfg``.

    ``observations`` replaces the generated observations when given, which
    lets callers probe the analysis cycle with controlled inputs.
    """
    n, steps = cfg.N, cfg.steps
    model = ModelStep(dt=cfg.dt)

    x0 = spinup(model, n, cfg.spinup_steps, SPINUP_PERTURBATION)

    if cfg.model_error:
        mu_bar, q_bar = build_true_mean(n), build_true_cov(n, cyclic=cfg.cyclic_cov)
    else:
        mu_bar, q_bar = np.zeros(n), np.zeros((n, n))
    error_spec = GaussianSpec.from_cov(mu_bar, q_bar)
    draws = sample_gaussian(error_spec, RngStream(cfg.seed, "model-error"), count=steps - 1)
    truth = generate_truth(model, x0, draws)
    # realized model error of the stored trajectory, exact to the last bit
    beta = residual_sequence(truth, model, kind=TRUE_BETA)

    acfg = AssimilationConfig.scaled_identity(n, cfg.B_variance, cfg.R_variance)
    if observations is None:
        noise = RngStream(cfg.seed, "observation-noise").normal(steps * n).reshape(steps, n)
        observations = acfg.H.apply(truth) + np.sqrt(cfg.R_variance) * noise
    first_forecast = truth[0] + INITIAL_FORECAST_STD * RngStream(cfg.seed, "init").normal(n)
    analysis = assimilate(observations, first_forecast, model, acfg)
    beta_tilde = residual_sequence(analysis, model)

    sampled = MomentEstimate.from_sequence(beta)
    estimated = MomentEstimate.from_sequence(beta_tilde)
    report = moment_error_report(sampled, estimated, mu_bar, q_bar)
    lip = estimate_lipschitz(np.vstack([truth, analysis]), model, method=JACOBIAN_SUPREMUM)

    result = ExperimentResult(
        config=cfg, truth=truth, observations=np.asarray(observations), analysis=analysis,
        beta=beta, beta_tilde=beta_tilde, sampled=sampled, estimated=estimated,
        prescribed_mean=mu_bar, prescribed_cov=q_bar, report=report, lipschitz=lip,
    )
    result.certificates = certify(result)
    return result


def certify(result):
    cfg, L = result.config, result.lipschitz.L
    xt, xa = result.truth, result.analysis
    i, j = cfg.entry
    certs = []
    for eps in list(cfg.epsilons) + [None]:
        certs.append(bounds.beta_bound_certificate(xt, xa, L, result.beta, result.beta_tilde, eps))
        certs.append(bounds.mean_bound_certificate(
            xt, xa, L, result.sampled.mean, result.estimated.mean, eps))
        if eps is not None:
            certs.append(bounds.cov_bound_certificate(
                xt, xa, L, result.beta, result.beta_tilde, result.sampled,
                result.estimated, eps, i, j))
    failed = [c for c in certs if not c.passed]
    for c in failed:
        log.warning("certificate failed: %s eps=%g lhs=%g", c.theorem, c.epsilon, c.measured_lhs)
    return certs


OUTPUT_FILES = {
    "hovmoller.csv": lambda r: r.hovmoller,
    "truth.csv": lambda r: r.truth,
    "analysis.csv": lambda r: r.analysis,
    "beta.csv": lambda r: r.beta.samples,
    "beta_tilde.csv": lambda r: r.beta_tilde.samples,
    "mu_true.csv": lambda r: r.prescribed_mean,
    "mu_sampled.csv": lambda r: r.sampled.mean,
    "mu_estimated.csv": lambda r: r.estimated.mean,
    "Q_true.csv": lambda r: r.prescribed_cov,
    "Q_sampled.csv": lambda r: r.sampled.cov,
    "Q_estimated.csv": lambda r: r.estimated.cov,
    "Q_sampling_error.csv": lambda r: r.report.cov_sampled_vs_prescribed,
    "Q_estimate_error.csv": lambda r: r.report.cov_sampled_vs_estimated,
    "Q_total_error.csv": lambda r: r.report.cov_prescribed_vs_estimated,
}


def summarize(result):
    cfg = result.config
    hov = result.hovmoller
    return {
        "config": cfg.echo(),
        "seeds": {"seed": cfg.seed, "streams": ["model-error", "observation-noise", "init"]},
        "initialization": {
            "truth": f"equilibrium x_i = 8 with +{SPINUP_PERTURBATION} on component 1, "
                     f"integrated {cfg.spinup_steps} steps without model error",
            "first_forecast": f"truth at k=0 plus N(0, {INITIAL_FORECAST_STD:g}^2 I) "
                              "from the init stream",
            "integrator": f"one RK4 step of size {cfg.dt:g} per assimilation step",
        },
        "samples": len(result.beta),
        "covariance_accumulation": "two-pass, single block",
        "lipschitz": dataclasses.asdict(result.lipschitz),
        "analysis_error": {
            "max": float(hov.max()),
            "rms": float(np.sqrt(np.mean(hov ** 2))),
        },
        "max_abs": result.report.max_abs(),
        "certificates": [c.to_dict() for c in result.certificates],
        "all_certificates_passed": all(c.passed for c in result.certificates),
    }


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_outputs(result, out_dir):
    """Write CSV diagnostics, ``summary.json`` and ``manifest.json`` to ``out_dir``.

    Returns the manifest: every written file with its SHA-256 digest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for name, getter in OUTPUT_FILES.items():
        data = np.asarray(getter(result))
        np.savetxt(out / name, data.reshape(data.shape[0], -1), fmt=CSV_FMT, delimiter=",")
        names.append(name)
    (out / "summary.json").write_text(json.dumps(summarize(result), indent=2) + "\n")
    names.append("summary.json")
    manifest = {"files": [{"path": n, "sha256": _sha256(out / n),
                           "bytes": (out / n).stat().st_size} for n in names]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def compare(dir_a, dir_b):
    """Ratios (a / b) of analysis-error and moment-error summaries of two runs."""
    sa = json.loads((Path(dir_a) / "summary.json").read_text())
    sb = json.loads((Path(dir_b) / "summary.json").read_text())

    def ratio(x, y):
        return x / y if y != 0 else float("inf")

    rows = {
        "rms_analysis_error": (sa["analysis_error"]["rms"], sb["analysis_error"]["rms"]),
        "max_analysis_error": (sa["analysis_error"]["max"], sb["analysis_error"]["max"]),
    }
    for key in sa["max_abs"]:
        rows[key] = (sa["max_abs"][key], sb["max_abs"][key])
    return {name: {"a": a, "b": b, "ratio": ratio(a, b)} for name, (a, b) in rows.items()}


def check_manifest(out_dir):
    """Names of files whose digest no longer matches ``manifest.json``."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    return [f["path"] for f in manifest["files"] if _sha256(out / f["path"]) != f["sha256"]]


def with_overrides(cfg, **changes):
    try:
        return dataclasses.replace(cfg, **changes)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc
