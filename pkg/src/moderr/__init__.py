"""Model-error moment estimation from analysis increments.

The model error of a forecast model ``f`` is estimated from a sequence of
analyses as ``x_a^{k+1} - f(x_a^k)``. This package runs a Lorenz 96 twin
experiment with sequential 3DVar, computes the sample mean and covariance
of those residuals, and checks numerically how analysis accuracy limits
the accuracy of both moments.
"""

from .assimilation import (AssimilationConfig, ObservationOperator, assimilate,
                           observe, threedvar_analysis)
from .bounds import (AccuracyRequirement, BoundCertificate, beta_bound_certificate,
                     check_product_bound, cov_accuracy_requirement, cov_bound_certificate,
                     mean_bound_certificate, tight_epsilon)
from .dynamics import (LipschitzEstimate, ModelStep, estimate_lipschitz, flow_jacobian,
                       linear_model, lorenz96_tendency, rk4_step)
from .errors import (ConfigError, IllPosedAnalysisError, IntegrationError, ModErrError,
                     NotPSDError, NumericalError, ValidationError)
from .estimation import (ErrorSequence, MomentErrorReport, MomentEstimate,
                         moment_error_report, residual_sequence, sample_cov, sample_mean)
from .harness import (ExperimentConfig, ExperimentResult, compare, parse_config,
                      run_twin_experiment, write_outputs)
from .stochastic import (GaussianSpec, RngStream, build_true_cov, build_true_mean,
                         sample_gaussian, symmetric_sqrt)

__version__ = "0.1.0"
