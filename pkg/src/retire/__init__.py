"""Robust expectile regression with asymmetric Huber losses."""
from .exceptions import (AllZeroResiduals, BracketFailure, DegenerateDesign, InvalidWeight,
                         NonConvergence, RetireError, SingularHessian)
from .loss import LossKind, LossSpec, loss_grad, loss_hess, loss_value, weight
from .model import (ConfidenceInterval, CvResult, CvRule, IrwSpec, cross_validate,
                    fit_retire_lowdim, fit_retire_penalized, gamma_heuristic, lambda_grid)
from .penalty import PenaltyKind, PenaltySpec, weight_derivative, weight_vector
from .sim import (Model, NoiseDistribution, SimSpec, TruthVector, evaluate, generate,
                  noise_expectile, noise_quantile)
from .solver import (Dataset, FitResult, SolveOptions, fit_smooth, fit_sncd,
                     kkt_certificate, lambda_max)

__version__ = "0.1.0"
