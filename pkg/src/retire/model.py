"""
Estimation drivers: low-dimensional retire with normal confidence intervals,
iteratively reweighted l1-penalized retire, and K-fold cross-validation.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .exceptions import NonConvergence, SingularHessian
from .loss import LossSpec, asymmetric_sq, loss_grad, weight
from .penalty import PenaltyKind, PenaltySpec, weight_vector
from .solver import (Dataset, FitResult, SolveOptions, fit_smooth, fit_sncd,
                     lambda_max)


def gamma_heuristic(residuals, tau: float, n: int, p: int, floor: float = 1e-3) -> float:
    '''
        MAD of the asymmetric residuals times sqrt(n / log(n p)), bounded below
        by ``floor``.
    '''
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ValueError("residuals must be nonempty")
    if n * p <= 1:
        raise ValueError("n * p must exceed 1")
    rt = np.where(r <= 0, (1 - tau) * r, tau * r)
    mad = np.median(np.abs(rt - np.median(rt))) / norm.ppf(0.75)
    return max(floor, float(mad) * math.sqrt(n / math.log(n * p)))


# ---------------------------------------------------------------------------
# low dimensions

@dataclass(frozen=True)
class ConfidenceInterval:
    index: int
    estimate: float
    lower: float
    upper: float
    stderr: float
    level: float = 0.95


def sandwich_stderr(data: Dataset, loss: LossSpec, fit: FitResult) -> np.ndarray:
    '''
        Standard deviations sigma_j of sqrt(n) (b_j - b*_j) from the sandwich
        J^{-1} K J^{-1}, J = n^{-1} sum w(e_i) x_i x_i', K = n^{-1} sum zeta(e_i)^2 x_i x_i'.
    '''
    n = data.n
    Z = np.column_stack([np.ones(n), data.X])
    r = fit.residuals
    spec = loss.with_gamma(fit.gamma_used)
    J = (Z * weight(spec, r)[:, None]).T @ Z / n
    if np.linalg.cond(J) > 1e12:
        raise SingularHessian("weighted Gram matrix is numerically singular")
    zeta = loss_grad(spec, r)
    K = (Z * (zeta ** 2)[:, None]).T @ Z / n
    Jinv = np.linalg.inv(J)
    cov = Jinv @ K @ Jinv
    return np.sqrt(np.maximum(np.diag(cov), 0.0))


def fit_retire_lowdim(data: Dataset, loss: LossSpec, opts: SolveOptions = SolveOptions(tol=1e-9),
                      level: float = 0.95) -> tuple[FitResult, list[ConfidenceInterval]]:
    '''
        Unpenalized retire fit with normal-approximation confidence intervals
        for the intercept (index 0) and every slope.
    '''
    if data.n <= data.d + 1:
        raise ValueError("low-dimensional fit needs n > d + 1")
    fit = fit_smooth(data, loss, opts)
    sd = sandwich_stderr(data, loss, fit)
    z = 1.96 if level == 0.95 else float(norm.ppf(0.5 + level / 2))
    half = z * sd / math.sqrt(data.n)
    coef = fit.coef
    cis = [ConfidenceInterval(j, float(coef[j]), float(coef[j] - half[j]),
                              float(coef[j] + half[j]), float(sd[j]), level)
           for j in range(len(coef))]
    return fit, cis


# ---------------------------------------------------------------------------
# penalized

@dataclass(frozen=True)
class IrwSpec:
    penalty: PenaltySpec = field(default_factory=PenaltySpec)
    steps: int = 3
    options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")

    def with_lambda(self, lam: float) -> "IrwSpec":
        return replace(self, penalty=self.penalty.with_lambda(lam))


def fit_retire_penalized(data: Dataset, loss: LossSpec, irw: IrwSpec,
                         init: FitResult | None = None, strict: bool = True) -> list[FitResult]:
    '''
        Iteratively reweighted l1-penalized retire.

        Step 1 uses the uniform weight p'(0) = lambda; step t > 1 uses
        p'(|b^{(t-1)}_j|) and warm-starts from b^{(t-1)}.  Returns all T iterates.
        ``init`` only warm-starts the step-1 solve (e.g. along a lambda path).
    '''
    if data.d < 1:
        raise ValueError("penalized fit needs at least one predictor")
    fits = []
    weights = np.full(data.d, irw.penalty.lam)
    prev = init
    for step in range(1, irw.steps + 1):
        if step > 1:
            weights = weight_vector(irw.penalty, prev.slopes)
        try:
            prev = fit_sncd(data, loss, weights, irw.options, init=prev, strict=strict)
        except NonConvergence as err:
            raise NonConvergence(err.max_iter, err.result, step=step) from err
        fits.append(prev)
        if irw.penalty.kind is PenaltyKind.L1:
            fits.extend([prev] * (irw.steps - 1))
            break
    return fits


def lambda_grid(data: Dataset, loss: LossSpec, nlambda: int = 50, ratio: float = 0.01,
                opts: SolveOptions = SolveOptions()) -> np.ndarray:
    '''Log-spaced grid from lambda_max down to ratio * lambda_max, descending.'''
    lmax, _ = lambda_max(data, loss, opts)
    if not lmax > 0:
        raise ValueError("degenerate lambda grid: the intercept alone fits the response")
    return np.exp(np.linspace(np.log(lmax), np.log(ratio * lmax), nlambda))


def fit_path(data: Dataset, loss: LossSpec, irw: IrwSpec, lambdas) -> list[FitResult]:
    '''
        Final reweighting iterate at every lambda in ``lambdas`` (descending),
        warm-started along the path.  Non-converged fits are kept as returned.
    '''
    out, prev = [], None
    for lam in lambdas:
        fits = fit_retire_penalized(data, loss, irw.with_lambda(float(lam)), init=prev,
                                    strict=False)
        prev = fits[0]
        out.append(fits[-1])
    return out


class CvRule(enum.Enum):
    ONE_SE = "1se"
    MIN = "min"


@dataclass(frozen=True)
class CvResult:
    lambda_grid: np.ndarray
    mean_loss: np.ndarray
    se_loss: np.ndarray
    chosen_lambda: float
    rule: CvRule
    fold_loss: np.ndarray = field(repr=False, default=None)


def choose_lambda(lambdas, mean_loss, se_loss, rule: CvRule | str = CvRule.ONE_SE) -> float:
    '''Minimizer of the CV curve, or the largest lambda within one SE of it.'''
    rule = CvRule(rule)
    lambdas = np.asarray(lambdas, dtype=float)
    mean_loss = np.asarray(mean_loss, dtype=float)
    if len(np.unique(lambdas)) != len(lambdas):
        raise ValueError("lambda grid has duplicate values")
    k = int(np.argmin(mean_loss))
    if rule is CvRule.MIN:
        return float(lambdas[k])
    ok = mean_loss <= mean_loss[k] + np.asarray(se_loss, dtype=float)[k]
    return float(np.max(lambdas[ok]))


def fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xCF])))
    ids = np.arange(n) % folds
    return ids[rng.permutation(n)]


def cross_validate(data: Dataset, loss: LossSpec, irw: IrwSpec, nlambda: int = 50,
                   folds: int = 10, seed: int = 0, rule: CvRule | str = CvRule.ONE_SE,
                   lambdas=None, workers: int = 1, validation_tau: float | None = None) -> CvResult:
    '''
        K-fold cross-validation over a descending lambda grid.

        The validation loss is the asymmetric squared loss at ``validation_tau``
        (default: the fitting level), averaged within each fold; ``se_loss`` is
        the standard error of the fold averages.  Folds are a seeded random
        partition, so results do not depend on ``workers``.
    '''
    vtau = loss.tau if validation_tau is None else validation_tau
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > data.n:
        raise ValueError("more folds than observations")
    if lambdas is None:
        if nlambda < 2:
            raise ValueError("need at least 2 lambda values")
        lambdas = lambda_grid(data, loss, nlambda, opts=irw.options)
    lambdas = np.asarray(lambdas, dtype=float)
    if len(np.unique(lambdas)) != len(lambdas):
        raise ValueError("lambda grid has duplicate values")
    lambdas = np.sort(lambdas)[::-1]
    ids = fold_ids(data.n, folds, seed)

    def one_fold(k):
        train, test = data.subset(ids != k), data.subset(ids == k)
        path = fit_path(train, loss, irw, lambdas)
        return [float(np.mean(asymmetric_sq(test.y - f.intercept - test.X @ f.slopes, vtau)))
                for f in path]

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(one_fold, range(folds)))
    else:
        rows = [one_fold(k) for k in range(folds)]
    fold_loss = np.array(rows)
    mean = fold_loss.mean(axis=0)
    se = fold_loss.std(axis=0, ddof=1) / math.sqrt(folds)
    rule = CvRule(rule)
    return CvResult(lambdas, mean, se, choose_lambda(lambdas, mean, se, rule), rule, fold_loss)
