"""
Simulation designs, noise laws with exact quantiles/expectiles, and
estimation metrics.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .exceptions import BracketFailure
from .solver import Dataset, FitResult

CANONICAL_SLOPES = (1.8, 1.6, 1.4, 1.2, 1.0, -1.0, -1.2, -1.4, -1.6, -1.8)

# stream purposes for seed splitting
DESIGN, NOISE, FOLDS = 1, 2, 3


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    '''Philox stream keyed by (seed, *keys); disjoint keys give independent streams.'''
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))


@dataclass(frozen=True)
class NoiseDistribution:
    '''
    kind : "gaussian" (parameter = variance) or "t" (parameter = degrees of freedom).
    '''
    kind: str = "gaussian"
    param: float = 2.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "t"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and not self.param > 0:
            raise ValueError("gaussian variance must be positive")
        if self.kind == "t" and not self.param > 1:
            raise ValueError("t degrees of freedom must exceed 1 for a finite mean")

    @classmethod
    def parse(cls, text: str) -> "NoiseDistribution":
        kind, _, val = text.partition(":")
        kind = kind.strip().lower()
        if kind in ("normal", "gauss"):
            kind = "gaussian"
        default = 2.0 if kind == "gaussian" else 2.1
        return cls(kind, float(val) if val else default)

    @property
    def law(self):
        if self.kind == "gaussian":
            return stats.norm(scale=math.sqrt(self.param))
        return stats.t(self.param)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return math.sqrt(self.param) * rng.standard_normal(size)
        return rng.standard_t(self.param, size)

    def upper_partial_moment(self, e: float) -> float:
        '''E(Z - e)_+ in closed form.'''
        if self.kind == "gaussian":
            s = math.sqrt(self.param)
            u = e / s
            return s * stats.norm.pdf(u) - e * stats.norm.sf(u)
        nu = self.param
        # int_e^inf z f(z) dz = (nu + e^2) / (nu - 1) f(e)
        return (nu + e * e) / (nu - 1) * stats.t.pdf(e, nu) - e * stats.t.sf(e, nu)


def noise_quantile(dist: NoiseDistribution, tau: float) -> float:
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if tau == 0.5:
        return 0.0         # both laws are symmetric about zero
    return float(dist.law.ppf(tau))


def expectile_score(dist: NoiseDistribution, e: float, tau: float) -> float:
    '''tau E(Z-e)_+ - (1-tau) E(Z-e)_-; decreasing in e, zero at the expectile.'''
    up = dist.upper_partial_moment(e)
    down = up + e          # E(Z - e)_- = E(Z - e)_+ - E(Z - e), with E Z = 0
    return tau * up - (1 - tau) * down


def noise_expectile(dist: NoiseDistribution, tau: float) -> float:
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if tau == 0.5:
        return 0.0
    lo, hi = float(dist.law.ppf(0.001)), float(dist.law.ppf(0.999))
    g = lambda e: expectile_score(dist, e, tau)
    for _ in range(60):
        if g(lo) >= 0 >= g(hi):
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise BracketFailure(f"no sign change of the expectile score on [{lo}, {hi}]")
    return float(optimize.brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500))


def sample_expectile(z, tau: float) -> float:
    '''Minimizer of the empirical asymmetric squared loss.'''
    z = np.asarray(z, dtype=float)

    def score(e):
        u = z - e
        return tau * np.sum(u[u > 0]) + (1 - tau) * np.sum(u[u < 0])

    return float(optimize.brentq(score, z.min(), z.max(), xtol=1e-12))


class Model(enum.Enum):
    HOMOSCEDASTIC = "hom"
    QUANTILE_HET = "qhet"
    EXPECTILE_HET = "ehet"


@dataclass(frozen=True)
class TruthVector:
    beta_star: np.ndarray

    @property
    def intercept(self) -> float:
        return float(self.beta_star[0])

    @property
    def slopes(self) -> np.ndarray:
        return self.beta_star[1:]

    @property
    def support(self) -> np.ndarray:
        return self.slopes != 0


def canonical_truth(d: int, truncate: bool = False) -> TruthVector:
    '''
        Intercept 2 and the ten signals on predictors 1, 3, ..., 19 (0-based);
        ``truncate`` keeps whatever fits when d < 20.
    '''
    if d < 20 and not truncate:
        raise ValueError(f"canonical coefficient pattern needs d >= 20, got {d}")
    b = np.zeros(d + 1)
    b[0] = 2.0
    for k, v in enumerate(CANONICAL_SLOPES):
        j = 2 * k
        if j < d:
            b[1 + j] = v
    return TruthVector(b)


@dataclass(frozen=True)
class SimSpec:
    model: Model = Model.HOMOSCEDASTIC
    n: int = 400
    d: int = 200
    noise: NoiseDistribution = field(default_factory=NoiseDistribution)
    tau: float = 0.5
    seed: int = 0
    beta: tuple | None = None

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", Model(self.model))
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.beta is None and self.d < 20:
            raise ValueError(f"canonical coefficient pattern needs d >= 20, got {self.d}")
        if self.beta is not None and len(self.beta) != self.d + 1:
            raise ValueError("beta must hold the intercept and d slopes")

    def truth(self) -> TruthVector:
        if self.beta is not None:
            return TruthVector(np.asarray(self.beta, dtype=float))
        return canonical_truth(self.d)


def ar_covariance(d: int, rho: float = 0.5) -> np.ndarray:
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def noise_term(spec: SimSpec, X: np.ndarray, eps: np.ndarray) -> np.ndarray:
    if spec.model is Model.HOMOSCEDASTIC:
        return eps
    scale = 0.5 * np.abs(X[:, -1]) + 0.5
    if spec.model is Model.QUANTILE_HET:
        return scale * (eps - noise_quantile(spec.noise, spec.tau))
    return scale * (eps - noise_expectile(spec.noise, spec.tau))


def generate(spec: SimSpec, rep: int = 0) -> tuple[Dataset, TruthVector]:
    '''
        Draw one data set.  Design and noise come from separate streams keyed by
        (seed, rep), so replications are reproducible in any order.
    '''
    truth = spec.truth()
    L = np.linalg.cholesky(ar_covariance(spec.d))
    X = rng_for(spec.seed, rep, DESIGN).standard_normal((spec.n, spec.d)) @ L.T
    eps = spec.noise.sample(rng_for(spec.seed, rep, NOISE), spec.n)
    y = truth.intercept + X @ truth.slopes + noise_term(spec, X, eps)
    return Dataset(X, y), truth


def evaluate(fit: FitResult, truth: TruthVector, threshold: float = 0.0) -> dict:
    '''l2 error over intercept and slopes; TPR/FPR over slopes only.'''
    coef = np.r_[fit.intercept, fit.slopes]
    if coef.shape != truth.beta_star.shape:
        raise ValueError("fit and truth dimensions differ")
    sel = np.abs(fit.slopes) > threshold
    supp = truth.support
    s, zeros = int(supp.sum()), int((~supp).sum())
    return {"l2_error": float(np.linalg.norm(coef - truth.beta_star)),
            "tpr": float(sel[supp].sum() / s) if s else 1.0,
            "fpr": float(sel[~supp].sum() / zeros) if zeros else 0.0}
