"""
Solvers for (weighted l1-penalized) asymmetric Huber regression.

``fit_sncd`` runs semismooth Newton coordinate descent on the KKT system of

    (1/n) sum_i L(y_i - b0 - x_i' b) + sum_j w_j |b_j|,

one (b_j, z_j) pair at a time, with the intercept unpenalized.  The inner loop
is compiled with numba; the single-coordinate updates are exposed as
``sncd_update_intercept`` and ``sncd_update_pair`` and share the compiled code.

``fit_smooth`` minimizes the unpenalized objective with a damped Newton method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .exceptions import (AllZeroResiduals, DegenerateDesign, InvalidWeight,
                         NonConvergence)
from .loss import LossSpec, loss_grad, loss_hess, loss_value

# Phi^{-1}(0.75)
MAD_SCALE = 0.6744897501960817
# sweeps after which an adaptive gamma is frozen regardless of progress
ADAPTIVE_SWEEPS = 50


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float).reshape(-1))
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(y), -1) if X.size else np.zeros((len(y), 0))
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"predictor rows {X.shape[0]} do not match response length {y.shape[0]}")
        if y.shape[0] < 1:
            raise ValueError("dataset needs at least one observation")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        X = np.asfortranarray(X)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.names)


@dataclass(frozen=True)
class SolveOptions:
    '''
    tol : stopping tolerance.  SNCD stops once ||b^k - b^{k-1}||_2 <= tol and the
          KKT residual is below 10 * tol; the smooth solver stops once the
          gradient sup-norm is below tol.

    max_iter : maximum number of sweeps (SNCD) or Newton steps (smooth).

    gamma_adaptive : recompute gamma from the current residuals by the MAD
                     heuristic at every sweep; it is frozen once the iterate
                     distance drops below 10 * tol or after ADAPTIVE_SWEEPS sweeps.

    gamma_floor : lower bound for the adaptive gamma.
    '''
    tol: float = 1e-7
    max_iter: int = 10_000
    gamma_adaptive: bool = False
    gamma_floor: float = 1e-3

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.gamma_floor > 0:
            raise ValueError("gamma_floor must be positive")

    @property
    def kkt_tol(self) -> float:
        return 10.0 * self.tol


@dataclass(frozen=True)
class FitResult:
    intercept: float
    slopes: np.ndarray
    subgradient: np.ndarray
    gamma_used: float
    iterations: int
    converged: bool
    kkt_residual: float
    residuals: np.ndarray
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def coef(self) -> np.ndarray:
        '''Intercept followed by slopes.'''
        return np.r_[self.intercept, self.slopes]


# ---------------------------------------------------------------------------
# compiled kernels

@numba.njit(cache=True)
def _dl(r, tau, gamma):
    if r < 0.0:
        return (1.0 - tau) * max(r, -gamma)
    return tau * min(r, gamma)


@numba.njit(cache=True)
def _d2l(r, tau, gamma):
    if abs(r) > gamma:
        return 0.0
    return 1.0 - tau if r < 0.0 else tau


@numba.njit(cache=True)
def _coordinate_sums(x, r, tau, gamma, unit):
    # returns sum L'(r) x, sum L''(r) x^2, #{|r| <= gamma}, sum_{|r|>gamma} x^2/|r|
    g = 0.0
    h = 0.0
    tail = 0.0
    inside = 0
    for i in range(r.shape[0]):
        xi = 1.0 if unit else x[i]
        ri = r[i]
        g += _dl(ri, tau, gamma) * xi
        if abs(ri) <= gamma:
            inside += 1
            h += (1.0 - tau if ri < 0.0 else tau) * xi * xi
        else:
            tail += xi * xi / abs(ri)
    return g, h, inside, tail


@numba.njit(cache=True)
def _denominator(h, tail, inside, n):
    if h == 0.0 or inside < max(0.05, 1.0 / n) * n:
        return tail
    return h


@numba.njit(cache=True)
def _newton_from_sums(g, den, n, lam, beta, z):
    if lam == 0.0:
        if den > 0.0:
            return beta + g / den, 0.0
        return beta, 0.0
    u = beta + z
    if abs(u) > 1.0:
        s = 1.0 if u > 0.0 else -1.0
        if den > 0.0:
            return beta + (g - n * lam * s) / den, s
        return beta, s
    return 0.0, (g + beta * den) / (n * lam)


@numba.njit(cache=True)
def _intercept_step(r, tau, gamma):
    g, h, inside, tail = _coordinate_sums(r, r, tau, gamma, True)
    den = _denominator(h, tail, inside, r.shape[0])
    if den > 0.0:
        return g / den
    return 0.0


@numba.njit(cache=True)
def _pair_step(x, r, tau, gamma, lam, beta, z):
    n = r.shape[0]
    g, h, inside, tail = _coordinate_sums(x, r, tau, gamma, False)
    den = _denominator(h, tail, inside, n)
    return _newton_from_sums(g, den, n, lam, beta, z)


@numba.njit(cache=True)
def _loss1(r, tau, gamma):
    a = abs(r)
    v = 0.5 * r * r if a <= gamma else gamma * a - 0.5 * gamma * gamma
    return (1.0 - tau) * v if r < 0.0 else tau * v


@numba.njit(cache=True)
def _shift_change(x, r, tau, gamma, delta, unit):
    # n * [mean L(r - delta x) - mean L(r)]
    out = 0.0
    for i in range(r.shape[0]):
        xi = 1.0 if unit else x[i]
        out += _loss1(r[i] - delta * xi, tau, gamma) - _loss1(r[i], tau, gamma)
    return out


@numba.njit(cache=True)
def _safe_step(x, r, tau, gamma, lam, beta, z, xsq, unit):
    '''
    Semismooth Newton update of one coordinate, kept when it does not increase
    the objective; otherwise a majorize-minimize soft-threshold step with the
    global curvature bound max(tau, 1 - tau) * sum x^2, which always decreases it.
    '''
    n = r.shape[0]
    g, h, inside, tail = _coordinate_sums(x, r, tau, gamma, unit)
    den = _denominator(h, tail, inside, n)
    new_b, new_z = _newton_from_sums(g, den, n, lam, beta, z)
    delta = new_b - beta
    if delta == 0.0 or abs(delta) <= 1e-10:
        return new_b, new_z
    change = _shift_change(x, r, tau, gamma, delta, unit) + n * lam * (abs(new_b) - abs(beta))
    if change <= 0.0:
        return new_b, new_z
    m = max(tau, 1.0 - tau) * xsq
    if m <= 0.0:
        return beta, z
    u = beta + g / m
    thr = n * lam / m
    if u > thr:
        return u - thr, 1.0
    if u < -thr:
        return u + thr, -1.0
    if lam > 0.0:
        return 0.0, min(1.0, max(-1.0, (g + m * beta) / (n * lam)))
    return 0.0, 0.0


@numba.njit(cache=True)
def _heuristic_gamma(r, tau, scale, floor):
    rt = np.empty_like(r)
    for i in range(r.shape[0]):
        rt[i] = (1.0 - tau) * r[i] if r[i] <= 0.0 else tau * r[i]
    med = np.median(rt)
    mad = np.median(np.abs(rt - med)) / 0.6744897501960817
    return max(floor, mad * scale)


@numba.njit(cache=True)
def _kkt(X, r, tau, gamma, lam, beta):
    n, d = X.shape
    out = 0.0
    g0 = 0.0
    for i in range(n):
        g0 += _dl(r[i], tau, gamma)
    out = abs(g0) / n
    for j in range(d):
        g = 0.0
        for i in range(n):
            g += _dl(r[i], tau, gamma) * X[i, j]
        g /= n
        if beta[j] != 0.0 and lam[j] > 0.0:
            s = 1.0 if beta[j] > 0.0 else -1.0
            v = abs(g - lam[j] * s)
        elif lam[j] > 0.0:
            v = max(abs(g) - lam[j], 0.0)
        else:
            v = abs(g)
        if v > out:
            out = v
    return out


@numba.njit(cache=True)
def _sncd_kernel(X, y, tau, gamma, lam, b0, beta, z, tol, kkt_tol, max_iter,
                 adaptive, gamma_floor, gamma_scale, cold):
    n, d = X.shape
    xsq = np.empty(d)
    for j in range(d):
        acc = 0.0
        for i in range(n):
            acc += X[i, j] * X[i, j]
        xsq[j] = acc
    r = y.copy()
    for i in range(n):
        r[i] -= b0
    for j in range(d):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    frozen = not adaptive
    kkt = np.inf
    it = 0
    converged = False
    while it < max_iter:
        if not frozen:
            if cold and it == 0:
                gamma = max(gamma_floor, gamma_scale)
            else:
                gamma = _heuristic_gamma(r, tau, gamma_scale, gamma_floor)
        it += 1
        all_zero = True
        for i in range(n):
            if r[i] != 0.0:
                all_zero = False
                break
        if all_zero:
            kkt = _kkt(X, r, tau, gamma, lam, beta)
            converged = True
            break
        b0_new, _ = _safe_step(r, r, tau, gamma, 0.0, b0, 0.0, float(n), True)
        step = b0_new - b0
        diff2 = step * step
        if step != 0.0:
            b0 += step
            for i in range(n):
                r[i] -= step
        for j in range(d):
            xj = X[:, j]
            new_b, new_z = _safe_step(xj, r, tau, gamma, lam[j], beta[j], z[j], xsq[j], False)
            z[j] = new_z
            delta = new_b - beta[j]
            if delta != 0.0:
                beta[j] = new_b
                for i in range(n):
                    r[i] -= delta * xj[i]
                diff2 += delta * delta
        dist = math.sqrt(diff2)
        if not frozen:
            # the MAD heuristic can cycle between neighbouring order statistics
            if dist < 10.0 * tol or it >= ADAPTIVE_SWEEPS:
                frozen = True
            continue
        if dist <= tol:
            kkt = _kkt(X, r, tau, gamma, lam, beta)
            if kkt <= kkt_tol:
                converged = True
                break
    if not converged:
        kkt = _kkt(X, r, tau, gamma, lam, beta)
    return b0, gamma, it, converged, kkt


# ---------------------------------------------------------------------------
# single-step operations

@dataclass
class SncdState:
    '''Mutable coordinate-descent state: residuals are y - b0 - X b.'''
    X: np.ndarray
    residuals: np.ndarray
    loss: LossSpec
    weights: np.ndarray
    intercept: float = 0.0
    slopes: np.ndarray | None = None
    subgradient: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asfortranarray(self.X, dtype=float)
        self.residuals = np.asarray(self.residuals, dtype=float).copy()
        self.weights = np.asarray(self.weights, dtype=float)
        d = self.X.shape[1]
        self.slopes = np.zeros(d) if self.slopes is None else np.asarray(self.slopes, float).copy()
        self.subgradient = np.zeros(d) if self.subgradient is None else np.asarray(self.subgradient, float).copy()


def sncd_update_intercept(state: SncdState) -> float:
    '''Newton step for the intercept; returns the new intercept (state untouched).'''
    return state.intercept + _intercept_step(state.residuals, state.loss.tau, state.loss.gamma)


def sncd_update_pair(state: SncdState, j: int) -> tuple[float, float]:
    '''Semismooth Newton update of (b_j, z_j) for a 0-based slope index j.'''
    return _pair_step(state.X[:, j], state.residuals, state.loss.tau, state.loss.gamma,
                      float(state.weights[j]), float(state.slopes[j]), float(state.subgradient[j]))


def stabilized_denominator(residuals, gamma: float, tau: float, x=None) -> float:
    '''
        Curvature sum used by the Newton steps.  When no curvature is available,
        or fewer than max(5%, 1/n) residuals lie in [-gamma, gamma], it is replaced
        by sum_{|r_i| > gamma} x_i^2 / |r_i|.
    '''
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ValueError("residual vector must be nonempty")
    if not np.any(r):
        raise AllZeroResiduals("all residuals are zero")
    unit = x is None
    x = r if unit else np.asarray(x, dtype=float)
    g, h, inside, tail = _coordinate_sums(x, r, tau, gamma, unit)
    return float(_denominator(h, tail, inside, r.shape[0]))


def uses_continuity_approximation(residuals, gamma: float) -> bool:
    r = np.asarray(residuals, dtype=float)
    n = r.shape[0]
    return bool(np.sum(np.abs(r) <= gamma) < max(0.05, 1.0 / n) * n)


# ---------------------------------------------------------------------------
# drivers

def gamma_scale(n: int, p: int) -> float:
    '''sqrt(n / log(n p)): both the starting gamma and the MAD multiplier.'''
    return math.sqrt(n / math.log(n * max(p, 1)))


def _finish(data, loss, lam, b0, beta, gamma, it, converged, kkt):
    r = data.y - b0 - data.X @ beta
    loss_g = loss.with_gamma(gamma)
    grad = data.X.T @ loss_grad(loss_g, r) / data.n if data.d else np.zeros(0)
    z = np.zeros(data.d)
    pos = lam > 0
    act = pos & (beta != 0)
    z[act] = np.sign(beta[act])
    ina = pos & (beta == 0)
    z[ina] = np.clip(grad[ina] / lam[ina], -1.0, 1.0)
    return FitResult(float(b0), beta, z, float(gamma), int(it), bool(converged), float(kkt), r,
                     lam.copy())


def fit_sncd(data: Dataset, loss: LossSpec, weights, opts: SolveOptions = SolveOptions(),
             init: FitResult | None = None, strict: bool = True) -> FitResult:
    '''
        Weighted l1-penalized asymmetric Huber regression by semismooth Newton
        coordinate descent.

    Arguments
    ---------
    weights : length-d vector of nonnegative penalty levels, one per slope.

    init : previous fit to warm-start from (coefficients and subgradient); the
           default starts at zero.

    strict : raise NonConvergence when max_iter is hit; otherwise return the
             last iterate with ``converged=False``.
    '''
    lam = np.asarray(weights, dtype=float).reshape(-1)
    if lam.shape[0] != data.d:
        raise ValueError(f"expected {data.d} weights, got {lam.shape[0]}")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise InvalidWeight("penalty weights must be finite and nonnegative")
    if init is None:
        b0, beta, z, cold = 0.0, np.zeros(data.d), np.zeros(data.d), True
    else:
        b0, beta, z, cold = init.intercept, init.slopes.astype(float).copy(), \
            init.subgradient.astype(float).copy(), False
    gamma0 = init.gamma_used if (init is not None and opts.gamma_adaptive) else loss.gamma
    b0, gamma, it, converged, kkt = _sncd_kernel(
        data.X, data.y, loss.tau, float(gamma0), lam, float(b0), beta, z, opts.tol,
        opts.kkt_tol, opts.max_iter, opts.gamma_adaptive, opts.gamma_floor,
        gamma_scale(data.n, data.d), cold)
    res = _finish(data, loss, lam, b0, beta, gamma, it, converged, kkt)
    if strict and not converged:
        raise NonConvergence(opts.max_iter, res)
    return res


def lambda_max(data: Dataset, loss: LossSpec, opts: SolveOptions = SolveOptions()) -> tuple[float, FitResult]:
    '''
        Smallest uniform penalty level at which all slopes are zero, together
        with the intercept-only fit it is computed from.
    '''
    base = fit_sncd(Dataset(np.zeros((data.n, 0)), data.y), loss, np.zeros(0), opts)
    r = data.y - base.intercept
    g = np.abs(data.X.T @ loss_grad(loss.with_gamma(base.gamma_used), r)) / data.n
    lmax = float(np.max(g)) if g.size else 0.0
    fit = FitResult(base.intercept, np.zeros(data.d), np.zeros(data.d), base.gamma_used,
                    base.iterations, base.converged, base.kkt_residual, r)
    return lmax, fit


def kkt_certificate(data: Dataset, loss: LossSpec, weights, fit: FitResult) -> dict:
    '''
        Residuals of the three KKT lines, recomputed from the data:
        intercept score, slope stationarity with the reported subgradient, and
        the soft-threshold fixed point b_j = S(b_j + z_j).
    '''
    lam = np.asarray(weights, dtype=float)
    spec = loss.with_gamma(fit.gamma_used)
    r = data.y - fit.intercept - data.X @ fit.slopes
    score = loss_grad(spec, r)
    line_a = abs(float(np.mean(score)))
    g = data.X.T @ score / data.n
    line_b = np.abs(-g + lam * fit.subgradient)
    u = fit.slopes + fit.subgradient
    soft = np.sign(u) * np.maximum(np.abs(u) - 1.0, 0.0)
    line_c = np.where(lam > 0, np.abs(fit.slopes - soft), 0.0)
    zbound = float(np.max(np.abs(fit.subgradient))) if fit.subgradient.size else 0.0
    return {"intercept": line_a,
            "stationarity": float(np.max(line_b)) if line_b.size else 0.0,
            "soft_threshold": float(np.max(line_c)) if line_c.size else 0.0,
            "subgradient_bound": zbound}


def penalized_objective(data: Dataset, loss: LossSpec, weights, intercept, slopes) -> float:
    r = data.y - intercept - data.X @ np.asarray(slopes, float)
    return float(np.mean(loss_value(loss, r)) + np.sum(np.asarray(weights) * np.abs(slopes)))


# ---------------------------------------------------------------------------
# smooth (unpenalized) solver

def _newton(Z, y, loss, coef, tol, max_iter):
    n = Z.shape[0]
    r = y - Z @ coef
    f = float(np.mean(loss_value(loss, r)))
    for it in range(1, max_iter + 1):
        grad = -Z.T @ loss_grad(loss, r) / n
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            return coef, r, it - 1, gnorm, True
        w = loss_hess(loss, r)
        if loss.robust and uses_continuity_approximation(r, loss.gamma):
            w = np.where(np.abs(r) > loss.gamma, 1.0 / np.maximum(np.abs(r), 1e-300), w)
        H = (Z * w[:, None]).T @ Z / n
        try:
            step = -np.linalg.solve(H, grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            H = H + 1e-8 * max(1.0, float(np.trace(H))) * np.eye(H.shape[0])
            step = -np.linalg.solve(H, grad)
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        t = 1.0
        flat = 64 * np.finfo(float).eps * max(1.0, abs(f))
        while True:
            new = coef + t * step
            r_new = y - Z @ new
            f_new = float(np.mean(loss_value(loss, r_new)))
            if f_new <= f + 1e-4 * t * slope or t < 1e-12:
                break
            # near the optimum decreases fall below rounding; trust the full Newton step
            if t == 1.0 and abs(f_new - f) <= flat:
                break
            t *= 0.5
        if t < 1e-12 and f_new >= f:
            return coef, r, it, gnorm, False
        coef, r, f = new, r_new, f_new
    grad = -Z.T @ loss_grad(loss, r) / n
    gnorm = float(np.max(np.abs(grad)))
    return coef, r, max_iter, gnorm, gnorm <= tol


def fit_smooth(data: Dataset, loss: LossSpec, opts: SolveOptions = SolveOptions(tol=1e-9),
               init=None) -> FitResult:
    '''
        Unpenalized asymmetric Huber regression (n > d) by damped Newton steps
        with backtracking.  With ``opts.gamma_adaptive`` the fit alternates
        between the MAD heuristic for gamma and a full solve until gamma settles.
    '''
    n, d = data.n, data.d
    if n <= d:
        raise ValueError("fit_smooth needs more observations than predictors")
    Z = np.column_stack([np.ones(n), data.X])
    if d and np.linalg.matrix_rank(Z) < d + 1:
        raise DegenerateDesign("design with intercept is rank deficient")
    if init is None:
        coef = np.zeros(d + 1)
    elif isinstance(init, FitResult):
        coef = init.coef.astype(float)
    else:
        coef = np.asarray(init, dtype=float).copy()
    y = np.asarray(data.y)

    if not opts.gamma_adaptive:
        coef, r, it, gnorm, ok = _newton(Z, y, loss, coef, opts.tol, opts.max_iter)
        gamma, total = loss.gamma, it
    else:
        scale = gamma_scale(n, d)
        r = y - Z @ coef
        gamma, total = _heuristic_gamma(r, loss.tau, scale, opts.gamma_floor), 0
        for _ in range(100):
            coef, r, it, gnorm, ok = _newton(Z, y, loss.with_gamma(gamma), coef, opts.tol,
                                             opts.max_iter)
            total += it
            new_gamma = _heuristic_gamma(r, loss.tau, scale, opts.gamma_floor)
            if abs(new_gamma - gamma) <= 1e-8 * gamma:
                break
            gamma = new_gamma
        coef, r, it, gnorm, ok = _newton(Z, y, loss.with_gamma(gamma), coef, opts.tol,
                                         opts.max_iter)
        total += it
    res = FitResult(float(coef[0]), coef[1:].copy(), np.zeros(d), float(gamma), int(total),
                    bool(ok), float(gnorm), y - Z @ coef, np.zeros(d))
    if not ok:
        raise NonConvergence(opts.max_iter, res)
    return res
