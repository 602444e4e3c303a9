"""Asymmetric Huber loss family.

Every function accepts a scalar or an array for ``u`` and returns the same
shape.  ``gamma = inf`` selects the asymmetric squared (expectile) loss.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class LossKind(enum.Enum):
    HUBER = "huber"


@dataclass(frozen=True)
class LossSpec:
    '''
        Asymmetric robust loss L(u) = |tau - 1(u < 0)| * gamma^2 * l(u / gamma)

    Arguments
    ---------
    tau : expectile level in (0, 1).

    gamma : robustification parameter; math.inf gives the asymmetric squared loss.

    kind : base loss l; only the Huber loss is available.
    '''
    tau: float = 0.5
    gamma: float = math.inf
    kind: LossKind = LossKind.HUBER

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not (self.gamma > 0):
            raise ValueError(f"gamma must be positive or inf, got {self.gamma}")
        if self.kind is not LossKind.HUBER:
            raise ValueError(f"unsupported loss kind {self.kind}")

    @property
    def robust(self) -> bool:
        return math.isfinite(self.gamma)

    def with_gamma(self, gamma: float) -> "LossSpec":
        return LossSpec(self.tau, gamma, self.kind)


def weight(spec: LossSpec, u):
    '''tau for u >= 0, 1 - tau for u < 0.'''
    u = np.asarray(u, dtype=float)
    out = np.where(u < 0, 1.0 - spec.tau, spec.tau)
    return out if out.ndim else float(out)


def loss_value(spec: LossSpec, u):
    u = np.asarray(u, dtype=float)
    w = np.where(u < 0, 1.0 - spec.tau, spec.tau)
    if spec.robust:
        g = spec.gamma
        au = np.abs(u)
        base = np.where(au <= g, 0.5 * u * u, g * au - 0.5 * g * g)
    else:
        base = 0.5 * u * u
    out = w * base
    return out if out.ndim else float(out)


def loss_grad(spec: LossSpec, u):
    u = np.asarray(u, dtype=float)
    w = np.where(u < 0, 1.0 - spec.tau, spec.tau)
    v = np.clip(u, -spec.gamma, spec.gamma) if spec.robust else u
    out = w * v
    return out if out.ndim else float(out)


def loss_hess(spec: LossSpec, u):
    u = np.asarray(u, dtype=float)
    w = np.where(u < 0, 1.0 - spec.tau, spec.tau)
    if spec.robust:
        w = np.where(np.abs(u) <= spec.gamma, w, 0.0)
    out = w * np.ones_like(u)
    return out if out.ndim else float(out)


def asymmetric_sq(u, tau: float):
    '''Asymmetric squared loss |tau - 1(u<0)| u^2 / 2, used for validation.'''
    u = np.asarray(u, dtype=float)
    return np.where(u < 0, 1.0 - tau, tau) * (0.5 * u * u)
