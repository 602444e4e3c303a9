"""Folded-concave penalty derivatives used as reweighting functions."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class PenaltyKind(enum.Enum):
    L1 = "l1"
    SCAD = "scad"
    MCP = "mcp"


DEFAULT_SHAPE = {PenaltyKind.L1: 1.0, PenaltyKind.SCAD: 3.7, PenaltyKind.MCP: 3.0}


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind = PenaltyKind.SCAD
    lam: float = 0.1
    shape: float | None = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", PenaltyKind(self.kind.lower()))
        if self.shape is None:
            object.__setattr__(self, "shape", DEFAULT_SHAPE[self.kind])
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.kind is PenaltyKind.SCAD and not self.shape > 2:
            raise ValueError(f"SCAD shape must exceed 2, got {self.shape}")
        if self.kind is PenaltyKind.MCP and not self.shape > 1:
            raise ValueError(f"MCP shape must exceed 1, got {self.shape}")

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.kind, lam, self.shape)


def unit_derivative(kind: PenaltyKind, shape: float, t):
    '''
        Derivative p0'(t) of the lambda = 1 penalty, so that
        p_lambda'(t) = lambda * p0'(t / lambda).
    '''
    t = np.asarray(t, dtype=float)
    if kind is PenaltyKind.L1:
        return np.ones_like(t)
    if kind is PenaltyKind.SCAD:
        return np.where(t <= 1.0, 1.0, np.maximum(shape - t, 0.0) / (shape - 1.0))
    return np.maximum(1.0 - t / shape, 0.0)


def weight_derivative(pen: PenaltySpec, t):
    '''
        Penalty derivative p_lambda'(t) for t >= 0; always in [0, lambda].
    '''
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(~np.isfinite(t)):
        raise ValueError("penalty derivative needs finite t >= 0")
    out = pen.lam * unit_derivative(pen.kind, pen.shape, t / pen.lam)
    # exact zero beyond shape * lambda, whatever the rounding of t / lambda
    if pen.kind is not PenaltyKind.L1:
        out = np.where(t >= pen.shape * pen.lam, 0.0, out)
    return out if out.ndim else float(out)


def weight_vector(pen: PenaltySpec, beta) -> np.ndarray:
    '''Reweighting vector p_lambda'(|beta_j|) over the slope coefficients.'''
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    return np.asarray(weight_derivative(pen, np.abs(beta)), dtype=float).reshape(beta.shape)
