import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from retire import PenaltyKind, PenaltySpec, weight_derivative, weight_vector
from retire.penalty import unit_derivative


def _scad_symbolic(lam, a):
    # SCAD penalty from its piecewise definition, differentiated symbolically
    t = sp.symbols("t", nonnegative=True)
    L, A = sp.Rational(lam), sp.Rational(a)
    p = sp.Piecewise((L * t, t <= L),
                     ((2 * A * L * t - t ** 2 - L ** 2) / (2 * (A - 1)), t <= A * L),
                     ((A + 1) * L ** 2 / 2, True))
    return sp.lambdify(t, sp.diff(p, t), "math")


def _mcp_primitive(t, lam, b):
    return np.where(t <= b * lam, lam * t - t * t / (2 * b), b * lam * lam / 2)


@pytest.mark.parametrize("pen,t,expected", [
    (PenaltySpec("l1", 0.5), 7.0, 0.5),
    (PenaltySpec("scad", 1.0, 3.7), 0.0, 1.0),
    (PenaltySpec("scad", 1.0, 3.7), 5.0, 0.0),
    (PenaltySpec("mcp", 1.0, 3.0), 0.9, 0.7),
])
def test_weight_derivative_examples(pen, t, expected):
    assert weight_derivative(pen, t) == pytest.approx(expected, abs=1e-15)


def test_weight_vector_examples():
    np.testing.assert_allclose(weight_vector(PenaltySpec("l1", 0.2), [3, -1, 0]), [0.2] * 3)
    np.testing.assert_array_equal(weight_vector(PenaltySpec("scad", 1.0), np.zeros(6)), np.ones(6))
    np.testing.assert_allclose(weight_vector(PenaltySpec("mcp", 1.0, 3.0), [0.9]), [0.7])


@pytest.mark.parametrize("lam,a", [("1", "3.7"), ("0.3", "3.7"), ("2", "2.5")])
def test_scad_against_symbolic(lam, a):
    d = _scad_symbolic(lam, a)
    lam_f, a_f = float(sp.Rational(lam)), float(sp.Rational(a))
    pen = PenaltySpec("scad", lam_f, a_f)
    for t in np.linspace(0.0, 1.5 * a_f * lam_f, 301):
        if min(abs(t - lam_f), abs(t - a_f * lam_f)) < 1e-9:
            continue
        assert weight_derivative(pen, t) == pytest.approx(float(d(t)), abs=1e-12)


@pytest.mark.parametrize("lam,b", [(1.0, 3.0), (0.4, 1.5)])
def test_mcp_against_numeric_derivative(lam, b):
    pen = PenaltySpec("mcp", lam, b)
    h = 1e-6
    for t in np.linspace(1e-3, 2 * b * lam, 97):
        if abs(t - b * lam) < 1e-4:
            continue
        fd = (_mcp_primitive(t + h, lam, b) - _mcp_primitive(t - h, lam, b)) / (2 * h)
        assert weight_derivative(pen, t) == pytest.approx(float(fd), abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["l1", "scad", "mcp"]), st.floats(1e-3, 10.0),
       st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_monotone_and_range(kind, lam, t1, t2):
    pen = PenaltySpec(kind, lam)
    lo, hi = min(t1, t2), max(t1, t2)
    a, b = weight_derivative(pen, hi), weight_derivative(pen, lo)
    assert a <= b
    assert 0.0 <= a <= lam and 0.0 <= b <= lam
    assert weight_derivative(pen, 0.0) == lam


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 10.0), st.floats(0.0, 50.0))
def test_folded_concave_vanishing(lam, excess):
    assert weight_derivative(PenaltySpec("scad", lam, 3.7), 3.7 * lam + excess) == 0.0
    assert weight_derivative(PenaltySpec("mcp", lam, 3.0), 3.0 * lam + excess) == 0.0


def test_scale_form():
    t = np.linspace(0, 10, 51)
    for kind in PenaltyKind:
        pen = PenaltySpec(kind, 0.7)
        np.testing.assert_allclose(weight_derivative(pen, t),
                                   0.7 * unit_derivative(kind, pen.shape, t / 0.7))


def test_validation():
    with pytest.raises(ValueError):
        PenaltySpec("scad", 1.0, 2.0)
    with pytest.raises(ValueError):
        PenaltySpec("mcp", 1.0, 1.0)
    with pytest.raises(ValueError):
        PenaltySpec("l1", 0.0)
    with pytest.raises(ValueError):
        PenaltySpec("ridge", 1.0)
    with pytest.raises(ValueError):
        weight_derivative(PenaltySpec("l1", 1.0), -0.1)
    assert PenaltySpec("scad").shape == 3.7 and PenaltySpec("mcp").shape == 3.0
