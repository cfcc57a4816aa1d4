import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewtrich.errors import NonConvergenceError
from skewtrich.quadrature import quadrature


def test_exponential_integrals():
    v, err = quadrature(lambda t: np.exp(-t), 0.0, 1.0)
    assert abs(v - (1 - math.exp(-1))) < 1e-8 and err <= 1e-8
    v, err = quadrature(np.exp, 0.0, 2.0)
    assert abs(v - (math.exp(2) - 1)) < 1e-8


def test_empty_interval_is_exact_zero():
    assert quadrature(np.exp, 1.5, 1.5) == (0.0, 0.0)


def test_scalar_integrand_accepted():
    v, _ = quadrature(lambda t: math.cos(t), 0.0, math.pi / 2)
    assert v == pytest.approx(1.0, abs=1e-10)


def test_subdivision_limit():
    with pytest.raises(NonConvergenceError):
        quadrature(lambda t: np.sign(np.sin(1e4 * t)), 0.0, 10.0, tol=1e-15, max_intervals=8)


@given(st.floats(0.05, 3.0), st.floats(0.1, 10.0))
@settings(max_examples=40)
def test_monotone_integrand_bracketed_by_riemann_sums(rate, b):
    f = lambda t: np.exp(-rate * t)
    v, _ = quadrature(f, 0.0, b)
    xs = np.linspace(0.0, b, 9)
    h = xs[1] - xs[0]
    right, left = h * f(xs[1:]).sum(), h * f(xs[:-1]).sum()
    assert right - 1e-12 <= v <= left + 1e-12


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-2, 2), st.floats(0, 3))
@settings(max_examples=40)
def test_polynomials_exact(coefs, a, width):
    p = np.polynomial.Polynomial(coefs)
    b = a + width
    v, _ = quadrature(p, a, b)
    P = p.integ()
    assert v == pytest.approx(P(b) - P(a), abs=1e-10)
