import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewtrich.basespace import BasePoint, BaseSpace, TrajectorySpec, metric_d, trajectory_eval
from skewtrich.closed_form import closed_form_log_growth
from skewtrich.core import (CocycleSpec, ComponentLaw, GridSpec, Law, NormKind, SemiflowSpec, SkewEvolution,
                            TimePair, check_cocycle_axioms, check_semiflow_axioms, eval_cocycle, eval_semiflow,
                            log_norm, orbit_exponents)
from skewtrich.errors import DomainError, EmptyGridError, SpaceMismatchError, TimeOrderError

F = TrajectorySpec.exp_decay(1.0, 1.0)
SPACE = BaseSpace(F, name="f")


def test_generator_values():
    assert F(0.0) == 2.0
    assert SPACE.limit_point()(7.3) == 1.0
    assert TrajectorySpec.interval_decay(1)(0.0) == pytest.approx(1 / 3 + 1 / 12)
    with pytest.raises(DomainError):
        F(-0.1)


def test_time_pair_order():
    assert TimePair(3.0, 1.0).gap == 2.0
    with pytest.raises(TimeOrderError):
        TimePair(1.0, 3.0)


def test_shift_semiflow_examples():
    flow = SemiflowSpec(SPACE)
    x = SPACE.point(0.0)
    assert eval_semiflow(flow, 5.0, 5.0, x) == x
    assert eval_semiflow(flow, 3.0, 1.0, SPACE.point(2.0)) == SPACE.point(4.0)
    two_step = eval_semiflow(flow, 4.0, 2.0, eval_semiflow(flow, 2.0, 1.0, x))
    taus = np.linspace(0, 30, 301)
    assert np.max(np.abs(two_step(taus) - eval_semiflow(flow, 4.0, 1.0, x)(taus))) == 0.0
    with pytest.raises(TimeOrderError):
        eval_semiflow(flow, 1.0, 2.0, x)


def test_metric_examples():
    x, lim = SPACE.point(0.0), SPACE.limit_point()
    value, bound = metric_d(x, x)
    assert value == 0.0 and bound == 2.0 ** -20
    coarse = metric_d(x, lim)[0]
    fine = metric_d(x, lim, tau_step=0.0005)[0]
    assert abs(coarse - fine) < 1e-4
    other = BaseSpace(TrajectorySpec.constant(1.0))
    with pytest.raises(SpaceMismatchError):
        metric_d(x, other.point(0.0))


@given(st.floats(0, 20), st.floats(0, 20))
@settings(max_examples=40, deadline=None)
def test_metric_symmetric(a, b):
    x, y = SPACE.point(a), SPACE.point(b)
    assert metric_d(x, y)[0] == metric_d(y, x)[0]


def test_closed_form_examples():
    assert closed_form_log_growth(TrajectorySpec.constant(1.0), 0.0, 0.0, 2.0) == 2.0
    assert closed_form_log_growth(F, 0.0, 0.0, 1.0) == pytest.approx(1 + (1 - math.exp(-1)), abs=1e-12)
    n1 = TrajectorySpec.interval_decay(1)
    assert closed_form_log_growth(n1, 0.0, 0.0, 3.0) == pytest.approx(1 + (1 - math.exp(-3)) / 12, abs=1e-12)
    with pytest.raises(TimeOrderError):
        closed_form_log_growth(F, 0.0, 2.0, 1.0)


@given(st.floats(0, 10), st.floats(0, 15), st.floats(0, 15))
def test_closed_form_additive_along_shift(shift, a, b):
    whole = closed_form_log_growth(F, shift, 0.0, a + b)
    parts = closed_form_log_growth(F, shift, 0.0, a) + closed_form_log_growth(F, shift + a, 0.0, b)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_cocycle_examples():
    const = BaseSpace(TrajectorySpec.constant(1.0))
    growth = CocycleSpec((ComponentLaw("+x"),))
    assert eval_cocycle(growth, 2.0, 2.0, const.point(0.0), [3.5])[0] == 3.5
    assert eval_cocycle(growth, 2.0, 0.0, const.point(0.0), [1.0])[0] == pytest.approx(math.exp(2), rel=1e-14)
    two = BaseSpace(TrajectorySpec.constant(2.0))
    ex2 = CocycleSpec((ComponentLaw("-mu+x", mu=3.0), ComponentLaw("+x"), ComponentLaw("-x(0)+x")))
    out = eval_cocycle(ex2, 1.0, 0.0, two.point(0.0), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(out, [math.exp(-1), 0, 0], rtol=1e-14)


def test_log_norm_handles_zero_and_huge():
    assert log_norm(np.zeros(2), np.zeros(2)) == -math.inf
    big = log_norm(np.array([800.0, 0.0]), np.array([1.0, 1.0]), NormKind.L1)
    assert big == pytest.approx(800.0)


def test_orbit_exponents_match_pointwise():
    xi = SkewEvolution(SemiflowSpec(SPACE), CocycleSpec((ComponentLaw("-mu+x", mu=3), ComponentLaw("+x"),
                                                          ComponentLaw("-x(0)+x"))))
    x0 = SPACE.point(0.5)
    gaps = np.array([0.0, 0.3, 2.0, 11.0])
    E = orbit_exponents(xi.cocycle, x0, gaps)
    for i, a in enumerate(gaps):
        np.testing.assert_allclose(E[:, i], xi.log_Psi_along(5.0 + a, 5.0, x0), rtol=1e-13, atol=1e-13)


SMALL = GridSpec(t0_values=(0.0, 1.0), s_gaps=(0.0, 2.0), t_gaps=(0.0, 1.0, 10.0), shifts=(0.0, 3.0))


def test_semiflow_axioms_pass_and_perturbed_fail():
    reps = check_semiflow_axioms(SemiflowSpec(SPACE), SMALL)
    assert reps[Law.ES1].passed and reps[Law.ES2].max_residual == 0.0
    bent = SemiflowSpec(SPACE, offset=lambda g: g * g)
    grid = GridSpec(t0_values=(0.0,), s_gaps=(2.0,), t_gaps=(2.0,), shifts=(0.0,), include_limit=False)
    rep = check_semiflow_axioms(bent, grid)[Law.ES2]
    assert not rep.passed and rep.max_residual > 0


def test_semiflow_axioms_diagonal_grid():
    grid = GridSpec(t0_values=(0.0, 3.0), s_gaps=(0.0,), t_gaps=(0.0,), shifts=(0.0,))
    reps = check_semiflow_axioms(SemiflowSpec(SPACE), grid)
    assert reps[Law.ES1].max_residual == 0 and reps[Law.ES2].max_residual == 0


def test_empty_grid_rejected():
    with pytest.raises(EmptyGridError):
        check_semiflow_axioms(SemiflowSpec(SPACE), GridSpec(t0_values=()))


def test_cocycle_anchor_matters():
    flow = SemiflowSpec(SPACE)
    grid = GridSpec(t0_values=(0.0,), s_gaps=(2.0,), t_gaps=(2.0,), shifts=(0.0,), include_limit=False)
    orbit = CocycleSpec((ComponentLaw("-x(0)+x", anchor="orbit"),))
    literal = CocycleSpec((ComponentLaw("-x(0)+x", anchor="point"),))
    assert check_cocycle_axioms(orbit, flow, grid)[Law.EC2].passed
    assert not check_cocycle_axioms(literal, flow, grid)[Law.EC2].passed


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10), st.floats(0, 8))
@settings(max_examples=60)
def test_cocycle_composition_property(t0, a, b, shift):
    xi = SkewEvolution(SemiflowSpec(SPACE), CocycleSpec((ComponentLaw("-mu+x", mu=3), ComponentLaw("+x"),
                                                          ComponentLaw("-x(0)+x"))))
    x = SPACE.point(shift)
    s, t = t0 + a, t0 + a + b
    lhs = xi.log_Psi(t, t0, x)
    rhs = xi.log_Psi(t, s, xi.psi(s, t0, x)) + xi.log_Psi(s, t0, x)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_base_point_validation():
    with pytest.raises(DomainError):
        BasePoint(SPACE, -1.0)
    assert trajectory_eval(SPACE.point(1.0), 0.0) == pytest.approx(1 + math.exp(-1))
