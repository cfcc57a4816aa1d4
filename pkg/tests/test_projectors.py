import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewtrich.core import GridSpec, NormKind
from skewtrich.errors import FamilyCountError, IncompatibleFamiliesError, IndexKindError
from skewtrich.projectors import (Indexing, ProjectionFamily, ProjKind, Regime, apply_projection,
                                  check_compatibility, check_invariance, complementary_projector, coord, identity,
                                  product, require_compatible, zero)
from skewtrich.scenarios import build_scenario

EX2 = build_scenario("example2")
X0 = EX2.base_point(0.0)
GRID = GridSpec(t0_values=(0.0, 1.0), s_gaps=(0.0, 1.0), t_gaps=(0.0, 2.0, 10.0), shifts=(0.0, 2.0))
V = np.array([3.0, -2.0, 5.0])


def test_apply_examples():
    np.testing.assert_array_equal(apply_projection(coord(1), X0, V), [3, 0, 0])
    np.testing.assert_array_equal(apply_projection(identity(), X0, V), V)
    comp = ProjectionFamily(ProjKind.COMPLEMENT_OF, refs=(coord(1),))
    np.testing.assert_array_equal(apply_projection(comp, X0, V), [0, -2, 5])


def test_index_kind_enforced():
    with pytest.raises(IndexKindError):
        apply_projection(coord(1), 2.0, V)
    with pytest.raises(IndexKindError):
        apply_projection(coord(1, indexing=Indexing.TIME), X0, V)


def test_complement_examples():
    assert complementary_projector(zero()).kind is ProjKind.IDENTITY
    assert complementary_projector(coord(1), 3) == coord(2, 3)
    P = coord(2)
    twice = complementary_projector(complementary_projector(P))
    for v in np.eye(3):
        np.testing.assert_array_equal(twice.matrix(X0, 3) @ v, P.matrix(X0, 3) @ v)


@given(st.sets(st.integers(1, 4)), st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_coordinate_families_idempotent(keep, v):
    P = coord(*keep).matrix(X0, 4)
    v = np.array(v)
    np.testing.assert_array_equal(P @ (P @ v), P @ v)
    Q = complementary_projector(coord(*keep), 4).matrix(X0, 4)
    np.testing.assert_array_equal(P @ v + Q @ v, v)


def test_invariance_examples():
    for P in (coord(1), zero(), coord(2, 3)):
        assert check_invariance(P, EX2.xi, GRID).max_residual == 0.0
    swap = ProjectionFamily(ProjKind.SCHEDULED, Indexing.TIME, schedule=lambda t: {1} if int(t) % 2 == 0 else {2})
    grid = GridSpec(t0_values=(0.0,), s_gaps=(0.0,), t_gaps=(1.0,), shifts=(0.0,), include_limit=False,
                    probes=np.eye(3)[:1])
    assert not check_invariance(swap, EX2.xi, grid, x0=X0).passed


def test_three_global_and_four_pass_under_l2():
    rep = check_compatibility(Regime.THREE_GLOBAL, EX2.three, EX2.xi, GRID, norm_kind=NormKind.L2)
    assert rep.passed and max(rep.residuals.values()) == 0.0
    four = check_compatibility(Regime.FOUR, EX2.four, EX2.xi, GRID, x0=X0, norm_kind=NormKind.L2)
    assert four.passed
    assert [R.describe() for R in EX2.four] == ["COORD{1}", "COORD{2}", "COORD{2,3}", "COORD{1,3}"]
    r34 = product(EX2.four[2], EX2.four[3]).matrix(X0, 3)
    np.testing.assert_array_equal(r34, coord(3).matrix(X0, 3))


def test_two_regime_l1_witness():
    grid = GridSpec(t0_values=(0.0,), s_gaps=(0.0,), t_gaps=(0.0,), shifts=(0.0,), probes=[[1.0, 1.0, 0.0]])
    rep = check_compatibility(Regime.TWO, EX2.two, EX2.xi, grid, x0=X0, norm_kind=NormKind.L1)
    assert rep.residuals["cq2"] == 2.0 and not rep.passed
    with pytest.raises(IncompatibleFamiliesError) as info:
        require_compatible(Regime.TWO, EX2.two, EX2.xi, grid, x0=X0, norm_kind=NormKind.L1)
    assert info.value.report is not None


def test_family_count_checked():
    with pytest.raises(FamilyCountError):
        check_compatibility(Regime.TWO, EX2.three, EX2.xi, GRID)


def test_overlapping_families_fail_sum_condition():
    fams = (coord(3), coord(1, 2), coord(2))
    rep = check_compatibility(Regime.THREE_GLOBAL, fams, EX2.xi, GRID, norm_kind=NormKind.L2)
    assert not rep.passed and rep.residuals["c2"] > 0
