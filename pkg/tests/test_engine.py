from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kovalevskaya.classify import cond2_substitution, cond3_substitution, parametric_system
from kovalevskaya.engine import (
    ResidueMismatch,
    build_L,
    default_depth,
    expand_series,
    maximality,
    residual_check,
    resonances,
    spectrum_dimensions,
)
from kovalevskaya.exact import MatPoly, PolyQ, param
from kovalevskaya.system import (
    ResiduePair,
    ResidueShape,
    SystemSpec,
    all_shapes,
    diag_residues,
    type_residues,
)

SMALL_SHAPES = [s for n in (1, 2, 3) for s in all_shapes(n)]
shapes = st.sampled_from(SMALL_SHAPES)
weights = st.integers(-5, 2)


def _variation(pair: ResiduePair, alpha, beta):
    """Matrix of the first-order variation of the right-hand side at (p, q)."""
    n = pair.n
    s = PolyQ.var(param("s_var"))
    sys = SystemSpec.homogeneous_system(n, alpha, beta)
    cols = []
    for c in range(2 * n * n):
        X, Y = MatPoly.zeros(n), MatPoly.zeros(n)
        i, j = divmod(c % (n * n), n)
        if c < n * n:
            X = MatPoly.unit(n, i, j)
        else:
            Y = MatPoly.unit(n, i, j)
        du, dv = sys.rhs(pair.p + X * s, pair.q + Y * s)
        cols.append([e.coefficient(param("s_var"), 1).as_rational() for e in list(du) + list(dv)])
    return [list(r) for r in zip(*cols)]


@given(shapes, weights, weights)
def test_L_is_the_linearization_of_the_rhs(shape, a, b):
    pair = diag_residues(shape.n, shape)
    assert build_L(pair, a, b).matrix.tolist() == _variation(pair, a, b)


@given(shapes, weights, weights, st.integers(-10, 10))
def test_formula_counts_the_generalized_eigenspace(shape, a, b, k):
    L = build_L(diag_residues(shape.n, shape), a, b)
    assert L.generalized_nullity(k) == spectrum_dimensions(a, b, shape).dimension_at(k)


@given(shapes, weights, weights)
def test_formula_dimensions_add_up_to_the_size(shape, a, b):
    assert spectrum_dimensions(a, b, shape).total == 2 * shape.n ** 2


def test_rank_nullity_is_smaller_at_a_jordan_collision():
    shape = ResidueShape.commuting(0, 0, 1, 1)
    L = build_L(diag_residues(2, shape), -3, -3)
    assert spectrum_dimensions(-3, -3, shape).dimension_at(-1) == 3
    assert L.generalized_nullity(-1) == 3
    assert L.nullity(-1) == 2


# series ----------------------------------------------------------------------


def test_scalar_series_through_order_five():
    sys = SystemSpec.homogeneous_system(1, -1, -1)
    ser = expand_series(sys, type_residues(1, 1), N=6)
    assert [fp.label for fp in ser.free_params] == ["x2_11"]
    s = PolyQ.var(ser.free_params[0].param)
    u = [m[0, 0] for m in ser.u_coefficients()]
    assert u[:7] == [-1, 0, 0, s, 0, 0, s * s * Fraction(-3, 7)]
    assert residual_check(sys, ser)


def test_block_parameter_inventory_at_the_centre():
    sys = SystemSpec.homogeneous_system(2, -1, -1)
    for t in (1, 2, 3):
        ser = expand_series(sys, type_residues(t, 2))
        assert [fp.label for fp in ser.free_params] == ["x0_22", "y0_22", "x1_12", "x1_21", "x2_11"]
        v = maximality(ser)
        assert v.maximal and v.total == 8 and ser.obstruction_free
        assert residual_check(sys, ser)


def test_labels_carry_local_indices_for_larger_blocks():
    sys = SystemSpec.homogeneous_system(3, -1, -1)
    ser = expand_series(sys, type_residues(1, 3))
    labels = [fp.label for fp in ser.free_params]
    assert "x0_22[1,2]" in labels
    assert all(lab.startswith(("x", "y")) for lab in labels)


def test_default_depth_is_three_past_the_last_resonance():
    pair = type_residues(1, 2)
    L = build_L(pair, -1, -1)
    assert resonances(L) == {0: 2, 1: 2, 2: 1}
    assert default_depth(L) == 5
    assert expand_series(SystemSpec.homogeneous_system(2, -1, -1), pair).depth == 5


def test_residual_check_detects_a_perturbed_coefficient():
    sys = SystemSpec.homogeneous_system(2, -1, -1)
    ser = expand_series(sys, type_residues(1, 2), N=4)
    x, y = ser.coeffs[-1]
    ser.coeffs[-1] = (x + MatPoly.unit(2, 0, 1), y)
    assert not residual_check(sys, ser)


def test_wrong_residues_are_rejected():
    sys = SystemSpec.homogeneous_system(2, 0, 0)
    bogus = ResiduePair(MatPoly.identity(2) * 2, MatPoly.zeros(2), ResidueShape.commuting(0, 2, 0, 0))
    with pytest.raises(ResidueMismatch):
        expand_series(sys, bogus)


def test_order_one_obstruction_after_the_linear_constraints():
    sys = parametric_system(2, -1, -1)
    ser = expand_series(sys, type_residues(1, 2), N=1)
    assert [k for k, _ in ser.obstructions] == [1]
    b1 = MatPoly.symbolic("b1", 2)
    lin = {**cond2_substitution(2), **cond3_substitution(2)}
    polys = [p.substitute_all(lin) for p in ser.obstructions[0][1]]
    equal_b = {param(f"b2_{i}{j}"): b1[i - 1, j - 1] for i in (1, 2) for j in (1, 2)}
    # [b1, b2] vanishes but the (gamma1 + gamma2)(b1 + b2)/2 part survives
    assert not all(p.substitute_all(equal_b).is_zero() for p in polys)
    g = {param("gamma2"): -PolyQ.var(param("gamma1"))}
    assert all(p.substitute_all(equal_b).substitute_all(g).is_zero() for p in polys)


def test_expansions_are_reproducible_as_text():
    sys = SystemSpec.homogeneous_system(2, 0, -3)
    a = expand_series(sys, type_residues(3, 2))
    b = expand_series(sys, type_residues(3, 2))
    assert [m.to_text() for m in a.xs] == [m.to_text() for m in b.xs]
    assert a.obstruction_texts() == b.obstruction_texts()
