from __future__ import annotations

from fractions import Fraction
from itertools import product

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from kovalevskaya.exact import MatPoly, PolyQ, commutator, param
from kovalevskaya.system import (
    SIGMA,
    SIGMA0,
    BadPartition,
    DeltaZero,
    NotInSigma0,
    ResidueShape,
    SystemSpec,
    all_shapes,
    check_residue_equations,
    delta,
    diag_residues,
    dihedral_generators,
    dihedral_orbit,
    mu_values,
    noncommuting_exists,
    noncommuting_residues,
    orbit_dimension,
    type_residues,
)

from strategies import matrices

SHAPES = [s for n in range(1, 5) for s in all_shapes(n)]
NC_CASES = [(pt, s) for pt in sorted(SIGMA0) for n in (2, 3, 4) for s in all_shapes(n, 1)]


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: "".join(map(str, s.ks)))
def test_diagonal_residues_are_idempotent_up_to_sign(shape):
    pair = diag_residues(shape.n, shape)
    p, q = pair.p, pair.q
    assert p @ p @ p == p and q @ q @ q == q
    for a, b in [(0, 0), (-1, -1), (Fraction(1, 3), 2)]:
        assert check_residue_equations(pair, a, b)


@pytest.mark.parametrize("shape", SHAPES, ids=lambda s: "".join(map(str, s.ks)))
def test_orbit_dimension_of_diagonal_residues(shape):
    pair = diag_residues(shape.n, shape)
    assert orbit_dimension(pair) == shape.n ** 2 - sum(k * k for k in shape.ks)


@pytest.mark.parametrize("pt,shape", NC_CASES[::3], ids=str)
def test_noncommuting_residues_satisfy_the_quadratic_system(pt, shape):
    pair = noncommuting_residues(*pt, shape)
    assert check_residue_equations(pair, *pt)
    c = commutator(pair.p, pair.q)
    assert not c.is_zero()
    assert (c @ c).is_zero()


@pytest.mark.parametrize("pt", sorted(SIGMA0))
def test_mu_relations_hold_on_sigma0(pt):
    m1, m2, m3, m4 = mu_values(*pt).as_tuple()
    assert -m1 * m1 + 2 * m1 * m3 + m1 == 0
    assert -m3 * m3 + 2 * m1 * m3 + m3 == 0
    assert -m2 * m2 + 2 * m2 * m4 + m2 == 0
    assert -m4 * m4 + 2 * m2 * m4 + m4 == 0


def test_noncommuting_points_on_the_integer_grid_are_sigma0():
    found = {(a, b) for a, b in product(range(-8, 6), repeat=2) if noncommuting_exists(a, b)}
    assert found == set(SIGMA0)
    assert len(SIGMA) == 13 and (-1, -1) in SIGMA


def test_delta_vanishes_at_the_centre():
    assert delta(-1, -1) == 0
    with pytest.raises(DeltaZero):
        mu_values(-1, -1)
    assert not noncommuting_exists(-1, -1)


def test_noncommuting_residues_reject_points_outside_sigma0():
    with pytest.raises(NotInSigma0):
        noncommuting_residues(1, 1, ResidueShape.noncommuting(1))
    with pytest.raises(BadPartition):
        diag_residues(3, ResidueShape.commuting(1, 1, 0, 0))


def _sympy_orbit_dimension(p: MatPoly, q: MatPoly) -> int:
    n = p.rows
    P = sympy.Matrix([[sympy.Rational(str(x.as_rational())) for x in r] for r in p.row_lists()])
    Q = sympy.Matrix([[sympy.Rational(str(x.as_rational())) for x in r] for r in q.row_lists()])
    I = sympy.eye(n)
    # vec(SM - MS) = (M^T kron I - I kron M) vec(S) in column-major vec
    blocks = [sympy.kronecker_product(M.T, I) - sympy.kronecker_product(I, M) for M in (P, Q)]
    return sympy.Matrix.vstack(*blocks).rank()


@pytest.mark.parametrize("pt,shape", NC_CASES[::4], ids=str)
def test_orbit_dimension_against_kronecker_oracle(pt, shape):
    pair = noncommuting_residues(*pt, shape)
    assert orbit_dimension(pair) == _sympy_orbit_dimension(pair.p, pair.q)


def test_rim_orbit_dimension_formula():
    for n in (2, 3, 4):
        pair = noncommuting_residues(0, -3, ResidueShape.noncommuting(1, 0, 0, 0, n - 2))
        assert orbit_dimension(pair) == 3 * n - 3


# dihedral symmetry --------------------------------------------------------------


@given(st.integers(-20, 20), st.integers(-20, 20))
def test_generators_are_involutions_and_orbits_are_small(a, b):
    for g in dihedral_generators():
        assert g(*g(a, b)) == (a, b)
    assert len(dihedral_orbit(a, b)) <= 12


def test_sigma_is_a_union_of_three_orbits():
    orbits = {dihedral_orbit(*p) for p in SIGMA}
    assert sorted(len(o) for o in orbits) == [1, 6, 6]
    assert set().union(*orbits) == {(Fraction(a), Fraction(b)) for a, b in SIGMA}


# system right-hand side ---------------------------------------------------------


@given(matrices(), matrices(), st.integers(-3, 3), st.integers(-3, 3))
def test_homogeneous_rhs_formula(u, v, a, b):
    sys = SystemSpec.homogeneous_system(2, a, b)
    du, dv = sys.rhs(u, v)
    assert du == -(u @ u) + (u @ v) * 2 + (u @ v - v @ u) * a
    assert dv == -(v @ v) + (v @ u) * 2 + (v @ u - u @ v) * b


def test_inhomogeneous_rhs_includes_every_coefficient():
    n = 2
    names = [f"{c}{i}" for c in "bc" for i in range(1, 6)]
    coefs = {k: MatPoly.symbolic(k, n) for k in names}
    sys = SystemSpec.build(n, 0, 0, **coefs)
    u, v = MatPoly.symbolic("u", n), MatPoly.symbolic("v", n)
    z = PolyQ.var(param("z"))
    du, dv = sys.rhs(u, v, z)
    b1, b2, b3, b4, b5 = (coefs[f"b{i}"] for i in range(1, 6))
    c1, c2, c3, c4, c5 = (coefs[f"c{i}"] for i in range(1, 6))
    assert du == -(u @ u) + (u @ v) * 2 - u * (2 * z) + b1 @ u + u @ b2 + b3 @ v + v @ b4 + b5
    assert dv == -(v @ v) + (v @ u) * 2 + v * (2 * z) + c1 @ v + v @ c2 + c3 @ u + u @ c4 + c5


def test_type_shapes():
    for t in (1, 2, 3):
        pair = type_residues(t, 3)
        assert pair.type_tag == t
        assert pair.shape.ks[t - 1] == 1 and pair.shape.ks[3] == 2
