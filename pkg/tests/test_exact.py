from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kovalevskaya.exact import (
    EPS,
    DivergentLimit,
    MatPoly,
    PolyQ,
    SubstitutionCreatesNegativePower,
    as_rational,
    commutator,
    param,
    parse_poly,
)

from strategies import matrices, polys, rationals

A, B = param("a"), param("b")


def var(p):
    return PolyQ.var(p)


# ring axioms -----------------------------------------------------------------


@given(polys(), polys(), polys())
def test_addition_is_associative_and_commutative(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p + q == q + p


@given(polys(), polys(), polys())
def test_multiplication_distributes(p, q, r):
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p


@given(polys())
def test_identities_and_inverse(p):
    assert p + PolyQ.zero() == p
    assert p * PolyQ.one() == p
    assert (p - p).is_zero()
    assert p + (-p) == PolyQ.zero()


@given(polys(max_terms=3), st.integers(min_value=0, max_value=3))
def test_power_matches_repeated_product(p, e):
    expected = PolyQ.one()
    for _ in range(e):
        expected = expected * p
    assert p ** e == expected


@given(matrices(), matrices(), matrices())
def test_matrix_ring_axioms(x, y, z):
    assert (x @ y) @ z == x @ (y @ z)
    assert x @ (y + z) == x @ y + x @ z
    assert x @ MatPoly.identity(2) == x


@given(matrices(), matrices())
def test_commutator_is_antisymmetric_and_traceless(x, y):
    assert commutator(x, y) == -commutator(y, x)
    assert commutator(x, y).trace().is_zero()


# substitution ------------------------------------------------------------------


@given(polys())
def test_substituting_a_variable_by_itself_is_identity(p):
    assert p.substitute(A, var(A)) == p


@given(polys(), polys(max_terms=2), polys(max_terms=2))
def test_substitution_is_a_ring_homomorphism(p, q, value):
    s = lambda f: f.substitute(A, value)
    assert s(p * q) == s(p) * s(q)
    assert s(p + q) == s(p) + s(q)


@given(polys(), rationals, rationals)
def test_simultaneous_substitution_matches_evaluation(p, x, y):
    assert p.substitute_all({A: x, B: y}) == p.evaluate({A: x, B: y})
    assert p.substitute_all({A: x, B: y}).variables() <= {param("c").id}


def test_negative_power_substitution_is_rejected():
    # eps^-1 may not be replaced by the inverse of an ordinary polynomial
    p = PolyQ.var(EPS, -1) * var(A)
    with pytest.raises(SubstitutionCreatesNegativePower):
        p.substitute(EPS, var(A) + 1)


# text ------------------------------------------------------------------------


@given(polys())
def test_text_round_trip(p):
    assert parse_poly(p.to_text()) == p


def test_text_format_examples():
    p = parse_poly("2*a^2 - 1/3*b + 5")
    assert p == var(A) ** 2 * 2 - var(B) * Fraction(1, 3) + 5
    assert p.to_text() == "2*a^2 - 1/3*b + 5"
    assert PolyQ.zero().to_text() == "0"
    assert parse_poly("-3/7*a^2").to_text() == "-3/7*a^2"


@pytest.mark.parametrize("bad", ["", "2**a", "a +", "1/0"])
def test_parse_rejects_garbage(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse_poly(bad)


def test_as_rational_accepts_exact_inputs_only():
    assert as_rational("-3/4") == Fraction(-3, 4)
    assert as_rational(2) == Fraction(2)
    with pytest.raises((TypeError, ValueError)):
        as_rational(0.5)


# epsilon ---------------------------------------------------------------------


def test_epsilon_limit_keeps_the_eps0_part():
    e = PolyQ.var(EPS)
    p = var(A) + e * 3 + e ** 2 * var(B)
    assert p.epsilon_limit() == var(A)


def test_epsilon_limit_rejects_surviving_poles():
    p = PolyQ.var(EPS, -2) * Fraction(1, 8) + var(A)
    with pytest.raises(DivergentLimit):
        p.epsilon_limit()


@given(polys(), st.integers(min_value=1, max_value=3))
def test_eps_parts_reassemble(p, k):
    q = p * PolyQ.var(EPS, -k) + p
    total = PolyQ.zero()
    for e, part in q.eps_parts().items():
        total = total + part * PolyQ.var(EPS, e)
    assert total == q


# matrices --------------------------------------------------------------------


def test_matrix_constructors():
    assert MatPoly.unit(2, 1, 0).to_text() == [["0", "0"], ["1", "0"]]
    assert MatPoly.diag([1, -1]) @ MatPoly.diag([1, -1]) == MatPoly.identity(2)
    s = MatPoly.symbolic("h", 2)
    assert s[0, 1] == PolyQ.var(param("h_12"))
    assert MatPoly.scalar(2, 3) == MatPoly.identity(2) * 3


def test_matrix_epsilon_limit_and_substitution():
    e = PolyQ.var(EPS)
    m = MatPoly.from_rows([[var(A) + e, e], [0, 1]])
    assert m.epsilon_limit() == MatPoly.from_rows([[var(A), 0], [0, 1]])
    assert m.substitute_all({A: 2}).epsilon_limit() == MatPoly.from_rows([[2, 0], [0, 1]])
