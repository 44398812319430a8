from __future__ import annotations

from fractions import Fraction

import pytest

from kovalevskaya.classify import default_family
from kovalevskaya.degenerate import (
    JetSampler,
    ReductionCoefficients,
    ReductionPreconditionFailed,
    degenerate_scalar,
    degenerate_to_p2,
    p2_equation_check,
    p2_system_to_equation,
    p34_check,
    reduce_second_order_check,
    reduce_second_order_symbolic_scalar,
    tail_family,
)
from kovalevskaya.exact import DivergentLimit, MatPoly, commutator
from kovalevskaya.system import SystemSpec


def test_jets_are_small_and_reproducible():
    a, b = JetSampler(5), JetSampler(5)
    xs = [a.rational() for _ in range(50)]
    assert xs == [b.rational() for _ in range(50)]
    assert all(abs(x.numerator) <= 20 and x.denominator <= 7 for x in xs)
    m, minv = a.invertible(3)
    assert m @ minv == MatPoly.identity(3)


@pytest.mark.parametrize("fid,kappa", [("P4_1", Fraction(-1, 2)), ("P4_2", Fraction(-3, 2))])
def test_reduction_holds_on_random_jets(fid, kappa):
    sys = default_family(fid, 2, seed=1).system()
    coef = ReductionCoefficients.from_system(sys)
    assert coef.kappa == kappa
    assert coef.k1 == sys.b[4] and coef.k2 == -sys.b[4] and coef.k3 == sys.c[2] * 2
    assert reduce_second_order_check(sys, trials=20, seed=1)
    wrong = ReductionCoefficients(coef.kappa, coef.k1, coef.k2, coef.k3, coef.k4 + MatPoly.identity(2), coef.k5)
    assert not reduce_second_order_check(sys, trials=20, seed=1, coefficients=wrong)


def test_reduction_preconditions():
    with pytest.raises(ReductionPreconditionFailed):
        reduce_second_order_check(SystemSpec.build(2, 1, 0))
    with pytest.raises(ReductionPreconditionFailed):
        reduce_second_order_check(SystemSpec.build(2, 0, 0, b1=MatPoly.identity(2)))


def test_scalar_reduction_is_an_identity():
    assert reduce_second_order_symbolic_scalar() == {"matrix_form": True, "scalar_p4": True}


@pytest.mark.parametrize("beta,kappa", [(-1, 0), (-2, 1), (-3, 2)])
def test_p2_map_kappa(beta, kappa):
    z = MatPoly.zeros(2)
    k, b1, b2, a = p2_system_to_equation(beta, [z, z, z, z])
    assert k == kappa and b1.is_zero() and b2.is_zero() and a == MatPoly.scalar(2, Fraction(-1, 2))


def test_p2_map_on_jets():
    s = JetSampler("p2")
    c = [s.matrix(2) for _ in range(4)]
    for beta in (-1, -2, -3, Fraction(1, 2)):
        assert p2_equation_check(beta, c)


def test_p34():
    assert p34_check(MatPoly.identity(1))
    a = JetSampler(9).matrix(2)
    assert p34_check(a)
    assert not p34_check(a, cubic_coeff=3)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("fid,target", [("P4_0", "P2_0"), ("P4_2", "P2_2"), ("P4_1", "P2_1")])
def test_degenerations_match(fid, target, n):
    r = degenerate_to_p2(fid, n, seed=n)
    assert r.target.id == target
    assert r.match


def test_p2_2_target_satisfies_its_constraint():
    _, target = tail_family("P4_2", 2)
    assert commutator(target.a, target.b) == target.b * -2
    kappa, *_ = target.equation()
    assert kappa == 2


def test_scalar_degeneration():
    r = degenerate_scalar(Fraction(2, 3))
    assert r.match


def test_wrong_scalings_diverge():
    with pytest.raises(DivergentLimit):
        degenerate_to_p2("P4_0", 2, shift_sign=1)
    with pytest.raises(DivergentLimit):
        degenerate_to_p2("P4_1", 2, h2_power=-4)
