from __future__ import annotations

from fractions import Fraction

import pytest

from kovalevskaya.classify import (
    ConstraintViolated,
    DeformationFamily,
    classify_point,
    commuting_b_substitution,
    cond2_substitution,
    cond3_substitution,
    cond231_substitution,
    default_family,
    p4_1,
    p4_2,
    scan_sigma,
    substitute_obstructions,
    verify_deformation,
    verify_resonance_conditions_parametric,
)
from kovalevskaya.exact import MatPoly, PolyQ, commutator, param
from kovalevskaya.system import SIGMA


def test_centre_has_three_commuting_maximal_types():
    r = classify_point(-1, -1, 2)
    assert r.maximal_types == {1, 2, 3} and not r.noncommuting_maximal


@pytest.mark.parametrize("pt", [(0, -3), (1, -2), (-2, -2)])
def test_rim_points_mix_commuting_and_noncommuting(pt):
    r = classify_point(*pt, 2)
    assert len(r.maximal_types) == 2 and r.noncommuting_maximal and r.total_maximal == 3


def test_generic_points_fall_short():
    assert classify_point(1, 1, 2).total_maximal < 3
    assert classify_point(Fraction(-1, 2), Fraction(-1, 2), 2).total_maximal < 3


def test_small_scan_is_ordered_and_parallel_safe():
    serial = scan_sigma(-3, 1, 2)
    parallel = scan_sigma(-3, 1, 2, jobs=2)
    assert [r.as_dict() for r in serial] == [r.as_dict() for r in parallel]
    marked = {(int(r.point[0]), int(r.point[1])) for r in serial if r.total_maximal == 3}
    assert marked == {p for p in SIGMA if all(-3 <= x <= 1 for x in p)}


@pytest.mark.parametrize("fid", ["P4_0", "P4_1", "P4_2"])
def test_default_families_pass(fid):
    rep = verify_deformation(default_family(fid, 2, seed=3))
    assert rep.passed
    assert all(c.residual_ok for c in rep.candidates)


def test_p4_2_constraint_is_enforced():
    h1 = MatPoly.unit(2, 1, 0)
    good = p4_2(h1, MatPoly.diag([1, -1]), 2)
    assert commutator(good.data["h2"], h1) == h1 * -2
    with pytest.raises(ConstraintViolated):
        verify_deformation(p4_2(h1, MatPoly.diag([-1, 1]), 2))


def test_p4_2_without_its_constraint_is_obstructed():
    bad = p4_2(MatPoly.unit(2, 1, 0), MatPoly.diag([-1, 1]), 2)
    free = DeformationFamily(bad.id, bad.n, bad.alpha, bad.beta, bad.coefficients, (), bad.candidates, bad.data)
    assert not verify_deformation(free).passed


def test_families_fail_away_from_their_point():
    assert not verify_deformation(default_family("P4_0", 2).at_point(1, 1)).passed


def test_p4_1_needs_the_same_h_in_both_equations():
    f = default_family("P4_1", 2)
    broken = p4_1(f.data["h"], f.data["gamma"], f.data["h"] + MatPoly.unit(2, 0, 1))
    assert not verify_deformation(broken).passed


def test_parametric_conditions_at_the_centre():
    obs = verify_resonance_conditions_parametric((-1, -1), n=2)
    assert any(obs.values())
    subs = (cond2_substitution(), cond3_substitution(), commuting_b_substitution())
    solved = substitute_obstructions(obs, *subs, cond231_substitution())
    assert not any(solved.values())
    g = lambda s: PolyQ.var(param(s))
    off = {param("gamma2"): -g("gamma1") + 1, param("gamma4"): g("gamma3") * -2 + 1, param("delta4"): g("delta3") * -2}
    broken = substitute_obstructions(obs, *subs, off)
    assert 2 in dict(broken[2])
