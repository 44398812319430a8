from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from kovalevskaya.exact import PolyQ, param
from kovalevskaya.linalg import (
    LinearSolver,
    QMatrix,
    SingularMatrix,
    apply_to_polys,
    inverse,
    rank,
    rref_rank_kernel,
)

from strategies import qmatrices


def to_sympy(rows):
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])


def from_sympy(m):
    return [[Fraction(int(x.p), int(x.q)) for x in m.row(i)] for i in range(m.rows)]


@given(qmatrices())
def test_rank_matches_sympy(rows):
    assert rank(QMatrix(rows)) == to_sympy(rows).rank()


@given(qmatrices())
def test_rref_matches_sympy(rows):
    R, _, _ = rref_rank_kernel(QMatrix(rows))
    ref, _ = to_sympy(rows).rref()
    assert R.tolist() == from_sympy(ref)


@given(qmatrices())
def test_kernel_basis_spans_the_nullspace(rows):
    A = QMatrix(rows)
    _, r, kernel = rref_rank_kernel(A)
    assert len(kernel) == A.cols - r == len(to_sympy(rows).nullspace())
    for v in kernel:
        assert all(x == 0 for x in A @ v)


@given(qmatrices(), st.data())
def test_pivot_order_changes_only_the_parametrization(rows, data):
    A = QMatrix(rows)
    order = data.draw(st.permutations(list(range(A.cols))))
    _, r1, k1 = rref_rank_kernel(A)
    _, r2, k2 = rref_rank_kernel(A, order)
    assert r1 == r2 and len(k1) == len(k2)
    for v in k2:
        assert all(x == 0 for x in A @ v)


@given(qmatrices(), st.data())
def test_solver_on_consistent_right_hand_sides(rows, data):
    A = QMatrix(rows)
    a, b = PolyQ.var(param("a")), PolyQ.var(param("b"))
    x = [data.draw(st.integers(-3, 3)) * a + data.draw(st.integers(-3, 3)) * b + 1 for _ in range(A.cols)]
    rhs = apply_to_polys(A.data, x)
    sol = LinearSolver(A).solve(rhs)
    assert sol.solvable
    assert apply_to_polys(A.data, sol.particular) == rhs


@given(qmatrices(), st.lists(st.integers(-4, 4), min_size=5, max_size=5))
def test_obstruction_vanishes_exactly_for_consistent_systems(rows, raw):
    A = QMatrix(rows)
    b = [Fraction(v) for v in raw[: A.rows]]
    sol = LinearSolver(A).solve([PolyQ.const(v) for v in b])
    M = to_sympy(rows)
    consistent = M.rank() == M.row_join(to_sympy([[v] for v in b])).rank()
    assert sol.solvable == consistent
    if consistent:
        assert [p.as_rational() for p in apply_to_polys(A.data, sol.particular)] == b


def test_obstruction_is_canonical_for_a_dependent_row():
    # rows: e1, e2, e1 + e2; the third row carries the obstruction
    A = QMatrix([[1, 0], [0, 1], [1, 1]])
    t = PolyQ.var(param("t"))
    sol = LinearSolver(A).solve([t, 2 * t, 3 * t + 1])
    assert sol.obstruction_rows == [2]
    assert sol.obstruction == [PolyQ.const(1)]


@given(qmatrices(max_rows=4, max_cols=4))
def test_inverse_matches_sympy(rows):
    n = min(len(rows), len(rows[0]))
    sq = [r[:n] for r in rows[:n]]
    M = to_sympy(sq)
    if M.det() == 0:
        with pytest.raises(SingularMatrix):
            inverse(QMatrix(sq))
    else:
        assert inverse(QMatrix(sq)).tolist() == from_sympy(M.inv())


def test_shift_subtracts_a_multiple_of_the_identity():
    A = QMatrix([[2, 1], [0, 2]])
    assert A.shift(2).tolist() == [[0, 1], [0, 0]]
    assert rank(A.shift(2)) == 1
