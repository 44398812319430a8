"""Exact linear algebra over Q.

Elimination runs fraction-free (Bareiss) on integer-scaled rows and only
normalizes to Fractions when the echelon form is finished.  On top of that,
``LinearSolver`` precomputes everything needed to solve ``A x = b`` for a
right-hand side whose entries are polynomials: a particular-solution map,
a kernel basis and an obstruction map onto a fixed cokernel complement.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from .exact import PolyQ, as_rational

__all__ = [
    "QMatrix",
    "rref_rank_kernel",
    "rank",
    "inverse",
    "SingularMatrix",
    "LinearSolver",
    "AffineSolveResult",
    "solve_affine_parametric",
    "apply_to_polys",
]


class QMatrix:
    """Immutable dense matrix of Fractions."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data: Sequence[Sequence], cols: int | None = None):
        rows = [tuple(as_rational(x) for x in r) for r in data]
        if cols is None:
            if not rows:
                raise ValueError("empty matrix needs an explicit column count")
            cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged matrix")
        self.rows = len(rows)
        self.cols = cols
        self.data = tuple(rows)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMatrix":
        z = Fraction(0)
        return cls([[z] * cols for _ in range(rows)], cols)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], n)

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.data[i][j]

    def row(self, i: int) -> tuple:
        return self.data[i]

    def transpose(self) -> "QMatrix":
        return QMatrix([[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)], self.rows)

    @property
    def T(self) -> "QMatrix":
        return self.transpose()

    def shift(self, k) -> "QMatrix":
        """``A - k I`` for square A."""
        if self.rows != self.cols:
            raise ValueError("shift needs a square matrix")
        k = as_rational(k)
        return QMatrix(
            [[x - k if i == j else x for j, x in enumerate(r)] for i, r in enumerate(self.data)],
            self.cols,
        )

    def take_rows(self, idx: Sequence[int]) -> "QMatrix":
        return QMatrix([self.data[i] for i in idx], self.cols)

    def permute_columns(self, order: Sequence[int]) -> "QMatrix":
        return QMatrix([[r[j] for j in order] for r in self.data], len(order))

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            if self.cols != other.rows:
                raise ValueError("shape mismatch")
            cols = list(zip(*other.data)) if other.rows else [()] * other.cols
            return QMatrix(
                [[sum((a * b for a, b in zip(r, c) if a and b), Fraction(0)) for c in cols] for r in self.data],
                other.cols,
            )
        vec = list(other)
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        return [sum((a * as_rational(b) for a, b in zip(r, vec) if a and b), Fraction(0)) for r in self.data]

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.data, other.data)], self.cols)

    def __add__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.data, other.data)], self.cols)

    def __eq__(self, other) -> bool:
        return isinstance(other, QMatrix) and self.cols == other.cols and self.data == other.data

    def __hash__(self) -> int:
        return hash((self.cols, self.data))

    def is_zero(self) -> bool:
        return all(not x for r in self.data for x in r)

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self.data]

    def __repr__(self) -> str:
        return "QMatrix(" + repr([[str(x) for x in r] for r in self.data]) + ")"


# ---------------------------------------------------------------------------
# elimination


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    out = []
    for r in rows:
        d = 1
        for x in r:
            if x.denominator != 1:
                d = lcm(d, x.denominator)
        out.append([int(x * d) for x in r])
    return out


def _forward(M: list[list[int]], candidates: Sequence[int]) -> list[int]:
    """Bareiss elimination in place over the integers.

    Pivots are only taken in ``candidates`` (visited in that order).  All
    divisions by the previous pivot are exact.
    """
    nrows = len(M)
    ncols = len(M[0]) if M else 0
    prev = 1
    r = 0
    pivots: list[int] = []
    for c in candidates:
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if M[i][c]), None)
        if p is None:
            continue
        if p != r:
            M[r], M[p] = M[p], M[r]
        piv_row = M[r]
        piv = piv_row[c]
        for i in range(r + 1, nrows):
            row = M[i]
            f = row[c]
            if f:
                for j in range(ncols):
                    row[j] = (piv * row[j] - f * piv_row[j]) // prev
            elif piv != prev:
                for j in range(ncols):
                    if row[j]:
                        row[j] = (piv * row[j]) // prev
        prev = piv
        pivots.append(c)
        r += 1
    return pivots


def _rref_rows(rows: Sequence[Sequence[Fraction]], candidates: Sequence[int]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form (Fractions) restricted to pivots in ``candidates``."""
    if not rows:
        return [], []
    M = _integer_rows(rows)
    pivots = _forward(M, candidates)
    rank = len(pivots)
    ncols = len(M[0])
    # fraction-free back elimination, then normalize by the pivot
    for t in range(rank - 1, -1, -1):
        c = pivots[t]
        prow = M[t]
        g = 0
        for x in prow:
            if x:
                g = gcd(g, x)
        if g > 1:
            prow[:] = [x // g for x in prow]
        piv = prow[c]
        for s in range(t):
            row = M[s]
            f = row[c]
            if f:
                M[s] = [piv * a - f * b for a, b in zip(row, prow)]
    out = []
    for t in range(rank):
        piv = M[t][pivots[t]]
        out.append([Fraction(x, piv) for x in M[t]])
    z = Fraction(0)
    for _ in range(len(rows) - rank):
        out.append([z] * ncols)
    return out, pivots


def rank(A: QMatrix) -> int:
    if A.rows == 0 or A.cols == 0:
        return 0
    M = _integer_rows(A.data)
    return len(_forward(M, range(A.cols)))


class SingularMatrix(ValueError):
    pass


def inverse(A: QMatrix) -> QMatrix:
    """Exact inverse via RREF of ``[A | I]``."""
    n = A.rows
    if n != A.cols:
        raise ValueError("inverse needs a square matrix")
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A.data)]
    R, pivots = _rref_rows(aug, list(range(n)))
    if len(pivots) < n:
        raise SingularMatrix("matrix is singular")
    return QMatrix([row[n:] for row in R], n)


def _kernel_from_rref(R: list[list[Fraction]], pivots: Sequence[int], ncols: int, free: Sequence[int]) -> list[list[Fraction]]:
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for t, c in enumerate(pivots):
            v[c] = -R[t][f]
        basis.append(v)
    return basis


def rref_rank_kernel(A: QMatrix, pivot_order: Sequence[int] | None = None) -> tuple[QMatrix, int, list[list[Fraction]]]:
    """RREF, rank and kernel basis of ``A``.

    ``pivot_order`` changes which columns are preferred as pivots (the rest
    become the free coordinates of the kernel parametrization); by default
    columns are visited left to right and the result is the usual RREF.
    """
    order = list(range(A.cols)) if pivot_order is None else list(pivot_order)
    if sorted(order) != list(range(A.cols)):
        raise ValueError("pivot_order must be a permutation of the columns")
    R, pivots = _rref_rows(A.data, order)
    piv_set = set(pivots)
    free = [c for c in range(A.cols) if c not in piv_set]
    kernel = _kernel_from_rref(R, pivots, A.cols, free)
    return QMatrix(R, A.cols) if R else QMatrix.zeros(0, A.cols), len(pivots), kernel


# ---------------------------------------------------------------------------
# parametric solve


def apply_to_polys(mat: Sequence[Sequence[Fraction]], vec: Sequence[PolyQ]) -> list[PolyQ]:
    """Apply a rational matrix to a vector of polynomials, monomial by monomial."""
    out = []
    for row in mat:
        acc: dict = {}
        for coef, v in zip(row, vec):
            if coef and v.terms:
                for m, c in v.terms.items():
                    s = acc.get(m)
                    acc[m] = coef * c if s is None else s + coef * c
        out.append(PolyQ._raw({m: c for m, c in acc.items() if c}))
    return out


@dataclass
class AffineSolveResult:
    particular: list[PolyQ]
    kernel_basis: list[list[Fraction]]
    free_columns: list[int]
    obstruction: list[PolyQ]
    obstruction_rows: list[int]
    unsolvable_monomials: list = field(default_factory=list)

    @property
    def solvable(self) -> bool:
        """True iff the system is consistent for every parameter value."""
        return all(o.is_zero() for o in self.obstruction)

    def obstruction_lift(self, nrows: int) -> list[PolyQ]:
        lift = [PolyQ.zero()] * nrows
        for j, o in zip(self.obstruction_rows, self.obstruction):
            lift[j] = o
        return lift


class LinearSolver:
    """Precomputed data for solving ``A x = b`` with polynomial ``b``.

    The cokernel complement is spanned by the unit vectors of the rows of A
    that are linearly dependent on earlier rows (non-pivot columns of
    RREF(A^T)), so ``b = A x + lift(obstruction)`` has a unique canonical
    obstruction part.
    """

    def __init__(self, A: QMatrix, pivot_order: Sequence[int] | None = None):
        self.A = A
        nr, nc = A.rows, A.cols
        # independent rows and the dependencies of the others
        RT, row_piv = _rref_rows(A.T.data, list(range(nr))) if nc else ([], [])
        self.independent_rows = row_piv
        dep = [j for j in range(nr) if j not in set(row_piv)]
        self.dependent_rows = dep
        obst = []
        for j in dep:
            row = [Fraction(0)] * nr
            row[j] = Fraction(1)
            for t, i in enumerate(row_piv):
                w = RT[t][j]
                if w:
                    row[i] -= w
            obst.append(row)
        self.obstruction_map = obst

        r = len(row_piv)
        order = list(range(nc)) if pivot_order is None else list(pivot_order)
        aug = [list(A.data[i]) + [Fraction(int(t == s)) for s in range(r)] for t, i in enumerate(row_piv)]
        R, pivots = _rref_rows(aug, order) if aug else ([], [])
        self.rank = len(pivots)
        assert self.rank == r
        self.pivots = pivots
        piv_set = set(pivots)
        self.free_columns = [c for c in range(nc) if c not in piv_set]
        Rl = [row[:nc] for row in R]
        E = [row[nc:] for row in R]
        self.kernel_basis = _kernel_from_rref(Rl, pivots, nc, self.free_columns)
        S = [[Fraction(0)] * nr for _ in range(nc)]
        for t, c in enumerate(pivots):
            for s, i in enumerate(row_piv):
                S[c][i] = E[t][s]
        self.solve_map = S

    @property
    def nullity(self) -> int:
        return self.A.cols - self.rank

    def solve(self, rhs: Sequence[PolyQ]) -> AffineSolveResult:
        rhs = [PolyQ.coerce(x) for x in rhs]
        if len(rhs) != self.A.rows:
            raise ValueError("right-hand side has the wrong length")
        particular = apply_to_polys(self.solve_map, rhs)
        obstruction = apply_to_polys(self.obstruction_map, rhs)
        bad = sorted({m for o in obstruction for m in o.terms})
        return AffineSolveResult(
            particular=particular,
            kernel_basis=self.kernel_basis,
            free_columns=self.free_columns,
            obstruction=obstruction,
            obstruction_rows=list(self.dependent_rows),
            unsolvable_monomials=bad,
        )


def solve_affine_parametric(A: QMatrix, rhs: Sequence, pivot_order: Sequence[int] | None = None) -> AffineSolveResult:
    return LinearSolver(A, pivot_order).solve(rhs)
