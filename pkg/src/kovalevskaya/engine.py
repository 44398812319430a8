"""Linearization operator, spectra and formal Laurent expansions.

A solution with a simple pole at ``z0`` is sought as

    u = sum_{k >= -1} x_k t^k,    v = sum_{k >= -1} y_k t^k,    t = z - z0,

with ``x_{-1} = p`` and ``y_{-1} = q``.  At every order the pair
``(x_k, y_k)`` solves ``(L - k) (x_k, y_k) = rhs_k`` where ``L`` is the
linearization at the residues.  Kernel directions at a resonance become
fresh named parameters and the cokernel part of ``rhs_k`` is recorded as an
obstruction.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import MatPoly, Param, PolyQ, as_rational, param
from .linalg import LinearSolver, QMatrix, rank
from .system import (
    ResiduePair,
    ResidueShape,
    SystemSpec,
    check_residue_equations,
    orbit_dimension,
)

__all__ = [
    "ResidueMismatch",
    "LOperator",
    "SpectrumTable",
    "FreeParam",
    "SeriesSolution",
    "MaximalityVerdict",
    "build_L",
    "spectrum_dimensions",
    "integer_nullities",
    "resonances",
    "default_depth",
    "f_gamma",
    "rhs_inhomogeneous",
    "expand_series",
    "maximality",
    "residual_check",
    "LaurentMat",
]


class ResidueMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# the operator L


def _qmat(m: MatPoly) -> list[list[Fraction]]:
    return [[x.as_rational() for x in row] for row in m.row_lists()]


def _mm(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n) if A[i][k] and B[k][j]), Fraction(0)) for j in range(n)] for i in range(n)]


def _lin(*terms):
    """Sum of ``coef * matrix`` terms for square Fraction matrices."""
    n = len(terms[0][1])
    out = [[Fraction(0)] * n for _ in range(n)]
    for c, M in terms:
        if c:
            for i in range(n):
                for j in range(n):
                    if M[i][j]:
                        out[i][j] += c * M[i][j]
    return out


def apply_L(P, Q, alpha: Fraction, beta: Fraction, X, Y):
    """The linearized residue map on one pair of numeric matrices."""
    pX, Xp, pY, Yp = _mm(P, X), _mm(X, P), _mm(P, Y), _mm(Y, P)
    qX, Xq, qY, Yq = _mm(Q, X), _mm(X, Q), _mm(Q, Y), _mm(Y, Q)
    a, b = alpha, beta
    LX = _lin((-1, pX), (-1, Xp), (2 + a, pY), (2 + a, Xq), (-a, Yp), (-a, qX))
    LY = _lin((-1, qY), (-1, Yq), (2 + b, qX), (2 + b, Yp), (-b, Xq), (-b, pY))
    return LX, LY


@dataclass(frozen=True)
class LOperator:
    """Matrix of L on vec(X) ++ vec(Y), both row-major."""

    matrix: QMatrix
    n: int

    @property
    def size(self) -> int:
        return 2 * self.n * self.n

    def apply(self, X, Y):
        n = self.n
        vec = [x for row in X for x in row] + [y for row in Y for y in row]
        out = self.matrix @ vec
        nn = n * n
        return (
            [out[i * n:(i + 1) * n] for i in range(n)],
            [out[nn + i * n:nn + (i + 1) * n] for i in range(n)],
        )

    def nullity(self, k) -> int:
        return self.size - rank(self.matrix.shift(k))

    def generalized_nullity(self, k) -> int:
        """Dimension of the generalized eigenspace at k (algebraic multiplicity)."""
        M = self.matrix.shift(k)
        power = 1
        while power < self.size:
            M = M @ M
            power *= 2
        return self.size - rank(M)

    def norm_bound(self) -> int:
        """Integer bound on the absolute value of every eigenvalue."""
        best = Fraction(0)
        for row in self.matrix.data:
            best = max(best, sum((abs(x) for x in row), Fraction(0)))
        return int(best) + 1


def build_L(pair: ResiduePair, alpha, beta) -> LOperator:
    a, b = as_rational(alpha), as_rational(beta)
    n = pair.n
    P, Q = _qmat(pair.p), _qmat(pair.q)
    nn = n * n
    cols = []
    zero = [[Fraction(0)] * n for _ in range(n)]
    for c in range(2 * nn):
        X = [row[:] for row in zero]
        Y = [row[:] for row in zero]
        i, j = divmod(c % nn, n)
        (X if c < nn else Y)[i][j] = Fraction(1)
        LX, LY = apply_L(P, Q, a, b, X, Y)
        cols.append([x for row in LX for x in row] + [y for row in LY for y in row])
    return LOperator(QMatrix(cols, 2 * nn).transpose(), n)


def integer_nullities(L: LOperator, kmin: int, kmax: int) -> dict[int, int]:
    if kmin > kmax:
        raise ValueError("kmin must not exceed kmax")
    return {k: L.nullity(k) for k in range(kmin, kmax + 1)}


def resonances(L: LOperator) -> dict[int, int]:
    """Nonnegative integers k with a nontrivial kernel of L - k, with nullities."""
    out = {}
    for k in range(0, L.norm_bound() + 1):
        d = L.nullity(k)
        if d:
            out[k] = d
    return out


def default_depth(L: LOperator) -> int:
    res = resonances(L)
    return (max(res) if res else 0) + 3


# ---------------------------------------------------------------------------
# closed-form spectrum


@dataclass(frozen=True)
class SpectrumTable:
    """Distinct eigenvalues with summed eigenspace dimensions."""

    entries: tuple[tuple[Fraction, int, tuple[int, ...]], ...]

    def dimension_at(self, lam) -> int:
        lam = as_rational(lam)
        return sum(d for value, d, _ in self.entries if value == lam)

    def values(self) -> list[Fraction]:
        return [v for v, _, _ in self.entries]

    @property
    def total(self) -> int:
        return sum(d for _, d, _ in self.entries)


def spectrum_dimensions(alpha, beta, shape: ResidueShape) -> SpectrumTable:
    if not shape.is_commuting:
        raise ValueError("the closed-form table covers commuting shapes only")
    a, b = as_rational(alpha), as_rational(beta)
    k1, k2, k3, k4 = shape.ks
    lams = [
        -2, 2, -1, 0, -a, -b, a + 2, b + 2,
        4 + a + 2 * b, 4 + 2 * a + b, 3 + a + b,
        -2 - a - 2 * b, -2 - 2 * a - b, 1 + a - b, 1 - a + b, -1 - a - b,
    ]
    d12 = k1 * k1 + k2 * k2 + k3 * k3
    dims = [
        d12, d12,
        2 * (k1 * k2 + k1 * k3 + k2 * k3 + k1 * k4 + k2 * k4 + k3 * k4),
        2 * k4 * k4,
        k3 * k4, k2 * k4, k3 * k4, k2 * k4,
        k1 * k2, k1 * k3, k1 * k4,
        k1 * k2, k1 * k3, k2 * k3, k2 * k3, k1 * k4,
    ]
    merged: dict[Fraction, list] = {}
    for idx, (lam, d) in enumerate(zip(lams, dims), start=1):
        if not d:
            continue
        slot = merged.setdefault(Fraction(lam), [0, []])
        slot[0] += d
        slot[1].append(idx)
    return SpectrumTable(tuple((lam, d, tuple(ix)) for lam, (d, ix) in sorted(merged.items())))


# ---------------------------------------------------------------------------
# recurrence


def f_gamma(gamma, xs: Sequence[MatPoly], ys: Sequence[MatPoly], k: int) -> MatPoly | None:
    """sum_{l=0}^{k} 1/2 (X_l X_{k-l} + X_{k-l} X_l) - 2 X_l Y_{k-l} - gamma [X_l, Y_{k-l}]

    The sum is empty for negative k and None is returned.
    """
    g = as_rational(gamma)
    if k < 0:
        return None
    acc = MatPoly.zeros(xs[0].rows)
    for l in range(k + 1):
        X, Xr, Yr = xs[l], xs[k - l], ys[k - l]
        XY, YX = X @ Yr, Yr @ X
        # the symmetrized square sums to X_l X_{k-l} over the full range
        acc = acc + X @ Xr - XY * 2 - (XY - YX) * g
    return acc


def _rhs(sys: SystemSpec, p: MatPoly, q: MatPoly, xs, ys, k: int, z0: PolyQ) -> tuple[MatPoly, MatPoly]:
    if k == 0:
        f1 = f2 = MatPoly.zeros(sys.n)
    else:
        f1 = f_gamma(sys.alpha, xs, ys, k - 1)
        f2 = f_gamma(sys.beta, ys, xs, k - 1)
    if sys.homogeneous:
        return f1, f2
    xprev = p if k == 0 else xs[k - 1]
    yprev = q if k == 0 else ys[k - 1]
    b1, b2, b3, b4, b5 = sys.b
    c1, c2, c3, c4, c5 = sys.c
    f1 = f1 + xprev * (2 * z0) - b1 @ xprev - xprev @ b2 - b3 @ yprev - yprev @ b4
    f2 = f2 - yprev * (2 * z0) - c1 @ yprev - yprev @ c2 - c3 @ xprev - xprev @ c4
    if k >= 1:
        x2 = p if k == 1 else xs[k - 2]
        y2 = q if k == 1 else ys[k - 2]
        f1 = f1 + x2 * 2
        f2 = f2 - y2 * 2
    if k == 1:
        f1 = f1 - b5
        f2 = f2 - c5
    return f1, f2


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class FreeParam:
    k: int
    field: str  # "x" or "y"
    i: int
    j: int
    block: str
    param: Param

    @property
    def label(self) -> str:
        return self.param.label


@dataclass
class SeriesSolution:
    system: SystemSpec
    residues: ResiduePair
    z0: Param
    coeffs: list[tuple[MatPoly, MatPoly]]
    free_params: list[FreeParam]
    obstructions: list[tuple[int, list[PolyQ]]]
    resonances: dict[int, int]
    depth: int

    @property
    def xs(self) -> list[MatPoly]:
        return [c[0] for c in self.coeffs]

    @property
    def ys(self) -> list[MatPoly]:
        return [c[1] for c in self.coeffs]

    @property
    def obstruction_free(self) -> bool:
        return not self.obstructions

    def u_coefficients(self) -> list[MatPoly]:
        """x_{-1}, x_0, ..., x_N."""
        return [self.residues.p] + self.xs

    def v_coefficients(self) -> list[MatPoly]:
        return [self.residues.q] + self.ys

    def obstruction_texts(self) -> list[tuple[int, list[str]]]:
        return [(k, [o.to_text() for o in obs if not o.is_zero()]) for k, obs in self.obstructions]


def rhs_inhomogeneous(sys: SystemSpec, series: SeriesSolution, k: int) -> tuple[MatPoly, MatPoly]:
    """Right-hand side of the order-k linear system given x_j, y_j for j < k."""
    if k > len(series.coeffs):
        raise ValueError(f"coefficients below order {k} are not available")
    return _rhs(sys, series.residues.p, series.residues.q, series.xs, series.ys, k, PolyQ.var(series.z0))


def _block_label(shape: ResidueShape, fld: str, k: int, i: int, j: int) -> str:
    bi, li = shape.block_of(i)
    bj, lj = shape.block_of(j)
    blocks = shape.blocks()
    name = f"{fld}{k}_{bi}{bj}"
    if blocks[bi - 1] == 1 and blocks[bj - 1] == 1:
        return name
    return f"{name}[{li},{lj}]"


def expand_series(
    sys: SystemSpec,
    pair: ResiduePair,
    N: int | None = None,
    z0: Param | str = "z0",
    L: LOperator | None = None,
    stop_on_obstruction: bool = False,
) -> SeriesSolution:
    """Coefficients x_k, y_k for k = 0..N with symbolic free parameters."""
    if pair.n != sys.n:
        raise ValueError("residues and system have different sizes")
    if not check_residue_equations(pair, sys.alpha, sys.beta):
        raise ResidueMismatch("the residues do not solve the residue equations")
    if L is None:
        L = build_L(pair, sys.alpha, sys.beta)
    res = resonances(L)
    if N is None:
        N = (max(res) if res else 0) + 3
    z0p = z0 if isinstance(z0, Param) else param(z0)
    z0v = PolyQ.var(z0p)
    n = sys.n
    nn = n * n
    # prefer X entries as the free coordinates
    order = list(range(nn, 2 * nn)) + list(range(nn))
    xs: list[MatPoly] = []
    ys: list[MatPoly] = []
    free: list[FreeParam] = []
    obstructions: list[tuple[int, list[PolyQ]]] = []
    for k in range(N + 1):
        f1, f2 = _rhs(sys, pair.p, pair.q, xs, ys, k, z0v)
        rhs = list(f1.entries) + list(f2.entries)
        if k in res:
            solver = LinearSolver(L.matrix.shift(k), order)
            sol = solver.solve(rhs)
            vec = sol.particular
            if not sol.solvable:
                obstructions.append((k, [o for o in sol.obstruction]))
            for col, kv in zip(sol.free_columns, sol.kernel_basis):
                fld = "x" if col < nn else "y"
                i, j = divmod(col % nn, n)
                label = _block_label(pair.shape, fld, k, i, j)
                prm = param(label)
                free.append(FreeParam(k, fld, i, j, label.split("[")[0], prm))
                pv = PolyQ.var(prm)
                vec = [v + pv * c if c else v for v, c in zip(vec, kv)]
        else:
            solver = _nonresonant_solver(L, k)
            vec = solver.solve(rhs).particular
        xs.append(MatPoly(n, n, vec[:nn]))
        ys.append(MatPoly(n, n, vec[nn:]))
        if stop_on_obstruction and obstructions:
            break
    return SeriesSolution(sys, pair, z0p, list(zip(xs, ys)), free, obstructions, res, len(xs) - 1)


def _nonresonant_solver(L: LOperator, k: int) -> LinearSolver:
    return LinearSolver(L.matrix.shift(k))


# ---------------------------------------------------------------------------
# maximality


@dataclass(frozen=True)
class MaximalityVerdict:
    param_count_in_coeffs: int
    orbit_dim: int
    total: int
    n: int
    obstruction_free: bool

    @property
    def maximal(self) -> bool:
        return self.obstruction_free and self.total == 2 * self.n * self.n

    def as_dict(self) -> dict:
        return {
            "param_count_in_coeffs": self.param_count_in_coeffs,
            "orbit_dim": self.orbit_dim,
            "total": self.total,
            "maximal": self.maximal,
            "obstruction_free": self.obstruction_free,
        }


def count_verdict(pair: ResiduePair, coeff_params: int, obstruction_free: bool) -> MaximalityVerdict:
    orb = orbit_dimension(pair)
    return MaximalityVerdict(coeff_params, orb, coeff_params + orb + 1, pair.n, obstruction_free)


def maximality(series: SeriesSolution) -> MaximalityVerdict:
    return count_verdict(series.residues, len(series.free_params), series.obstruction_free)


# ---------------------------------------------------------------------------
# independent residual check by direct substitution


class LaurentMat:
    """Truncated Laurent series in t with MatPoly coefficients.

    ``coeffs`` maps a power of t to its coefficient; every power up to
    ``prec`` (inclusive) is known exactly, ``prec=None`` meaning exact.
    """

    __slots__ = ("n", "coeffs", "prec")

    def __init__(self, n: int, coeffs: dict[int, MatPoly], prec: int | None):
        self.n = n
        self.prec = prec
        self.coeffs = {e: c for e, c in coeffs.items() if (prec is None or e <= prec) and not c.is_zero()}

    def constant(self, m: MatPoly) -> "LaurentMat":
        return LaurentMat(self.n, {0: m}, None)

    @staticmethod
    def _minprec(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    def __add__(self, other: "LaurentMat") -> "LaurentMat":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return LaurentMat(self.n, out, self._minprec(self.prec, other.prec))

    def __neg__(self) -> "LaurentMat":
        return LaurentMat(self.n, {e: -c for e, c in self.coeffs.items()}, self.prec)

    def __sub__(self, other: "LaurentMat") -> "LaurentMat":
        return self + (-other)

    def _valuation(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    def __matmul__(self, other) -> "LaurentMat":
        if isinstance(other, MatPoly):
            other = self.constant(other)
        va, vb = self._valuation(), other._valuation()
        pa = None if self.prec is None or vb is None else self.prec + vb
        pb = None if other.prec is None or va is None else other.prec + va
        if va is None or vb is None:
            prec = self._minprec(self.prec, other.prec)
            return LaurentMat(self.n, {}, prec)
        prec = self._minprec(pa, pb)
        out: dict[int, MatPoly] = {}
        for ea, ca in self.coeffs.items():
            for eb, cb in other.coeffs.items():
                e = ea + eb
                if prec is not None and e > prec:
                    continue
                t = ca @ cb
                out[e] = out[e] + t if e in out else t
        return LaurentMat(self.n, out, prec)

    def __rmatmul__(self, other: MatPoly) -> "LaurentMat":
        return self.constant(other) @ self

    def __mul__(self, s) -> "LaurentMat":
        if isinstance(s, LaurentScalar):
            return s * self
        return LaurentMat(self.n, {e: c * s for e, c in self.coeffs.items()}, self.prec)

    def __rmul__(self, s) -> "LaurentMat":
        return self.__mul__(s)

    def derivative(self) -> "LaurentMat":
        return LaurentMat(
            self.n,
            {e - 1: c * e for e, c in self.coeffs.items() if e},
            None if self.prec is None else self.prec - 1,
        )

    def coefficient(self, e: int) -> MatPoly:
        if self.prec is not None and e > self.prec:
            raise ValueError(f"order {e} is beyond the known precision {self.prec}")
        return self.coeffs.get(e, MatPoly.zeros(self.n))


class LaurentScalar:
    """Exact scalar Laurent polynomial in t (used for z = z0 + t)."""

    def __init__(self, coeffs: dict[int, PolyQ]):
        self.coeffs = coeffs

    def __mul__(self, m: LaurentMat) -> LaurentMat:
        out: dict[int, MatPoly] = {}
        for es, cs in self.coeffs.items():
            for em, cm in m.coeffs.items():
                e = es + em
                t = cm * cs
                out[e] = out[e] + t if e in out else t
        vs = min(self.coeffs) if self.coeffs else 0
        prec = None if m.prec is None else m.prec + vs
        return LaurentMat(m.n, out, prec)

    __rmul__ = __mul__


def residual_check(sys: SystemSpec, series: SeriesSolution, N: int | None = None) -> bool:
    """Substitute the truncated series into the system and verify every
    residual coefficient that the truncation determines, i.e. the powers
    t^-2 .. t^(N-1)."""
    N = series.depth if N is None else N
    if N > series.depth:
        raise ValueError("series is shorter than the requested depth")
    n = sys.n
    u = LaurentMat(n, {k - 1: m for k, m in enumerate(series.u_coefficients()[: N + 2])}, N)
    v = LaurentMat(n, {k - 1: m for k, m in enumerate(series.v_coefficients()[: N + 2])}, N)
    z = LaurentScalar({0: PolyQ.var(series.z0), 1: PolyQ.one()})
    du, dv = sys.rhs(u, v, z)
    ru = u.derivative() - du
    rv = v.derivative() - dv
    for e in range(-2, N):
        if not ru.coefficient(e).is_zero() or not rv.coefficient(e).is_zero():
            return False
    return True
