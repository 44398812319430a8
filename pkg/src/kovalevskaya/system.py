"""Two-field quadratic matrix systems and their residue catalogue.

The systems handled here are

    u' = -u^2 + 2uv + alpha [u, v] - 2 z u + b1 u + u b2 + b3 v + v b4 + b5
    v' = -v^2 + 2vu + beta  [v, u] + 2 z v + c1 v + v c2 + c3 u + u c4 + c5

with scalar alpha, beta and n x n coefficient matrices.  The homogeneous
variant keeps only the quadratic part.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .exact import MatPoly, as_rational, block_diag
from .linalg import QMatrix, rank

__all__ = [
    "SystemSpec",
    "ResidueShape",
    "ResiduePair",
    "MuValues",
    "DeltaZero",
    "NotInSigma0",
    "BadPartition",
    "SIGMA0_XY",
    "SIGMA0",
    "SIGMA",
    "delta",
    "mu_values",
    "noncommuting_exists",
    "diag_residues",
    "type_residues",
    "noncommuting_residues",
    "residue_residuals",
    "check_residue_equations",
    "dihedral_orbit",
    "dihedral_generators",
    "orbit_dimension",
    "stabilizer_dimension",
    "stabilizer_map",
    "all_shapes",
]


class DeltaZero(ValueError):
    pass


class NotInSigma0(ValueError):
    pass


class BadPartition(ValueError):
    pass


# ---------------------------------------------------------------------------
# systems


def _coef_tuple(mats: Sequence[MatPoly | None] | None, n: int) -> tuple[MatPoly, ...]:
    mats = list(mats) if mats is not None else []
    if len(mats) > 5:
        raise ValueError("at most five coefficient matrices per equation")
    mats += [None] * (5 - len(mats))
    out = []
    for m in mats:
        if m is None:
            out.append(MatPoly.zeros(n))
        else:
            if m.shape != (n, n):
                raise ValueError(f"coefficient has shape {m.shape}, expected {(n, n)}")
            out.append(m)
    return tuple(out)


@dataclass(frozen=True)
class SystemSpec:
    n: int
    alpha: Fraction
    beta: Fraction
    b: tuple[MatPoly, ...] = ()
    c: tuple[MatPoly, ...] = ()
    homogeneous: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        object.__setattr__(self, "beta", as_rational(self.beta))
        object.__setattr__(self, "b", _coef_tuple(self.b, self.n))
        object.__setattr__(self, "c", _coef_tuple(self.c, self.n))
        if self.homogeneous and not all(m.is_zero() for m in self.b + self.c):
            raise ValueError("a homogeneous system carries no linear coefficients")

    @classmethod
    def homogeneous_system(cls, n: int, alpha, beta) -> "SystemSpec":
        return cls(n, alpha, beta, homogeneous=True)

    @classmethod
    def build(cls, n: int, alpha, beta, **coefs: MatPoly) -> "SystemSpec":
        """``build(2, 0, -3, b5=h2, c3=h1)`` style constructor."""
        b = [coefs.pop(f"b{i}", None) for i in range(1, 6)]
        c = [coefs.pop(f"c{i}", None) for i in range(1, 6)]
        if coefs:
            raise TypeError(f"unknown coefficient names {sorted(coefs)}")
        return cls(n, alpha, beta, tuple(b), tuple(c))

    def coefficient(self, name: str) -> MatPoly:
        idx = int(name[1:]) - 1
        return (self.b if name[0] == "b" else self.c)[idx]

    def coefficients(self) -> dict[str, MatPoly]:
        out = {f"b{i + 1}": m for i, m in enumerate(self.b)}
        out.update({f"c{i + 1}": m for i, m in enumerate(self.c)})
        return out

    def with_coefficients(self, **coefs: MatPoly) -> "SystemSpec":
        cur = self.coefficients()
        for k, v in coefs.items():
            if k not in cur:
                raise TypeError(f"unknown coefficient {k}")
            cur[k] = v
        return SystemSpec.build(self.n, self.alpha, self.beta, **cur)

    def substitute_all(self, mapping) -> "SystemSpec":
        return SystemSpec(
            self.n,
            self.alpha,
            self.beta,
            tuple(m.substitute_all(mapping) for m in self.b),
            tuple(m.substitute_all(mapping) for m in self.c),
            self.homogeneous,
        )

    def is_linear_free(self) -> bool:
        return all(m.is_zero() for m in self.b + self.c)

    def rhs(self, u, v, z=None):
        """Right-hand sides ``(u', v')``.

        Works for any matrix-like operands supporting ``+ - @`` and scalar
        multiplication (MatPoly, truncated series, ...).  ``z`` is ignored for
        homogeneous systems.
        """
        a, b_ = self.alpha, self.beta
        uv = u @ v
        vu = v @ u
        du = -(u @ u) + uv * 2 + (uv - vu) * a
        dv = -(v @ v) + vu * 2 + (vu - uv) * b_
        if self.homogeneous:
            return du, dv
        if z is None:
            raise ValueError("inhomogeneous systems need z")
        b1, b2, b3, b4, b5 = self.b
        c1, c2, c3, c4, c5 = self.c
        du = du - (z * u) * 2 + b1 @ u + u @ b2 + b3 @ v + v @ b4 + _lift(b5, u)
        dv = dv + (z * v) * 2 + c1 @ v + v @ c2 + c3 @ u + u @ c4 + _lift(c5, v)
        return du, dv


def _lift(m: MatPoly, like):
    """Constant matrix in the same representation as ``like``."""
    if isinstance(like, MatPoly):
        return m
    return like.constant(m)


# ---------------------------------------------------------------------------
# residues


@dataclass(frozen=True)
class ResidueShape:
    """Commuting shape (m == 0) or non-commuting block shape (m >= 1)."""

    k1: int
    k2: int
    k3: int
    k4: int
    m: int = 0

    def __post_init__(self) -> None:
        if min(self.k1, self.k2, self.k3, self.k4, self.m) < 0:
            raise BadPartition("partition entries must be non-negative")
        if self.n < 1:
            raise BadPartition("empty partition")

    @classmethod
    def commuting(cls, k1: int, k2: int, k3: int, k4: int) -> "ResidueShape":
        return cls(k1, k2, k3, k4, 0)

    @classmethod
    def noncommuting(cls, m: int, k1: int = 0, k2: int = 0, k3: int = 0, k4: int = 0) -> "ResidueShape":
        if m < 1:
            raise BadPartition("non-commuting shapes need m >= 1")
        return cls(k1, k2, k3, k4, m)

    @classmethod
    def of_type(cls, t: int, n: int) -> "ResidueShape":
        """Shapes of the three maximal commuting types."""
        if n < 1:
            raise BadPartition("n must be positive")
        ks = [0, 0, 0, n - 1]
        try:
            ks[{1: 0, 2: 1, 3: 2}[t]] = 1
        except KeyError:
            raise BadPartition(f"unknown type {t}") from None
        return cls(*ks)

    @property
    def ks(self) -> tuple[int, int, int, int]:
        return (self.k1, self.k2, self.k3, self.k4)

    @property
    def n(self) -> int:
        return 2 * self.m + self.k1 + self.k2 + self.k3 + self.k4

    @property
    def is_commuting(self) -> bool:
        return self.m == 0

    @property
    def type_tag(self) -> int | None:
        if self.m:
            return None
        n = self.n
        for t in (1, 2, 3):
            if self == ResidueShape.of_type(t, n):
                return t
        return None

    def groups(self) -> list[int]:
        """Sizes of the diagonal groups in canonical order, empty ones included."""
        if self.m:
            return [self.m, self.m, *self.ks]
        return list(self.ks)

    def blocks(self) -> list[int]:
        return [g for g in self.groups() if g]

    def block_of(self, i: int) -> tuple[int, int]:
        """(1-based block number, 1-based index inside the block) of row ``i``."""
        start = 0
        for b, size in enumerate(self.blocks(), start=1):
            if i < start + size:
                return b, i - start + 1
            start += size
        raise IndexError(i)

    def describe(self) -> dict:
        d = {"k1": self.k1, "k2": self.k2, "k3": self.k3, "k4": self.k4}
        if self.m:
            return {"kind": "noncommuting", "m": self.m, **d}
        return {"kind": "commuting", **d}


@dataclass(frozen=True)
class ResiduePair:
    p: MatPoly
    q: MatPoly
    shape: ResidueShape
    type_tag: int | None = None

    @property
    def n(self) -> int:
        return self.p.rows


@dataclass(frozen=True)
class MuValues:
    mu1: Fraction
    mu2: Fraction
    mu3: Fraction
    mu4: Fraction
    delta: Fraction

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.mu1, self.mu2, self.mu3, self.mu4)


def delta(alpha, beta) -> Fraction:
    a, b = as_rational(alpha), as_rational(beta)
    return a * a + b * b + a * b + 3 * (a + b + 1)


def mu_values(alpha, beta) -> MuValues:
    a, b = as_rational(alpha), as_rational(beta)
    d = delta(a, b)
    if d == 0:
        raise DeltaZero(f"Delta vanishes at ({a}, {b})")
    return MuValues(
        mu1=-a * (3 + a + 2 * b) / (2 * d),
        mu2=-(2 + a) * (3 + a + 2 * b) / (2 * d),
        mu3=-b * (3 + b + 2 * a) / (2 * d),
        mu4=-(2 + b) * (3 + b + 2 * a) / (2 * d),
        delta=d,
    )


def noncommuting_exists(alpha, beta) -> bool:
    """True iff residues with [p, q] != 0 are possible at (alpha, beta)."""
    if delta(alpha, beta) == 0:
        return False
    m1, m2, m3, m4 = mu_values(alpha, beta).as_tuple()
    return (
        -m1 * m1 + 2 * m1 * m3 + m1 == 0
        and -m3 * m3 + 2 * m1 * m3 + m3 == 0
        and -m2 * m2 + 2 * m2 * m4 + m2 == 0
        and -m4 * m4 + 2 * m2 * m4 + m4 == 0
    )


# normalized upper-right entries (X, Y) of the 2x2 non-commuting residues
SIGMA0_XY: dict[tuple[int, int], tuple[int, int]] = {
    (1, -2): (-1, 0),
    (0, 0): (-1, 0),
    (0, -1): (0, 1),
    (0, -2): (-1, 0),
    (0, -3): (0, -1),
    (-1, 0): (-1, 0),
    (-1, -2): (1, 0),
    (-2, 1): (0, 1),
    (-2, 0): (1, 0),
    (-2, -1): (0, -1),
    (-2, -2): (1, 0),
    (-3, 0): (1, 0),
}

SIGMA0 = frozenset(SIGMA0_XY)
SIGMA = SIGMA0 | {(-1, -1)}


def _check_n(n: int, shape: ResidueShape) -> None:
    if shape.n != n:
        raise BadPartition(f"partition {shape.groups()} does not sum to n={n}")


def diag_residues(n: int, shape: ResidueShape) -> ResiduePair:
    """Canonical diagonal residues p = diag(-1, 1, 0, 0), q = diag(-1, 0, 1, 0)
    with multiplicities k1..k4."""
    if not shape.is_commuting:
        raise BadPartition("diag_residues needs a commuting shape")
    _check_n(n, shape)
    k1, k2, k3, k4 = shape.ks
    p = [-1] * k1 + [1] * k2 + [0] * (k3 + k4)
    q = [-1] * k1 + [0] * k2 + [1] * k3 + [0] * k4
    return ResiduePair(MatPoly.diag(p), MatPoly.diag(q), shape, shape.type_tag)


def type_residues(t: int, n: int) -> ResiduePair:
    return diag_residues(n, ResidueShape.of_type(t, n))


def noncommuting_residues(alpha, beta, shape: ResidueShape) -> ResiduePair:
    a, b = as_rational(alpha), as_rational(beta)
    if shape.is_commuting:
        raise BadPartition("noncommuting_residues needs m >= 1")
    key = (a, b)
    if not noncommuting_exists(a, b) or key not in {(Fraction(x), Fraction(y)) for x, y in SIGMA0}:
        raise NotInSigma0(f"({a}, {b}) is not in Sigma_0")
    X, Y = SIGMA0_XY[(int(a), int(b))]
    mu = mu_values(a, b)
    m = shape.m
    I = MatPoly.identity(m)
    Z = MatPoly.zeros(m)
    top_p = _blocks2([[I * mu.mu1, I * X], [Z, I * mu.mu2]])
    top_q = _blocks2([[I * mu.mu3, I * Y], [Z, I * mu.mu4]])
    rest = ResidueShape.commuting(*shape.ks) if sum(shape.ks) else None
    if rest is None:
        return ResiduePair(top_p, top_q, shape)
    d = diag_residues(rest.n, rest)
    return ResiduePair(block_diag([top_p, d.p]), block_diag([top_q, d.q]), shape)


def _blocks2(rows: list[list[MatPoly]]) -> MatPoly:
    m = rows[0][0].rows
    out = []
    for br in rows:
        for i in range(m):
            for blk in br:
                out.extend(blk.entries[i * m:(i + 1) * m])
    return MatPoly(2 * m, 2 * m, out)


def residue_residuals(p: MatPoly, q: MatPoly, alpha, beta) -> tuple[MatPoly, MatPoly]:
    a, b = as_rational(alpha), as_rational(beta)
    pq, qp = p @ q, q @ p
    r1 = -(p @ p) + pq * 2 + (pq - qp) * a + p
    r2 = -(q @ q) + qp * 2 + (qp - pq) * b + q
    return r1, r2


def check_residue_equations(pair: ResiduePair | tuple[MatPoly, MatPoly], alpha, beta) -> bool:
    p, q = (pair.p, pair.q) if isinstance(pair, ResiduePair) else pair
    r1, r2 = residue_residuals(p, q, alpha, beta)
    return r1.is_zero() and r2.is_zero()


# ---------------------------------------------------------------------------
# symmetry


def dihedral_generators():
    return (
        lambda a, b: (b, a),
        lambda a, b: (-a - 2, -b - 2),
        lambda a, b: (a, -a - b - 3),
    )


def dihedral_orbit(alpha, beta) -> frozenset[tuple[Fraction, Fraction]]:
    start = (as_rational(alpha), as_rational(beta))
    seen = {start}
    todo = [start]
    gens = dihedral_generators()
    while todo:
        pt = todo.pop()
        for g in gens:
            img = g(*pt)
            if img not in seen:
                seen.add(img)
                todo.append(img)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# orbit of the residues under conjugation


def _to_q(m: MatPoly) -> list[list[Fraction]]:
    return [[x.as_rational() for x in row] for row in m.row_lists()]


def stabilizer_map(pair: ResiduePair) -> QMatrix:
    """Matrix of S -> ([S, p], [S, q]) on row-major vectorized S."""
    n = pair.n
    P, Q = _to_q(pair.p), _to_q(pair.q)
    rows = []
    for M in (P, Q):
        for i, j in product(range(n), range(n)):
            row = [Fraction(0)] * (n * n)
            # [S, M]_ij = sum_k S_ik M_kj - M_ik S_kj
            for k in range(n):
                if M[k][j]:
                    row[i * n + k] += M[k][j]
                if M[i][k]:
                    row[k * n + j] -= M[i][k]
            rows.append(row)
    return QMatrix(rows, n * n)


def stabilizer_dimension(pair: ResiduePair) -> int:
    n = pair.n
    return n * n - rank(stabilizer_map(pair))


def orbit_dimension(pair: ResiduePair) -> int:
    return pair.n ** 2 - stabilizer_dimension(pair)


def all_shapes(n: int, m: int = 0) -> Iterable[ResidueShape]:
    """Every partition shape of size n with the given m."""
    rest = n - 2 * m
    if rest < 0:
        return
    for k1 in range(rest + 1):
        for k2 in range(rest + 1 - k1):
            for k3 in range(rest + 1 - k1 - k2):
                yield ResidueShape(k1, k2, k3, rest - k1 - k2 - k3, m)
