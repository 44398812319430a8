"""Exact arithmetic core: rationals, named parameters, sparse Laurent-in-eps
polynomials over Q and small matrices with polynomial entries.

Every value here is immutable once built.  Polynomials share the process-wide
parameter registry ``REGISTRY``; the reserved parameter ``eps`` (id 0) is the
only variable allowed to carry negative exponents.
"""
from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

Rational = Fraction

__all__ = [
    "Rational",
    "Param",
    "ParamRegistry",
    "REGISTRY",
    "EPS",
    "param",
    "as_rational",
    "PolyQ",
    "MatPoly",
    "commutator",
    "parse_poly",
    "poly",
    "DivergentLimit",
    "SubstitutionCreatesNegativePower",
]


class SubstitutionCreatesNegativePower(ValueError):
    """A substitution would give a non-eps variable a negative exponent."""


class DivergentLimit(ValueError):
    """``epsilon_limit`` met surviving negative powers of eps."""

    def __init__(self, terms: "PolyQ"):
        self.terms = terms
        super().__init__(f"negative powers of eps survive: {terms.to_text()}")


def as_rational(value: Union[int, str, Fraction]) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to an exact rational.

    Floats are rejected on purpose; nothing in this package is approximate.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True, order=True)
class Param:
    id: int
    label: str

    def __str__(self) -> str:
        return self.label


_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\[\d+,\d+\])?$")


class ParamRegistry:
    """Append-only label <-> id table.  Safe to use from several threads."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._by_label: dict[str, Param] = {}
        self._by_id: list[Param] = []
        self.eps = self.param("eps")

    def param(self, label: str) -> Param:
        """Return the parameter called ``label``, creating it on first use."""
        found = self._by_label.get(label)
        if found is not None:
            return found
        if not _LABEL_RE.match(label):
            raise ValueError(f"invalid parameter label {label!r}")
        with self._lock:
            found = self._by_label.get(label)
            if found is None:
                found = Param(len(self._by_id), label)
                self._by_id.append(found)
                self._by_label[label] = found
            return found

    def get(self, label: str) -> Param | None:
        return self._by_label.get(label)

    def label(self, pid: int) -> str:
        return self._by_id[pid].label

    def __len__(self) -> int:
        return len(self._by_id)


REGISTRY = ParamRegistry()
EPS = REGISTRY.eps


def param(label: str) -> Param:
    return REGISTRY.param(label)


# ---------------------------------------------------------------------------
# polynomials

Monomial = tuple  # tuple[tuple[int, int], ...] sorted by param id, exponents nonzero
Scalar = Union[int, Fraction]

_ONE_MONO: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            s = ea + eb
            if s:
                out.append((va, s))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def _eps_degree(m: Monomial) -> int:
    if m and m[0][0] == 0:
        return m[0][1]
    return 0


class PolyQ:
    """Sparse polynomial over Q; ``eps`` may appear with negative exponents.

    ``terms`` maps a monomial (sorted ``(param_id, exponent)`` pairs) to a
    nonzero Fraction.  Instances must not be mutated after construction.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = dict(terms) if terms else {}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "PolyQ":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj._hash = None
        return obj

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c: Scalar | str) -> "PolyQ":
        c = as_rational(c)
        return cls._raw({_ONE_MONO: c} if c else {})

    @classmethod
    def var(cls, p: Param | str, exp: int = 1) -> "PolyQ":
        if isinstance(p, str):
            p = param(p)
        if exp == 0:
            return cls.const(1)
        if exp < 0 and p.id != 0:
            raise SubstitutionCreatesNegativePower(f"{p.label}^{exp}")
        return cls._raw({((p.id, exp),): Fraction(1)})

    @classmethod
    def zero(cls) -> "PolyQ":
        return cls._raw({})

    @classmethod
    def one(cls) -> "PolyQ":
        return cls._raw({_ONE_MONO: Fraction(1)})

    @staticmethod
    def coerce(x: "PolyQ | Scalar") -> "PolyQ":
        if isinstance(x, PolyQ):
            return x
        return PolyQ.const(x)

    # predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _ONE_MONO in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get(_ONE_MONO, Fraction(0))

    def as_rational(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"not a constant: {self.to_text()}")
        return self.constant_term()

    def variables(self) -> set[int]:
        return {v for m in self.terms for v, _ in m}

    def params(self) -> list[Param]:
        return [REGISTRY._by_id[v] for v in sorted(self.variables())]

    def degree(self) -> int:
        """Total degree counting only non-eps variables."""
        return max((sum(e for v, e in m if v) for m in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PolyQ):
            if isinstance(other, (int, Fraction)):
                other = PolyQ.const(other)
            else:
                return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for m, c in small.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s += c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return PolyQ._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return PolyQ._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, PolyQ):
            if isinstance(other, (int, Fraction)):
                other = PolyQ.const(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: Scalar) -> "PolyQ":
        c = as_rational(c)
        if not c:
            return PolyQ.zero()
        if c == 1:
            return self
        return PolyQ._raw({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PolyQ):
            if isinstance(other, (int, Fraction)):
                return self.scale(other)
            return NotImplemented
        a, b = self.terms, other.terms
        if not a or not b:
            return PolyQ.zero()
        if len(b) == 1 and _ONE_MONO in b:
            return self.scale(b[_ONE_MONO])
        if len(a) == 1 and _ONE_MONO in a:
            return other.scale(a[_ONE_MONO])
        out: dict = {}
        get = out.get
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = _mono_mul(ma, mb)
                s = get(m)
                out[m] = ca * cb if s is None else s + ca * cb
        return PolyQ._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / as_rational(other))
        return NotImplemented

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self._inverse_monomial() ** (-e)
        result = PolyQ.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def _inverse_monomial(self) -> "PolyQ":
        if len(self.terms) != 1:
            if not self.terms:
                raise ZeroDivisionError("zero polynomial has no inverse")
            raise SubstitutionCreatesNegativePower(
                f"cannot invert the non-monomial {self.to_text()}"
            )
        ((m, c),) = self.terms.items()
        inv = tuple((v, -e) for v, e in m)
        if any(v != 0 for v, _ in inv):
            raise SubstitutionCreatesNegativePower(
                f"inverting {self.to_text()} gives a negative exponent"
            )
        return PolyQ._raw({inv: 1 / c})

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, PolyQ):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_term() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # substitution -------------------------------------------------------
    def substitute(self, p: Param, value: "PolyQ | Scalar") -> "PolyQ":
        """Replace ``p`` by ``value`` everywhere."""
        return self.substitute_all({p: value})

    def substitute_all(self, mapping: Mapping[Param, "PolyQ | Scalar"]) -> "PolyQ":
        """Simultaneous substitution of several parameters."""
        if not mapping or not self.terms:
            return self
        repl = {p.id: PolyQ.coerce(v) for p, v in mapping.items()}
        if not self.variables() & repl.keys():
            return self
        powers: dict[tuple[int, int], PolyQ] = {}
        out = PolyQ.zero()
        acc: dict = {}
        for m, c in self.terms.items():
            kept = []
            factor = None
            for v, e in m:
                if v in repl:
                    key = (v, e)
                    pw = powers.get(key)
                    if pw is None:
                        pw = repl[v] ** e
                        powers[key] = pw
                    factor = pw if factor is None else factor * pw
                else:
                    kept.append((v, e))
            if factor is None:
                acc[m] = acc.get(m, 0) + c
                continue
            rest = PolyQ._raw({tuple(kept): c})
            out = out + rest * factor
        if acc:
            out = out + PolyQ._raw({m: c for m, c in acc.items() if c})
        for m in out.terms:
            for v, e in m:
                if e < 0 and v != 0:
                    raise SubstitutionCreatesNegativePower(
                        f"{REGISTRY.label(v)}^{e} in {out.to_text()}"
                    )
        return out

    def evaluate(self, values: Mapping[Param, Scalar]) -> "PolyQ":
        return self.substitute_all({p: PolyQ.const(v) for p, v in values.items()})

    def map_coefficients(self, fn: Callable[[Fraction], Fraction]) -> "PolyQ":
        out = {}
        for m, c in self.terms.items():
            v = fn(c)
            if v:
                out[m] = v
        return PolyQ._raw(out)

    # eps handling -------------------------------------------------------
    def eps_parts(self) -> dict[int, "PolyQ"]:
        """Split into ``{k: coefficient of eps^k}``."""
        parts: dict[int, dict] = {}
        for m, c in self.terms.items():
            d = _eps_degree(m)
            rest = m[1:] if d else m
            parts.setdefault(d, {})[rest] = c
        return {d: PolyQ._raw(t) for d, t in sorted(parts.items())}

    def epsilon_limit(self) -> "PolyQ":
        """Value at eps -> 0; raises DivergentLimit if eps^-k terms survive."""
        bad = {m: c for m, c in self.terms.items() if _eps_degree(m) < 0}
        if bad:
            raise DivergentLimit(PolyQ._raw(bad))
        return PolyQ._raw({m: c for m, c in self.terms.items() if _eps_degree(m) == 0})

    def coefficient(self, p: Param, exp: int) -> "PolyQ":
        """Coefficient of ``p^exp`` viewing self as a polynomial in ``p``."""
        out = {}
        for m, c in self.terms.items():
            e = dict(m).get(p.id, 0)
            if e == exp:
                out[tuple((v, x) for v, x in m if v != p.id)] = c
        return PolyQ._raw(out)

    # text ---------------------------------------------------------------
    def _term_key(self, m: Monomial):
        labels = sorted((REGISTRY.label(v), e) for v, e in m)
        total = sum(e for _, e in labels)
        return (-total, labels)

    def to_text(self) -> str:
        """``coeff*name^exp`` terms joined by `` + `` / `` - `` (exact rationals)."""
        if not self.terms:
            return "0"
        pieces = []
        for m in sorted(self.terms, key=self._term_key):
            c = self.terms[m]
            factors = [
                lbl if e == 1 else f"{lbl}^{e}"
                for lbl, e in sorted((REGISTRY.label(v), e) for v, e in m)
            ]
            body = "*".join([str(abs(c))] + factors)
            if not pieces:
                pieces.append(body if c > 0 else "-" + body)
            else:
                pieces.append(("+ " if c > 0 else "- ") + body)
        return " ".join(pieces)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"PolyQ({self.to_text()!r})"


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\[\d+,\d+\])?)"
    r"|(?P<op>[-+*^]))"
)


def parse_poly(text: str) -> PolyQ:
    """Parse the ``to_text`` format (or any sum of products of rationals and
    names with integer powers, e.g. ``"2*gamma1 - 1/2"``)."""
    tokens: list[tuple[str, str]] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN_RE.match(text, pos)
        if not mt or mt.end() == pos:
            raise ValueError(f"cannot parse polynomial at {text[pos:]!r}")
        kind = mt.lastgroup
        tokens.append((kind, mt.group(kind)))
        pos = mt.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if not tokens:
        raise ValueError("empty polynomial text")

    result = PolyQ.zero()
    i = 0
    sign = 1
    while i < len(tokens):
        while i < len(tokens) and tokens[i] in (("op", "+"), ("op", "-")):
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        term = PolyQ.const(sign)
        expect_factor = True
        while i < len(tokens):
            kind, val = tokens[i]
            if expect_factor:
                if kind == "num":
                    factor = PolyQ.const(Fraction(val))
                elif kind == "name":
                    factor = PolyQ.var(param(val))
                else:
                    raise ValueError(f"unexpected {val!r} in {text!r}")
                i += 1
                if i < len(tokens) and tokens[i] == ("op", "^"):
                    i += 1
                    neg = False
                    if i < len(tokens) and tokens[i] == ("op", "-"):
                        neg = True
                        i += 1
                    if i >= len(tokens) or tokens[i][0] != "num" or "/" in tokens[i][1]:
                        raise ValueError(f"bad exponent in {text!r}")
                    e = int(tokens[i][1])
                    factor = factor ** (-e if neg else e)
                    i += 1
                term = term * factor
                expect_factor = False
            elif tokens[i] == ("op", "*"):
                expect_factor = True
                i += 1
            else:
                break
        if expect_factor:
            raise ValueError(f"dangling operator in {text!r}")
        result = result + term
        sign = 1
    return result


def poly(x: "PolyQ | Scalar | str | Param") -> PolyQ:
    """Loose constructor used in configs and tests."""
    if isinstance(x, PolyQ):
        return x
    if isinstance(x, Param):
        return PolyQ.var(x)
    if isinstance(x, str):
        return parse_poly(x)
    return PolyQ.const(x)


# ---------------------------------------------------------------------------
# matrices


class MatPoly:
    """Dense ``rows x cols`` matrix of PolyQ entries, stored row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Sequence[PolyQ]):
        if rows <= 0 or cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        if len(entries) != rows * cols:
            raise ValueError("entry count does not match shape")
        self.rows = rows
        self.cols = cols
        self.entries = tuple(entries)

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "MatPoly":
        cols = rows if cols is None else cols
        z = PolyQ.zero()
        return cls(rows, cols, [z] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "MatPoly":
        return cls.scalar(n, 1)

    @classmethod
    def scalar(cls, n: int, value) -> "MatPoly":
        v = poly(value)
        z = PolyQ.zero()
        return cls(n, n, [v if i == j else z for i in range(n) for j in range(n)])

    @classmethod
    def diag(cls, values: Sequence) -> "MatPoly":
        n = len(values)
        z = PolyQ.zero()
        vals = [poly(v) for v in values]
        return cls(n, n, [vals[i] if i == j else z for i in range(n) for j in range(n)])

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "MatPoly":
        r = len(rows)
        c = len(rows[0])
        if any(len(row) != c for row in rows):
            raise ValueError("ragged matrix")
        return cls(r, c, [poly(x) for row in rows for x in row])

    @classmethod
    def unit(cls, n: int, i: int, j: int) -> "MatPoly":
        """Matrix unit E_ij (0-based)."""
        z, one = PolyQ.zero(), PolyQ.one()
        return cls(n, n, [one if (a, b) == (i, j) else z for a in range(n) for b in range(n)])

    @classmethod
    def symbolic(cls, name: str, n: int) -> "MatPoly":
        """n x n matrix whose (i, j) entry is the parameter ``{name}_{i}{j}`` (1-based)."""
        return cls(n, n, [PolyQ.var(param(f"{name}_{i + 1}{j + 1}")) for i in range(n) for j in range(n)])

    def __getitem__(self, ij: tuple[int, int]) -> PolyQ:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row_lists(self) -> list[list[PolyQ]]:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def _check_same(self, other: "MatPoly") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        self._check_same(other)
        return MatPoly(self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        self._check_same(other)
        return MatPoly(self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self) -> "MatPoly":
        return MatPoly(self.rows, self.cols, [-a for a in self.entries])

    def __mul__(self, s) -> "MatPoly":
        if isinstance(s, MatPoly):
            return NotImplemented
        s = poly(s) if not isinstance(s, PolyQ) else s
        if s.is_constant():
            c = s.constant_term()
            return MatPoly(self.rows, self.cols, [a.scale(c) for a in self.entries])
        return MatPoly(self.rows, self.cols, [a * s for a in self.entries])

    __rmul__ = __mul__

    def __matmul__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        n, m, r = self.rows, self.cols, other.cols
        A, B = self.entries, other.entries
        out = []
        for i in range(n):
            arow = [(k, A[i * m + k]) for k in range(m) if A[i * m + k].terms]
            for j in range(r):
                acc = PolyQ.zero()
                for k, a in arow:
                    b = B[k * r + j]
                    if b.terms:
                        acc = acc + a * b
                out.append(acc)
        return MatPoly(n, r, out)

    def transpose(self) -> "MatPoly":
        return MatPoly(self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    @property
    def T(self) -> "MatPoly":
        return self.transpose()

    def map(self, fn: Callable[[PolyQ], PolyQ]) -> "MatPoly":
        return MatPoly(self.rows, self.cols, [fn(a) for a in self.entries])

    def substitute_all(self, mapping: Mapping[Param, "PolyQ | Scalar"]) -> "MatPoly":
        return self.map(lambda a: a.substitute_all(mapping))

    def epsilon_limit(self) -> "MatPoly":
        return self.map(lambda a: a.epsilon_limit())

    def is_zero(self) -> bool:
        return all(not a.terms for a in self.entries)

    def is_constant(self) -> bool:
        return all(a.is_constant() for a in self.entries)

    def trace(self) -> PolyQ:
        acc = PolyQ.zero()
        for i in range(min(self.rows, self.cols)):
            acc = acc + self[i, i]
        return acc

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "MatPoly":
        return MatPoly(r1 - r0, c1 - c0, [self[i, j] for i in range(r0, r1) for j in range(c0, c1)])

    def variables(self) -> set[int]:
        out: set[int] = set()
        for a in self.entries:
            out |= a.variables()
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def to_text(self) -> list[list[str]]:
        return [[a.to_text() for a in row] for row in self.row_lists()]

    def __repr__(self) -> str:
        return f"MatPoly({self.to_text()!r})"

    def __iter__(self) -> Iterator[PolyQ]:
        return iter(self.entries)


def commutator(a: MatPoly, b: MatPoly) -> MatPoly:
    return a @ b - b @ a


def block_diag(blocks: Iterable[MatPoly]) -> MatPoly:
    blocks = list(blocks)
    n = sum(b.rows for b in blocks)
    m = sum(b.cols for b in blocks)
    z = PolyQ.zero()
    rows = [[z] * m for _ in range(n)]
    r0 = c0 = 0
    for b in blocks:
        for i in range(b.rows):
            for j in range(b.cols):
                rows[r0 + i][c0 + j] = b[i, j]
        r0 += b.rows
        c0 += b.cols
    return MatPoly(n, m, [x for row in rows for x in row])
