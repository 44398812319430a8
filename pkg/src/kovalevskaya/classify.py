"""Classification of (alpha, beta) points and the deformed P4 families."""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .engine import (
    MaximalityVerdict,
    SeriesSolution,
    build_L,
    count_verdict,
    expand_series,
    maximality,
    residual_check,
    resonances,
)
from .exact import MatPoly, Param, PolyQ, as_rational, commutator, param
from .system import (
    ResiduePair,
    ResidueShape,
    SystemSpec,
    all_shapes,
    noncommuting_exists,
    noncommuting_residues,
    orbit_dimension,
    type_residues,
)

__all__ = [
    "ClassificationResult",
    "candidate_verdict",
    "default_p4_2_data",
    "classify_point",
    "scan_sigma",
    "ConstraintViolated",
    "DeformationFamily",
    "CandidateResult",
    "FamilyReport",
    "p4_0",
    "p4_1",
    "p4_2",
    "default_family",
    "verify_deformation",
    "parametric_system",
    "verify_resonance_conditions_parametric",
    "cond2_substitution",
    "cond3_substitution",
    "commuting_b_substitution",
    "cond231_substitution",
    "substitute_obstructions",
    "random_matrix",
]


# ---------------------------------------------------------------------------
# candidates and single-point classification


def candidate_verdict(sys: SystemSpec, pair: ResiduePair) -> tuple[MaximalityVerdict, SeriesSolution | None]:
    """Maximality of one residue candidate.

    When the resonance count already rules out 2n^2 parameters the expansion
    is skipped.
    """
    L = build_L(pair, sys.alpha, sys.beta)
    res = resonances(L)
    count = sum(res.values())
    if count + orbit_dimension(pair) + 1 != 2 * sys.n ** 2:
        return count_verdict(pair, count, True), None
    ser = expand_series(sys, pair, N=max(res) if res else 0, L=L)
    return maximality(ser), ser


@dataclass(frozen=True)
class ClassificationResult:
    point: tuple[Fraction, Fraction]
    maximal_types: frozenset[int]
    noncommuting_maximal: bool
    noncommuting_shapes: tuple[tuple[int, ...], ...] = ()

    @property
    def total_maximal(self) -> int:
        return len(self.maximal_types) + (1 if self.noncommuting_maximal else 0)

    def as_dict(self) -> dict:
        return {
            "point": [str(self.point[0]), str(self.point[1])],
            "maximal_types": sorted(self.maximal_types),
            "noncommuting_maximal": self.noncommuting_maximal,
            "noncommuting_shapes": [list(s) for s in self.noncommuting_shapes],
            "total_maximal": self.total_maximal,
        }


def classify_point(alpha, beta, n: int) -> ClassificationResult:
    a, b = as_rational(alpha), as_rational(beta)
    sys = SystemSpec.homogeneous_system(n, a, b)
    types = frozenset(t for t in (1, 2, 3) if candidate_verdict(sys, type_residues(t, n))[0].maximal)
    shapes = []
    if noncommuting_exists(a, b):
        for sh in all_shapes(n, 1):
            if candidate_verdict(sys, noncommuting_residues(a, b, sh))[0].maximal:
                shapes.append(sh.ks)
    return ClassificationResult((a, b), types, bool(shapes), tuple(shapes))


def _classify_plain(args):
    a, b, n = args
    r = classify_point(a, b, n)
    return (a, b, sorted(r.maximal_types), [list(s) for s in r.noncommuting_shapes])


def scan_sigma(lo: int, hi: int, n: int, jobs: int = 1, extra_points: Iterable = ()) -> list[ClassificationResult]:
    """Classify every integer point of [lo, hi]^2 (plus ``extra_points``)."""
    if n < 2:
        raise ValueError("the scan needs n >= 2")
    pts = [(a, b) for a in range(lo, hi + 1) for b in range(lo, hi + 1)]
    pts += [(as_rational(a), as_rational(b)) for a, b in extra_points]
    work = [(str(a), str(b), n) for a, b in pts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            raw = list(ex.map(_classify_plain, work, chunksize=4))
    else:
        raw = [_classify_plain(w) for w in work]
    out = [
        ClassificationResult(
            (as_rational(a), as_rational(b)),
            frozenset(types),
            bool(shapes),
            tuple(tuple(s) for s in shapes),
        )
        for a, b, types, shapes in raw
    ]
    out.sort(key=lambda r: r.point)
    return out


# ---------------------------------------------------------------------------
# deformation families


class ConstraintViolated(ValueError):
    pass


def random_matrix(rng: random.Random, n: int, bound: int = 5) -> MatPoly:
    return MatPoly.from_rows(
        [[Fraction(rng.randint(-bound, bound), rng.randint(1, 3)) for _ in range(n)] for _ in range(n)]
    )


@dataclass(frozen=True)
class DeformationFamily:
    """A concrete member of one of the deformed families.

    ``candidates`` lists the residue candidates that must all give maximal
    solutions: type numbers 1..3 or ``"nc"`` for the non-commuting residues
    with m = 1, k4 = n - 2.
    """

    id: str
    n: int
    alpha: Fraction
    beta: Fraction
    coefficients: dict
    constraints: tuple = ()
    candidates: tuple = (1, 2, 3)
    data: dict = field(default_factory=dict)

    def system(self) -> SystemSpec:
        return SystemSpec.build(self.n, self.alpha, self.beta, **self.coefficients)

    def check_constraints(self) -> None:
        for name, lhs, rhs in self.constraints:
            if lhs != rhs:
                raise ConstraintViolated(f"{self.id}: constraint {name} fails")

    def at_point(self, alpha, beta) -> "DeformationFamily":
        """Same coefficients placed at another (alpha, beta); used for negative controls."""
        return DeformationFamily(
            self.id, self.n, as_rational(alpha), as_rational(beta),
            self.coefficients, self.constraints, self.candidates, self.data,
        )


def _scalar(n: int, c) -> MatPoly:
    return MatPoly.scalar(n, c)


def p4_0(h: MatPoly, gamma1, gamma2) -> DeformationFamily:
    n = h.rows
    coefs = {"b1": h, "b5": _scalar(n, gamma1), "c2": -h, "c5": _scalar(n, gamma2)}
    return DeformationFamily("P4_0", n, Fraction(-1), Fraction(-1), coefs, (), (1, 2, 3),
                             {"h": h, "gamma1": as_rational(gamma1), "gamma2": as_rational(gamma2)})


def p4_1(h: MatPoly, gamma, h_v: MatPoly | None = None) -> DeformationFamily:
    """``h_v`` replaces h in the second equation (negative controls only)."""
    n = h.rows
    hv = h if h_v is None else h_v
    coefs = {"b5": h, "c5": hv + _scalar(n, gamma)}
    return DeformationFamily("P4_1", n, Fraction(0), Fraction(-2), coefs, (), (1, 2, 3),
                             {"h": h, "gamma": as_rational(gamma)})


def p4_2(h1: MatPoly, h2: MatPoly, gamma) -> DeformationFamily:
    n = h1.rows
    coefs = {"b5": h2, "c3": h1, "c5": h2 * 2 + _scalar(n, gamma)}
    cons = (("[h2,h1] = -2 h1", commutator(h2, h1), h1 * -2),)
    return DeformationFamily("P4_2", n, Fraction(0), Fraction(-3), coefs, cons, (1, 3, "nc"),
                             {"h1": h1, "h2": h2, "gamma": as_rational(gamma)})


def default_p4_2_data(n: int) -> tuple[MatPoly, MatPoly]:
    """h2 = diag(1, -1, 0, ...), h1 = E21."""
    if n < 2:
        raise ValueError("the default P4_2 data needs n >= 2")
    h2 = MatPoly.diag([1, -1] + [0] * (n - 2))
    h1 = MatPoly.unit(n, 1, 0)
    return h1, h2


def default_family(fid: str, n: int, seed: int = 0) -> DeformationFamily:
    rng = random.Random(f"{fid}:{n}:{seed}")
    g = lambda: Fraction(rng.randint(-5, 5), rng.randint(1, 3))
    if fid == "P4_0":
        return p4_0(random_matrix(rng, n), g(), g())
    if fid == "P4_1":
        return p4_1(random_matrix(rng, n), g())
    if fid == "P4_2":
        h1, h2 = default_p4_2_data(n)
        return p4_2(h1, h2, g())
    raise ValueError(f"unknown family {fid!r}")


@dataclass
class CandidateResult:
    candidate: object
    verdict: MaximalityVerdict
    obstructions: list
    residual_ok: bool | None

    def as_dict(self) -> dict:
        return {
            "candidate": str(self.candidate),
            **self.verdict.as_dict(),
            "obstructions": [[k, texts] for k, texts in self.obstructions],
            "residual_ok": self.residual_ok,
        }


@dataclass
class FamilyReport:
    family: str
    n: int
    point: tuple[Fraction, Fraction]
    candidates: list[CandidateResult]

    @property
    def passed(self) -> bool:
        return bool(self.candidates) and all(
            c.verdict.maximal and c.residual_ok is not False for c in self.candidates
        )

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "point": [str(self.point[0]), str(self.point[1])],
            "passed": self.passed,
            "candidates": [c.as_dict() for c in self.candidates],
        }


def _candidate_pair(cand, fam: DeformationFamily) -> ResiduePair:
    if cand == "nc":
        return noncommuting_residues(fam.alpha, fam.beta, ResidueShape.noncommuting(1, 0, 0, 0, fam.n - 2))
    return type_residues(cand, fam.n)


def verify_deformation(family: DeformationFamily, n: int | None = None, check_residual: bool = True) -> FamilyReport:
    """Expand every candidate of ``family`` and report maximality."""
    if n is not None and n != family.n:
        raise ValueError("family instantiated for a different n")
    family.check_constraints()
    sys = family.system()
    results = []
    for cand in family.candidates:
        pair = _candidate_pair(cand, family)
        L = build_L(pair, sys.alpha, sys.beta)
        res = resonances(L)
        ser = expand_series(sys, pair, N=(max(res) if res else 0) + 1, L=L)
        verdict = maximality(ser)
        ok = residual_check(sys, ser) if check_residual and ser.obstruction_free else None
        results.append(CandidateResult(cand, verdict, ser.obstruction_texts(), ok))
    return FamilyReport(family.id, family.n, (family.alpha, family.beta), results)


# ---------------------------------------------------------------------------
# parametric resonance conditions


def parametric_system(n: int, alpha, beta) -> SystemSpec:
    """All ten coefficient matrices with independent symbolic entries ``b1_ij`` etc."""
    coefs = {f"{c}{i}": MatPoly.symbolic(f"{c}{i}", n) for c in "bc" for i in range(1, 6)}
    return SystemSpec.build(n, alpha, beta, **coefs)


def verify_resonance_conditions_parametric(point, n: int = 2, types: Sequence[int] = (1, 2, 3), kmax: int = 2) -> dict[int, list[tuple[int, list[PolyQ]]]]:
    """Obstruction polynomials at orders 0..kmax for fully parametric coefficients."""
    a, b = (as_rational(x) for x in point)
    sys = parametric_system(n, a, b)
    out = {}
    for t in types:
        ser = expand_series(sys, type_residues(t, n), N=kmax)
        out[t] = ser.obstructions
    return out


def _assign(mapping: dict, name: str, value: MatPoly) -> None:
    n = value.rows
    for i in range(n):
        for j in range(n):
            mapping[param(f"{name}_{i + 1}{j + 1}")] = value[i, j]


def _sym(name: str, n: int) -> MatPoly:
    return MatPoly.symbolic(name, n)


def _g(label: str) -> PolyQ:
    return PolyQ.var(param(label))


def cond2_substitution(n: int = 2) -> dict[Param, PolyQ]:
    """c1..c5 in terms of b1, b2 and gamma1..gamma5."""
    I = MatPoly.identity(n)
    b1, b2 = _sym("b1", n), _sym("b2", n)
    g1, g2, g3, g4, g5 = (_g(f"gamma{i}") for i in range(1, 6))
    m: dict[Param, PolyQ] = {}
    _assign(m, "c1", -b2 + I * g1)
    _assign(m, "c2", -b1 + I * g2)
    _assign(m, "c3", I * g3)
    _assign(m, "c4", I * (g3 + g4))
    _assign(m, "c5", (b1 + b2) * (-(g3 + g4 * Fraction(1, 2))) + I * g5)
    return m


def cond3_substitution(n: int = 2) -> dict[Param, PolyQ]:
    """b3, b4, b5 in terms of b1, b2 and delta3..delta5."""
    I = MatPoly.identity(n)
    b1, b2 = _sym("b1", n), _sym("b2", n)
    d3, d4, d5 = (_g(f"delta{i}") for i in (3, 4, 5))
    m: dict[Param, PolyQ] = {}
    _assign(m, "b3", I * d3)
    _assign(m, "b4", I * (d3 + d4))
    _assign(m, "b5", (b1 + b2) * (d3 + d4 * Fraction(1, 2)) + I * d5)
    return m


def commuting_b_substitution(n: int = 2) -> dict[Param, PolyQ]:
    """b2 = s b1 + t I, a family of matrices commuting with b1."""
    m: dict[Param, PolyQ] = {}
    _assign(m, "b2", _sym("b1", n) * _g("s") + MatPoly.identity(n) * _g("t"))
    return m


def cond231_substitution() -> dict[Param, PolyQ]:
    return {
        param("gamma2"): -_g("gamma1"),
        param("gamma4"): _g("gamma3") * -2,
        param("delta4"): _g("delta3") * -2,
    }


def substitute_obstructions(obs: dict, *mappings: dict) -> dict[int, list[tuple[int, list[PolyQ]]]]:
    """Apply substitutions in order; returns only the nonzero obstruction entries."""
    out = {}
    for t, lst in obs.items():
        new = []
        for k, polys in lst:
            vals = polys
            for m in mappings:
                vals = [p.substitute_all(m) for p in vals]
            vals = [v for v in vals if not v.is_zero()]
            if vals:
                new.append((k, vals))
        out[t] = new
    return out
