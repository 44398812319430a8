"""Second-order reduction, epsilon-degenerations to matrix P2 and the P34 form.

Identities between rational matrix expressions are checked on random exact
jets (values of y, y' and the independent variable); in the scalar case the
reduction is also proved symbolically.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .exact import EPS, MatPoly, PolyQ, as_rational, commutator, param
from .linalg import QMatrix, SingularMatrix, inverse
from .system import SystemSpec

__all__ = [
    "SingularSample",
    "ReductionPreconditionFailed",
    "JetSampler",
    "ReductionCoefficients",
    "reduce_second_order_check",
    "reduce_second_order_symbolic_scalar",
    "P2Target",
    "DegenerationResult",
    "degenerate_system",
    "degenerate_to_p2",
    "degenerate_scalar",
    "tail_family",
    "p2_system_to_equation",
    "p2_equation_check",
    "p34_check",
]


class SingularSample(ValueError):
    pass


class ReductionPreconditionFailed(ValueError):
    """The system is outside the family where v can be eliminated as coded."""


# ---------------------------------------------------------------------------
# jets


def _to_q(m: MatPoly) -> QMatrix:
    return QMatrix([[x.as_rational() for x in row] for row in m.row_lists()], m.cols)


def _from_q(q: QMatrix) -> MatPoly:
    return MatPoly.from_rows(q.tolist())


def mat_inverse(m: MatPoly) -> MatPoly:
    try:
        return _from_q(inverse(_to_q(m)))
    except SingularMatrix as exc:
        raise SingularSample(str(exc)) from None


class JetSampler:
    """Small random rationals: |numerator| <= 20, denominator <= 7."""

    def __init__(self, seed: int | str = 0, max_resample: int = 100):
        self.rng = random.Random(seed)
        self.max_resample = max_resample

    def rational(self) -> Fraction:
        return Fraction(self.rng.randint(-20, 20), self.rng.randint(1, 7))

    def matrix(self, n: int) -> MatPoly:
        return MatPoly.from_rows([[self.rational() for _ in range(n)] for _ in range(n)])

    def invertible(self, n: int) -> tuple[MatPoly, MatPoly]:
        """A random matrix together with its exact inverse."""
        for _ in range(self.max_resample):
            m = self.matrix(n)
            try:
                return m, mat_inverse(m)
            except SingularSample:
                continue
        raise SingularSample("no invertible sample found")


# ---------------------------------------------------------------------------
# reduction to a second-order equation


@dataclass(frozen=True)
class ReductionCoefficients:
    kappa: Fraction
    k1: MatPoly
    k2: MatPoly
    k3: MatPoly
    k4: MatPoly
    k5: MatPoly

    @classmethod
    def from_system(cls, sys: SystemSpec) -> "ReductionCoefficients":
        b5 = sys.b[4]
        c3, c5 = sys.c[2], sys.c[4]
        beta = sys.beta
        n = sys.n
        return cls(
            kappa=beta + Fraction(3, 2),
            k1=b5,
            k2=-b5,
            k3=c3 * 2,
            k4=MatPoly.scalar(n, -2) - b5 * (beta + Fraction(3, 2)),
            k5=c5 * 2 + b5 * (beta + Fraction(1, 2)),
        )

    def rhs(self, y: MatPoly, dy: MatPoly, yinv: MatPoly, z) -> MatPoly:
        """Right-hand side of the second-order equation at one jet."""
        y2 = y @ y
        return (
            ((dy + self.k1) @ yinv @ (dy + self.k2)) * Fraction(1, 2)
            + (y2 @ y) * Fraction(3, 2)
            + commutator(dy, y) * self.kappa
            + y2 * (4 * z)
            + y @ self.k3 @ y
            + self.k4 @ y
            + y @ self.k5
            + y * (2 * z * z)
        )


def _check_reducible(sys: SystemSpec) -> None:
    if sys.homogeneous:
        raise ReductionPreconditionFailed("the reduction needs the inhomogeneous form")
    if sys.alpha != 0:
        raise ReductionPreconditionFailed("the reduction needs alpha = 0")
    need_zero = ("b1", "b2", "b3", "b4", "c1", "c2", "c4")
    bad = [k for k in need_zero if not sys.coefficient(k).is_zero()]
    if bad:
        raise ReductionPreconditionFailed(f"the reduction needs {', '.join(bad)} = 0")


def _second_derivative(sys: SystemSpec, u: MatPoly, du: MatPoly, uinv: MatPoly, z) -> MatPoly:
    """u'' along the system, with v eliminated through the first equation."""
    b5 = sys.b[4]
    v = (uinv @ (du + u @ u + u * (2 * z) - b5)) * Fraction(1, 2)
    _, dv = sys.rhs(u, v, z)
    return -(du @ u) - u @ du + (du @ v) * 2 + (u @ dv) * 2 - u * 2 - du * (2 * z)


def reduce_second_order_check(
    sys: SystemSpec,
    trials: int = 20,
    seed: int | str = 0,
    coefficients: ReductionCoefficients | None = None,
) -> bool:
    """Check u'' = RHS(u, u', z) at ``trials`` random exact jets.

    ``coefficients`` overrides the ones derived from ``sys`` (used to show
    that a wrong kappa or k_i is detected).
    """
    _check_reducible(sys)
    coef = coefficients or ReductionCoefficients.from_system(sys)
    sampler = JetSampler(seed)
    n = sys.n
    for _ in range(trials):
        u, uinv = sampler.invertible(n)
        du = sampler.matrix(n)
        z = PolyQ.const(sampler.rational())
        if _second_derivative(sys, u, du, uinv, z) != coef.rhs(u, du, uinv, z):
            return False
    return True


def _reduce_inverse(p: PolyQ, u_id: int, w_id: int) -> PolyQ:
    """Cancel u*w = 1 in every monomial."""
    out: dict = {}
    for mono, c in p.terms.items():
        exps = dict(mono)
        eu, ew = exps.get(u_id, 0), exps.get(w_id, 0)
        k = min(eu, ew)
        if k:
            exps[u_id] = eu - k
            exps[w_id] = ew - k
        key = tuple(sorted((v, e) for v, e in exps.items() if e))
        out[key] = out.get(key, 0) + c
    return PolyQ._raw({m: c for m, c in out.items() if c})


def reduce_second_order_symbolic_scalar() -> dict[str, bool]:
    """Symbolic proof at n = 1 with free c1, c2.

    Returns whether u'' agrees with the matrix second-order form and with the
    scalar P4 equation under gamma = 1 + c1/2 - c2, delta = -c1^2/2.
    """
    U, U1, W, Z = (PolyQ.var(param(s)) for s in ("u", "du", "w", "z"))
    c1, c2 = PolyQ.var(param("c1")), PolyQ.var(param("c2"))
    sys = SystemSpec.build(1, 0, 0, b5=MatPoly(1, 1, [c1]), c5=MatPoly(1, 1, [c2]))
    u, du, w = (MatPoly(1, 1, [x]) for x in (U, U1, W))
    lhs = _second_derivative(sys, u, du, w, Z)[0, 0]
    rhs = ReductionCoefficients.from_system(sys).rhs(u, du, w, Z)[0, 0]
    gamma = 1 + c1 * Fraction(1, 2) - c2
    delta = c1 * c1 * Fraction(-1, 2)
    p4 = U1 * U1 * W * Fraction(1, 2) + U ** 3 * Fraction(3, 2) + U * U * Z * 4 + U * (Z * Z - gamma) * 2 + delta * W
    uid, wid = param("u").id, param("w").id
    l = _reduce_inverse(lhs, uid, wid)
    return {
        "matrix_form": l == _reduce_inverse(rhs, uid, wid),
        "scalar_p4": l == _reduce_inverse(p4, uid, wid),
    }


# ---------------------------------------------------------------------------
# matrix P2 systems


def p2_system_to_equation(beta, c: list[MatPoly]):
    """(kappa, b1, b2, a) of y'' = kappa [y, y'] + 2y^3 + x y + b1 y + y b2 + a."""
    b = as_rational(beta)
    c1, c2, c3, c4 = c
    n = c1.rows
    return (
        -1 - b,
        c2 + c1 * (2 + b),
        c3 - c1 * b,
        c4 - MatPoly.scalar(n, Fraction(1, 2)),
    )


def p2_equation_check(beta, c: list[MatPoly], trials: int = 20, seed: int | str = 0) -> bool:
    """Jet check that the system with (beta, c) implies the stated P2 equation."""
    b = as_rational(beta)
    c1, c2, c3, c4 = c
    kappa, b1, b2, a = p2_system_to_equation(b, c)
    n = c1.rows
    s = JetSampler(seed)
    for _ in range(trials):
        f, df = s.matrix(n), s.matrix(n)
        x = s.rational()
        g = df + f @ f + MatPoly.scalar(n, x / 2) + c1
        dg = (g @ f) * 2 + commutator(g, f) * b + c2 @ f + f @ c3 + c4
        ddf = -(df @ f) - f @ df + dg - MatPoly.scalar(n, Fraction(1, 2))
        rhs = commutator(f, df) * kappa + f @ f @ f * 2 + f * x + b1 @ f + f @ b2 + a
        if ddf != rhs:
            return False
    return True


def p34_check(a: MatPoly, trials: int = 20, seed: int | str = 0, cubic_coeff=2) -> bool:
    """w = g for f' = -f^2 + g - x/2, g' = 2 f g + a satisfies
    w'' = 1/2 (w' - a) w^-1 (w' + a) + c w^2 - x w  with c = ``cubic_coeff`` (2)."""
    n = a.rows
    s = JetSampler(seed)
    for _ in range(trials):
        w, winv = s.invertible(n)
        dw = s.matrix(n)
        x = s.rational()
        f = ((dw - a) @ winv) * Fraction(1, 2)
        df = -(f @ f) + w - MatPoly.scalar(n, x / 2)
        ddw = (df @ w) * 2 + (f @ dw) * 2
        rhs = ((dw - a) @ winv @ (dw + a)) * Fraction(1, 2) + (w @ w) * as_rational(cubic_coeff) - w * x
        if ddw != rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# degenerations


@dataclass(frozen=True)
class P2Target:
    id: str
    beta: Fraction
    c1: MatPoly
    c2: MatPoly
    c3: MatPoly
    c4: MatPoly
    a: MatPoly | None = None
    b: MatPoly | None = None

    def constraint_ok(self) -> bool:
        if self.id == "P2_2":
            return commutator(self.a, self.b) == self.b * -2
        return True

    def equation(self):
        return p2_system_to_equation(self.beta, [self.c1, self.c2, self.c3, self.c4])


@dataclass
class DegenerationResult:
    family: str
    n: int
    limit_f: MatPoly
    limit_g: MatPoly
    target: P2Target
    target_f: MatPoly
    target_g: MatPoly

    @property
    def match(self) -> bool:
        return self.limit_f == self.target_f and self.limit_g == self.target_g and self.target.constraint_ok()

    def as_dict(self) -> dict:
        kappa, b1, b2, a = self.target.equation()
        return {
            "family": self.family,
            "n": self.n,
            "target": self.target.id,
            "match": self.match,
            "limit_f": self.limit_f.to_text(),
            "limit_g": self.limit_g.to_text(),
            "kappa": str(kappa),
            "b1": b1.to_text(),
            "b2": b2.to_text(),
            "a": a.to_text(),
        }


def _eps() -> PolyQ:
    return PolyQ.var(EPS)


def degenerate_system(sys: SystemSpec, shift_sign: int = -1) -> tuple[MatPoly, MatPoly, MatPoly, MatPoly]:
    """Apply the epsilon change of variables and return (f', g', f, g) before the limit.

    z = eps^-3/4 - eps x, u = -eps^-3/4 - f/eps, v = -2 eps g; b5 is shifted by
    ``shift_sign`` * eps^-6/16 (the sign -1 cancels the eps^-4 term of f').
    """
    n = sys.n
    e = _eps()
    x = PolyQ.var(param("x"))
    f, g = MatPoly.symbolic("f", n), MatPoly.symbolic("g", n)
    I = MatPoly.identity(n)
    z = e ** -3 * Fraction(1, 4) - e * x
    u = I * (e ** -3 * Fraction(-1, 4)) - f * e ** -1
    v = g * (e * -2)
    shifted = sys.with_coefficients(b5=sys.b[4] + I * (e ** -6 * Fraction(shift_sign, 16)))
    du, dv = shifted.rhs(u, v, z)
    # du/dz = eps^-2 f'(x) and dv/dz = 2 g'(x)
    return du * (e * e), dv * Fraction(1, 2), f, g


def _target_rhs(t: P2Target, f: MatPoly, g: MatPoly) -> tuple[MatPoly, MatPoly]:
    n = f.rows
    x = PolyQ.var(param("x"))
    tf = -(f @ f) + g - MatPoly.identity(n) * (x * Fraction(1, 2)) - t.c1
    tg = (g @ f) * 2 + commutator(g, f) * t.beta + t.c2 @ f + f @ t.c3 + t.c4
    return tf, tg


def _default_pair(n: int) -> tuple[MatPoly, MatPoly]:
    """(E21, diag(1, -1, 0, ...)); at n = 1 the nilpotent part is 0."""
    if n == 1:
        return MatPoly.zeros(1), MatPoly.identity(1)
    return MatPoly.unit(n, 1, 0), MatPoly.diag([1, -1] + [0] * (n - 2))


def tail_family(fid: str, n: int, data: dict | None = None, h2_power: int = 4, seed: int | str = 0) -> tuple[SystemSpec, P2Target]:
    """Pre-canonical system with the epsilon-dependent coefficients of the limit and its target."""
    e = _eps()
    I = MatPoly.identity(n)
    Z = MatPoly.zeros(n)
    data = dict(data or {})
    if fid == "P4_0":
        if "b" not in data:
            s = JetSampler(f"b:{n}:{seed}")
            data["b"] = s.matrix(n)
        b = data["b"]
        g1 = as_rational(data.get("gamma1", 1))
        g2 = as_rational(data.get("gamma2", 3))
        b1 = b2 = b * (2 * e)
        sys = SystemSpec.build(n, -1, -1, b1=b1, b2=b2, b5=I * g1, c1=-b2, c2=-b1, c5=I * g2)
        return sys, P2Target("P2_0", Fraction(-1), b, Z, Z, I * (g2 / 2), b=b)
    if fid == "P4_2":
        nil, dg = _default_pair(n)
        b = data.get("b", nil)
        h4 = data.get("h4", dg)
        gamma = as_rational(data.get("gamma", 1))
        h2 = b * (e * Fraction(-4, 3))
        h1 = h3 = h2 * 3
        sys = SystemSpec.build(
            n, 0, -3,
            b1=h2 * -3 + h1, b2=-h1, b3=h2, b5=h4,
            c1=h1, c2=h2 * 3 - h1, c3=h3, c4=h2 * -3,
            c5=h4 * 2 + (h3 @ h2) * Fraction(1, 2) + I * gamma,
        )
        a = h4 + I * (gamma / 2)
        return sys, P2Target("P2_2", Fraction(-3), b, b * 2, b * -2, a, a=a, b=b)
    if fid == "P4_1":
        nil, dg = _default_pair(n)
        h2 = data.get("h2", nil)
        h3 = data.get("h3", dg)
        gamma = as_rational(data.get("gamma", 1))
        h2e = h2 * (e ** h2_power)
        sys = SystemSpec.build(
            n, 0, -2,
            b2=h2e * 2, b3=-h2e, b5=h3 + I * gamma,
            c1=h2e * -2, c4=h2e, c5=h3,
        )
        a = h3 * Fraction(1, 2)
        return sys, P2Target("P2_1", Fraction(-2), Z, Z, Z, a, a=a)
    raise ValueError(f"unknown family {fid!r}")


def degenerate_to_p2(fid: str, n: int, data: dict | None = None, shift_sign: int = -1, h2_power: int = 4, seed: int | str = 0) -> DegenerationResult:
    """Limit eps -> 0 of the transformed family; raises DivergentLimit on surviving poles."""
    sys, target = tail_family(fid, n, data, h2_power, seed)
    df, dg, f, g = degenerate_system(sys, shift_sign)
    lf, lg = df.epsilon_limit(), dg.epsilon_limit()
    tf, tg = _target_rhs(target, f, g)
    return DegenerationResult(fid, n, lf, lg, target, tf, tg)


def degenerate_scalar(theta=1) -> DegenerationResult:
    """Scalar system with c1 = -eps^-6/16, c2 = 2 theta; no extra shift."""
    th = as_rational(theta)
    e = _eps()
    sys = SystemSpec.build(1, 0, 0, b5=MatPoly(1, 1, [e ** -6 * Fraction(-1, 16)]), c5=MatPoly.scalar(1, 2 * th))
    df, dg, f, g = degenerate_system(sys, shift_sign=0)
    Z = MatPoly.zeros(1)
    target = P2Target("P2_scalar", Fraction(0), Z, Z, Z, MatPoly.scalar(1, th))
    tf, tg = _target_rhs(target, f, g)
    return DegenerationResult("scalar", 1, df.epsilon_limit(), dg.epsilon_limit(), target, tf, tg)
