"""Hypothesis strategies shared by the test modules."""
from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from kovalevskaya.exact import MatPoly, PolyQ, param

NAMES = ("a", "b", "c")

rationals = st.builds(
    Fraction,
    st.integers(min_value=-9, max_value=9),
    st.integers(min_value=1, max_value=5),
)

monomials = st.dictionaries(st.sampled_from(NAMES), st.integers(min_value=1, max_value=3), max_size=3)


@st.composite
def polys(draw, max_terms: int = 4) -> PolyQ:
    out = PolyQ.zero()
    for _ in range(draw(st.integers(min_value=0, max_value=max_terms))):
        term = PolyQ.const(draw(rationals))
        for name, e in draw(monomials).items():
            term = term * PolyQ.var(param(name), e)
        out = out + term
    return out


@st.composite
def matrices(draw, n: int = 2, max_terms: int = 2) -> MatPoly:
    return MatPoly(n, n, [draw(polys(max_terms)) for _ in range(n * n)])


@st.composite
def qmatrices(draw, max_rows: int = 5, max_cols: int = 5):
    r = draw(st.integers(min_value=1, max_value=max_rows))
    c = draw(st.integers(min_value=1, max_value=max_cols))
    small = st.builds(Fraction, st.integers(min_value=-3, max_value=3), st.integers(min_value=1, max_value=2))
    entries = st.one_of(st.just(Fraction(0)), small)
    return [[draw(entries) for _ in range(c)] for _ in range(r)]
