from fractions import Fraction

from hypothesis import assume
from hypothesis import strategies as st

from twospin.core import SpinParams
from twospin.gadgets import TRIANGLE, Merge

small_rationals = st.fractions(min_value=0, max_value=6, max_denominator=12)
positive_rationals = st.fractions(min_value=Fraction(1, 12), max_value=6, max_denominator=12)
unit_open = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=20)


below_one = st.fractions(min_value=0, max_value=Fraction(11, 12), max_denominator=12)


@st.composite
def af_params(draw):
    """beta*gamma < 1 by construction: gamma = u / beta with u < 1."""
    b = draw(small_rationals)
    g = draw(small_rationals) if b == 0 else draw(below_one) / b
    if b == 0 and g == 0:
        g = Fraction(1)
    return SpinParams(b, g, draw(positive_rationals))


@st.composite
def triangle_params(draw):
    b, g = draw(unit_open), draw(unit_open)
    assume(b != g)
    return SpinParams(b, g, (1 - b) / (1 - g))


def gadgets(max_leaves=5, triangle=False):
    leaf = st.just(Merge([]))
    if triangle:
        leaf = st.one_of(leaf, st.just(TRIANGLE))
    return st.recursive(
        leaf,
        lambda kids: st.lists(kids, min_size=1, max_size=3).map(Merge),
        max_leaves=max_leaves,
    ).filter(lambda e: e.size <= 14)
