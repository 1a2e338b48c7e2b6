from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from twospin.core import InfeasibleError, SpinParams
from twospin.fixpoints import (Verdict, hardcore_lambda_c, in_nonuniqueness,
                               in_star_region, ising_beta_c, ode_fixpoint,
                               tree_map, two_cycle_fixpoints,
                               uniqueness_fixpoint)

degrees = st.integers(3, 12)


def test_lambda_c_value():
    assert hardcore_lambda_c(6) == Fraction(3125, 4096)
    assert hardcore_lambda_c(3) == 4


@given(degrees)
def test_lambda_c_is_where_derivative_hits_one(d):
    # independent check: |f'(x*)| = 1 exactly at the formula's lambda
    p = SpinParams(1, 0, hardcore_lambda_c(d), d, 256)
    with p.context():
        assert abs(uniqueness_fixpoint(p).derivative_abs - 1) < mpf(2) ** -100


@given(degrees)
def test_beta_c_is_where_derivative_hits_one(d):
    b = ising_beta_c(d)
    p = SpinParams(b, b, 1, d, 256)
    with p.context():
        res = uniqueness_fixpoint(p)
        assert abs(res.x_star - 1) < mpf(2) ** -200
        assert abs(res.derivative_abs - 1) < mpf(2) ** -100


@pytest.mark.parametrize("d", [3, 5, 6, 9])
def test_verdict_flips_across_lambda_c(d):
    lc = hardcore_lambda_c(d)
    eps = Fraction(1, 10 ** 6)
    assert in_nonuniqueness(SpinParams(1, 0, lc - eps, d)) is Verdict.NO
    assert in_nonuniqueness(SpinParams(1, 0, lc + eps, d)) is Verdict.YES
    assert in_nonuniqueness(SpinParams(1, 0, lc, d)) is Verdict.UNDECIDED


def test_delta_required():
    with pytest.raises(InfeasibleError):
        uniqueness_fixpoint(SpinParams(1, 0, 1))


def test_star_region_excludes_trivial_point():
    assert not in_star_region(SpinParams(Fraction(1, 10), Fraction(1, 10), 1, 6))
    assert in_star_region(SpinParams(1, 0, 1, 6))


@given(st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=20), degrees)
def test_tree_fixpoint_property(lam, d):
    p = SpinParams(1, 0, lam, d, 128)
    with p.context():
        f, _ = tree_map(p)
        x = uniqueness_fixpoint(p).x_star
        assert abs(f(x) - x) < mpf(2) ** -100 * max(1, x)


@given(st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=20),
       st.fractions(min_value=0, max_value=Fraction(9, 10), max_denominator=20))
def test_merge_fixpoint_property(lam, g):
    p = SpinParams(1, g, lam, precision=128)
    with p.context():
        x, w = ode_fixpoint(p)
        gf, lf = mpf(g.numerator) / g.denominator, mpf(lam.numerator) / lam.denominator
        assert abs((1 + gf * lf * x * x) / (1 + lf * x * x) - x) < mpf(2) ** -100
        assert 0 < w < 1


def test_merge_fixpoint_exact_on_triangle_line():
    p = SpinParams(Fraction(1, 2), Fraction(1, 4), Fraction(2, 3))
    assert ode_fixpoint(p)[0] == 1


@pytest.mark.parametrize("lam, d", [(1, 6), (2, 5), (Fraction(1, 1) + Fraction(1, 100), 6), (50, 3)])
def test_two_cycle(lam, d):
    p = SpinParams(1, 0, lam, d, 256)
    cyc = two_cycle_fixpoints(p)
    with p.context():
        f, _ = tree_map(p)
        assert cyc.x < uniqueness_fixpoint(p).x_star < cyc.y
        assert abs(f(cyc.x) - cyc.y) <= mpf(2) ** -128
        assert abs(f(cyc.y) - cyc.x) <= mpf(2) ** -128
        assert cyc.q_plus == cyc.y / (1 + cyc.y) and cyc.q_plus > cyc.q_minus


def test_two_cycle_against_newton():
    # independent solve of x = f(y), y = f(x) for hard-core, delta = 6
    p = SpinParams(1, 0, 1, 6, 128)
    cyc = two_cycle_fixpoints(p)
    with p.context():
        f = lambda x: 1 / (1 + x) ** 5
        x, y = mp.findroot([lambda x, y: x - f(y), lambda x, y: y - f(x)], (mpf("0.05"), mpf("0.7")))
        assert abs(cyc.x - x) < mpf(2) ** -100 and abs(cyc.y - y) < mpf(2) ** -100


def test_two_cycle_needs_nonuniqueness():
    with pytest.raises(InfeasibleError):
        two_cycle_fixpoints(SpinParams(1, 0, Fraction(1, 2), 6))
