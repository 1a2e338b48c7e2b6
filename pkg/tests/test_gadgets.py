from fractions import Fraction

import pytest
from hypothesis import given
from mpmath import mpf

from strategies import af_params, gadgets, triangle_params
from twospin.core import InfeasibleError, ParseError, SpinParams, working_precision
from twospin.gadgets import (DEGENERATE, TRIANGLE, Evaluator, Merge,
                             eval_gadget, eval_gadget_oracle, eval_R_of_lambda,
                             example_pair, expr_from_json, expr_to_json,
                             materialize, omega, path_gadget, phi)

HC = SpinParams.hardcore(1)


def test_example_pair_values():
    t1, t2 = example_pair()
    a, b = eval_gadget(t1, HC), eval_gadget(t2, HC)
    assert (a.R, a.M) == (Fraction(2, 3), Fraction(5, 6))
    assert (b.R, b.M) == (Fraction(2, 3), Fraction(3, 4))
    assert (t1.size, t2.size) == (3, 8)


def test_edge_by_hand():
    # root-child edge, hard-core lambda: Zin = lam, Zout = 1 + lam
    lam = Fraction(3, 2)
    ev = eval_gadget(Merge([]), SpinParams.hardcore(lam))
    assert ev.Zin == lam and ev.Zout == 1 + lam
    assert ev.R == 1 / (1 + lam)
    assert ev.M == 1 - lam / (1 + lam)


def test_degenerate():
    ev = eval_gadget(DEGENERATE, HC)
    assert (ev.R, ev.M, ev.size) == (1, 1, 1)


def test_interning():
    assert Merge([Merge([])]) is Merge([Merge([])])
    with pytest.raises(AttributeError):
        Merge([]).children = ()


@given(gadgets(), af_params())
def test_recursion_matches_enumeration(expr, params):
    a, b = eval_gadget(expr, params), eval_gadget_oracle(expr, params)
    assert (a.R, a.M, a.Zin, a.Zout, a.e_in, a.e_out) == (b.R, b.M, b.Zin, b.Zout, b.e_in, b.e_out)


@given(gadgets(triangle=True), triangle_params())
def test_triangle_matches_enumeration(expr, params):
    a, b = eval_gadget(expr, params), eval_gadget_oracle(expr, params)
    assert (a.R, a.M) == (b.R, b.M)


@given(gadgets(), af_params())
def test_field_and_contraction_ranges(expr, params):
    R = eval_gadget(expr, params).R
    assert params.gamma < R
    assert params.beta == 0 or R < 1 / params.beta
    assert 0 < omega(R, params) < 1


@given(gadgets(), af_params())
def test_merge_field_is_phi_of_product(expr, params):
    ev = Evaluator(params)
    P = 1
    for c in expr.children:
        P *= ev(c).R
    assert ev(expr).R == phi(P, params)


@given(gadgets(), af_params())
def test_magnetization_recursion(expr, params):
    ev = Evaluator(params)
    R = ev(expr).R
    inner = 1 + sum(ev(c).M - 1 for c in expr.children)
    assert ev(expr).M == 1 - omega(R, params) * inner


@given(gadgets(triangle=True))
def test_json_roundtrip(expr):
    assert expr_from_json(expr_to_json(expr)) is expr


def test_json_dag_for_deep_sharing():
    e = Merge([])
    for _ in range(200):
        e = Merge([e, e])
    data = expr_to_json(e)
    assert "dag" in data and len(data["dag"]) == 201
    assert expr_from_json(data) is e
    assert e.size == 2 ** 201


@pytest.mark.parametrize("bad", [{"t": "nope"}, {"dag": []}, {"dag": [{"t": "merge", "c": [0]}]}, {}])
def test_json_rejects(bad):
    with pytest.raises(ParseError):
        expr_from_json(bad)


@given(gadgets(triangle=True))
def test_materialize_size(expr):
    g, root = materialize(expr)
    assert root == 0 and g.n == expr.size
    assert g.max_degree() == expr.max_degree
    # trees have n - 1 edges, each triangle adds one cycle edge
    tri = sum(1 for u, v in g.edges) - (g.n - 1)
    assert tri >= 0 and (tri > 0) == expr.has_triangle


def test_path_gadget():
    assert path_gadget(0) is DEGENERATE
    assert path_gadget(3).size == 4 and path_gadget(3).max_degree == 2


def test_admissibility_checks():
    with pytest.raises(InfeasibleError):
        eval_gadget(TRIANGLE, HC)
    star = Merge([Merge([]), Merge([]), Merge([])])
    with pytest.raises(InfeasibleError):
        eval_gadget(star, SpinParams(1, 0, 1, 3))
    assert eval_gadget(star, SpinParams(1, 0, 1, 4)).R > 0


def test_triangle_field_off_one():
    p = SpinParams(Fraction(1, 2), Fraction(1, 4), Fraction(2, 3))
    R = eval_gadget(TRIANGLE, p).R
    assert R != 1 and p.gamma < R < 1 / p.beta
    # every tree gadget sits at field 1 here
    assert eval_gadget(Merge([Merge([])]), p).R == 1


def test_float_agrees_with_exact():
    t2 = example_pair()[1]
    fl = eval_gadget(t2, HC.floated())
    with working_precision(256):
        assert abs(fl.R - mpf(2) / 3) < mpf(2) ** -250
        assert abs(fl.M - mpf(3) / 4) < mpf(2) ** -250


@pytest.mark.parametrize("which", [0, 1])
def test_lambda_derivative_by_finite_difference(which):
    expr = example_pair()[which]
    with working_precision(256):
        lam = mpf("1.3")
        h = mpf("1e-20")
        _, d = eval_R_of_lambda(expr, 1, 0, lam, precision=256)
        up = eval_R_of_lambda(expr, 1, 0, lam + h, precision=256)[0]
        dn = eval_R_of_lambda(expr, 1, 0, lam - h, precision=256)[0]
        assert abs((up - dn) / (2 * h) - d) < mpf("1e-30")


def test_lambda_derivative_exact():
    R, d = eval_R_of_lambda(example_pair()[0], 1, 0, 1)
    assert R == Fraction(2, 3) and d == R * (Fraction(5, 6) - 1)


def test_trivial_ising_gap_is_not_zero():
    # beta = gamma = 1/2, lambda = 1, one edge. Given the root is 1 the child is 1
    # with prob gamma/(1+gamma) = 1/3; given 0, with prob 1/(1+beta) = 2/3.
    # So R = 1 but M = (1 + 1/3) - 2/3 = 2/3.
    ev = eval_gadget(Merge([]), SpinParams(Fraction(1, 2), Fraction(1, 2), 1))
    assert ev.R == 1 and ev.M == Fraction(2, 3)
