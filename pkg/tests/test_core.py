from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mpf

from twospin.core import (Graph, InfeasibleError, ParseError, SpinParams,
                          complete_graph, cycle_graph, edge_counts,
                          format_scalar, parse_scalar, path_graph, weight,
                          working_precision)


@pytest.mark.parametrize("text, value", [
    ("2/3", Fraction(2, 3)), ("5", Fraction(5)), ("1e-6", Fraction(1, 10 ** 6)),
    (" 0.25 ", Fraction(1, 4)),
])
def test_parse_exact(text, value):
    got = parse_scalar(text)
    assert got == value and isinstance(got, Fraction)


def test_parse_tagged_float():
    x = parse_scalar("0.1@128")
    assert isinstance(x, mpf)
    with working_precision(128):
        assert abs(x - mpf(1) / 10) < mpf(2) ** -120


@pytest.mark.parametrize("bad", ["", "a/b", "1/0", "0.1@8"])
def test_parse_rejects(bad):
    with pytest.raises(ParseError):
        parse_scalar(bad)


@given(st.fractions())
def test_format_roundtrip(x):
    assert parse_scalar(format_scalar(x)) == x


def test_format_float_is_tagged():
    with working_precision(64):
        s = format_scalar(mpf(1) / 3)
    assert s.endswith("@64")
    with working_precision(64):
        assert abs(parse_scalar(s) - mpf(1) / 3) < mpf(2) ** -60


@pytest.mark.parametrize("b, g, lam", [(1, 1, 1), (0, 0, 1), (-1, 0, 1), (1, 0, 0), (2, 1, 1)])
def test_params_reject_non_af(b, g, lam):
    with pytest.raises(InfeasibleError):
        SpinParams(b, g, lam)


def test_params_flags():
    hc = SpinParams.hardcore(1)
    assert hc.is_hardcore and hc.exact and not hc.is_trivial_ising
    assert SpinParams(Fraction(1, 2), Fraction(1, 2), 1).is_trivial_ising
    tri = SpinParams(Fraction(1, 2), Fraction(1, 4), Fraction(2, 3))
    assert tri.triangle_admissible()
    assert not tri.with_lambda(1).triangle_admissible()
    assert not hc.floated().exact


def test_graph_basics():
    g = Graph(4, ((2, 1), (0, 1)))
    assert g.edges == ((0, 1), (1, 2))
    assert g.degree(1) == 2 and g.max_degree() == 2
    assert Graph.from_json(g.to_json()) == g
    assert [sorted(c) for c in g.components()] == [[0, 1, 2], [3]]


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 5),), ((0, 1), (1, 0))])
def test_graph_rejects(edges):
    with pytest.raises((InfeasibleError, ParseError)):
        Graph(3, edges)


def test_builders():
    assert len(complete_graph(5).edges) == 10
    assert len(path_graph(5).edges) == 4
    assert len(cycle_graph(5).edges) == 5


def test_weight_counts_edges_and_fields():
    g = path_graph(3)
    p = SpinParams(Fraction(1, 2), Fraction(1, 3), 2)
    # config 1,1,0: one 1-1 edge, no 0-0 edge, field 2 twice
    assert edge_counts(g, (1, 1, 0)) == (0, 1)
    assert weight(g, p, (1, 1, 0)) == Fraction(1, 3) * 4
    assert weight(g, p, (0, 0, 0)) == Fraction(1, 4)
