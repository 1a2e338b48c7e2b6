import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from strategies import af_params
from twospin import oracle
from twospin.core import Graph, InfeasibleError, SpinParams, complete_graph, to_float, working_precision
from twospin.decompose import composite_statistics, decomposed_evaluate, phase_statistics
from twospin.gadgets import Merge, eval_gadget, example_pair
from twospin.reduction import (abc_functions, approximation_factor, build_reduction,
                               complete_bipartite_gadget, enumerate_phase_gadgets,
                               k_for_factor, maxcut_extract, measure_phase_gadget,
                               path_matrix, path_weights, phase_gadget_problems,
                               predicted_magnetization_envelope, reduction_problems,
                               validate_reduction)

HC3 = SpinParams.hardcore(1, delta=3)
K2 = Graph(2, ((0, 1),))
q_values = st.fractions(min_value=Fraction(1, 50), max_value=Fraction(49, 50), max_denominator=50)


def enumerated_path_matrix(x, params):
    A = [[params.beta, 1], [1, params.gamma]]
    L = [[0, 0], [0, 0]]
    for a, c, s1, s2 in itertools.product((0, 1), repeat=4):
        L[a][c] += A[a][s1] * x ** s1 * A[s1][s2] * x ** s2 * A[s2][c]
    return L


@given(af_params(), st.fractions(min_value=0, max_value=20, max_denominator=30))
def test_path_matrix_by_enumeration(params, x):
    assert path_matrix(x, params) == enumerated_path_matrix(x, params)


@given(af_params(), q_values, q_values, st.fractions(min_value=0, max_value=20, max_denominator=30))
def test_determinant_identity(params, qp, qm, x):
    fpp, fpm, fmp, fmm = path_weights(x, params, qp, qm)
    b, g = params.beta, params.gamma
    assert fpm * fmp - fpp * fmm == (1 - b * g) ** 3 * x * x * (qp - qm) ** 2


@given(af_params(), q_values, q_values)
def test_A_at_zero_is_one(params, qp, qm):
    if qp == qm:
        return
    if params.beta == 0:
        with pytest.raises(InfeasibleError):
            abc_functions(params, qp, qm, 0)
    else:
        assert abc_functions(params, qp, qm, 0)[0] == 1


@pytest.mark.parametrize("R", ["0.2", "2/3", "3"])
def test_B_and_C_are_log_derivatives(R):
    p = SpinParams(Fraction(1, 3), Fraction(1, 5), Fraction(3, 2), precision=160)
    qp, qm = Fraction(7, 10), Fraction(1, 10)
    with working_precision(160):
        R = mpf(Fraction(R).numerator) / Fraction(R).denominator
        h = mpf("1e-12")
        A, B, C, D = abc_functions(p, qp, qm, R)

        def logs(r):
            fpp, fpm, fmp, fmm = path_weights(mpf(3) / 2 * r, p.floated(), qp, qm)
            return mp.log(fpm * fmp), mp.log(fpp * fmm)

        up, dn = logs(R + h), logs(R - h)
        assert abs((up[0] - dn[0]) / (2 * h) - B) < mpf("1e-18")
        assert abs((up[1] - dn[1]) / (2 * h) - C) < mpf("1e-18")
        assert D == B - C and A > 1


@given(st.integers(1, 4), st.integers(1, 20), q_values, q_values,
       st.fractions(min_value=-5, max_value=5), st.fractions(min_value=Fraction(1, 10), max_value=5))
def test_maxcut_extract_inverts_the_model(k, E, m1, m2, c, d):
    # D_hat built from the model formula must give the cut back exactly
    if m1 == m2:
        return
    cut = Fraction(E, 3)
    a1, a2 = Fraction(1, 7), Fraction(2, 9)
    D_hat = 4 * k * (a1 - a2) * E + k * (m1 - m2) * (d * cut + c * E)
    assert maxcut_extract(D_hat, m1, m2, a1, a2, c, d, k, E) == cut


def test_maxcut_extract_rejects_degenerate():
    with pytest.raises(InfeasibleError):
        maxcut_extract(1, Fraction(1, 2), Fraction(1, 2), 0, 0, 1, 1, 1, 1)


def test_factor_and_k():
    A = Fraction(11, 10)
    k = k_for_factor(A, Fraction(11, 10))
    assert approximation_factor(A, k) <= 1.1 + 1e-12
    assert approximation_factor(A, k - 1) > 1.1 or k - 1 < 10 / 0.0953


def test_complete_bipartite_gadget():
    spec = complete_bipartite_gadget(4, 2)
    assert phase_gadget_problems(spec) == []
    assert spec.ell == 2 and spec.ports == (0, 1, 4, 5)
    assert len(spec.graph.edges) == 16 - 2


def test_enumerated_gadgets_are_valid_and_distinct():
    import networkx as nx
    specs = enumerate_phase_gadgets(3, 1, 4)
    assert specs
    graphs = []
    for s in specs:
        assert phase_gadget_problems(s) == []
        g = nx.Graph(list(s.graph.edges))
        for v in range(s.graph.n):
            g.add_node(v, kind=("+" if v < s.n else "-") + ("p" if v in s.ports else ""))
        graphs.append(g)
    for a, b in itertools.combinations(graphs, 2):
        assert not nx.is_isomorphic(a, b, node_match=lambda x, y: x["kind"] == y["kind"])


def test_measured_epsilon_bounds_port_marginals():
    p = SpinParams.hardcore(1, delta=6)
    spec = measure_phase_gadget(complete_bipartite_gadget(6, 3), p)
    with p.context():
        eps = spec.epsilon_measured
        assert spec.q_plus > spec.q_minus and eps >= 0
        dist, _ = phase_statistics(spec, p)
        assert abs(2 * to_float(dist["+"]) - 1) <= eps
        assert dist["+"] + dist["-"] == 1


def test_reduction_structure_k4():
    G = complete_bipartite_gadget(3, 3)
    T = example_pair()[1]
    rg = build_reduction(complete_graph(4), G, T, 1)
    assert reduction_problems(rg, 3) == []
    assert rg.graph.n == 8 * 3 + 4 * 6 * T.size
    assert len(rg.paths) == 2 * 6
    validate_reduction(rg, 3)


def test_reduction_k2_blocks_of_two():
    G = complete_bipartite_gadget(4, 2)
    rg = build_reduction(K2, G, Merge([]), 2, degree=1)
    assert reduction_problems(rg, 4) == []
    assert len(rg.paths) == 4


def test_reduction_rejects_bad_inputs():
    G = complete_bipartite_gadget(3, 3)
    with pytest.raises(InfeasibleError):
        build_reduction(K2, G, Merge([]), 1)  # K2 is not 3-regular
    with pytest.raises(InfeasibleError):
        build_reduction(complete_graph(4), complete_bipartite_gadget(3, 1), Merge([]), 1)
    rg = build_reduction(complete_graph(4), G, Merge([Merge([]), Merge([]), Merge([])]), 1)
    assert any("degree" in s for s in reduction_problems(rg, 3))


@pytest.fixture(scope="module")
def small_composite():
    return build_reduction(K2, complete_bipartite_gadget(3, 1), Merge([]), 1, degree=1)


def test_decomposition_matches_enumeration(small_composite):
    rg = small_composite
    assert rg.graph.n == 20
    assert decomposed_evaluate(rg, HC3, "Z") == oracle.partition_function(rg.graph, HC3)
    assert decomposed_evaluate(rg, HC3, "magnetization") == oracle.magnetization(rg.graph, HC3)
    marg = oracle.marginals(rg.graph, HC3)
    for v in range(rg.graph.n):
        assert decomposed_evaluate(rg, HC3, ("marginal", v)) == marg[v]


def test_decomposition_matches_enumeration_soft_spins():
    p = SpinParams(Fraction(1, 2), Fraction(1, 5), Fraction(4, 3))
    rg = build_reduction(K2, complete_bipartite_gadget(3, 1), Merge([Merge([])]), 1, degree=1)
    assert rg.graph.n == 24
    assert decomposed_evaluate(rg, p, "Z") == oracle.partition_function(rg.graph, p)
    assert decomposed_evaluate(rg, p, "magnetization") == oracle.magnetization(rg.graph, p)


def test_phase_distribution_sums_to_one(small_composite):
    dist, avg = phase_statistics(small_composite, HC3)
    assert sorted(dist) == ["++", "+-", "-+", "--"]
    assert sum(dist.values()) == 1
    assert avg == dist["+-"] + dist["-+"]


def test_equal_fields_give_equal_hat_marginals():
    t1, t2 = example_pair()
    G = complete_bipartite_gadget(3, 1)
    stats = [composite_statistics(build_reduction(K2, G, t, 1, degree=1), HC3) for t in (t1, t2)]
    assert stats[0].hat_marginals == stats[1].hat_marginals
    assert stats[0].avg_cut == stats[1].avg_cut
    # the field-gadget parts differ, so the magnetizations do too
    assert stats[0].magnetization != stats[1].magnetization


def test_envelope_contains_field_gadget_part():
    p = SpinParams.hardcore(1, delta=6)
    G = measure_phase_gadget(complete_bipartite_gadget(6, 3), p)
    H = complete_graph(4)
    T = example_pair()[0]
    st_ = composite_statistics(build_reduction(H, G, T, 1), p)
    with p.context():
        env = predicted_magnetization_envelope(H, G, eval_gadget(T, p), 1, G.epsilon_measured,
                                               (st_.avg_cut, st_.avg_cut), p)
        assert to_float(st_.magnetization - st_.hat_magnetization) in env
        assert env.regime["epsilon_below_tenth"] is False
