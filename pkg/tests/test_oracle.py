import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import af_params
from twospin import _enumerate_py, _kernel
from twospin.core import Graph, InfeasibleError, SpinParams, complete_graph, cycle_graph, path_graph, weight
from twospin.oracle import (conditional_expectation, magnetization, marginals,
                            partition_function, perturbation_gap)

HC = SpinParams.hardcore(1)


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, tuple(chosen))


def brute_force(g, p):
    """Sum over all 2^n configurations with the plain weight function."""
    configs = [tuple((m >> i) & 1 for i in range(g.n)) for m in range(1 << g.n)]
    ws = [weight(g, p, c) for c in configs]
    Z = sum(ws)
    mag = sum(w * sum(c) for w, c in zip(ws, configs)) / Z
    marg = [sum(w for w, c in zip(ws, configs) if c[v]) / Z for v in range(g.n)]
    return Z, mag, marg


def test_k4_hardcore():
    assert partition_function(complete_graph(4), HC) == 5


def test_independent_sets_of_paths_are_fibonacci():
    fib = [1, 2]
    for _ in range(12):
        fib.append(fib[-1] + fib[-2])
    for n in range(1, 12):
        assert partition_function(path_graph(n), HC) == fib[n]


def test_ising_cycle_transfer_matrix():
    # Z(C_n) = trace(T^n) with T[s][t] = A[s][t] * lam^t
    b, g, lam = Fraction(1, 2), Fraction(1, 3), Fraction(2)
    p = SpinParams(b, g, lam)
    T = [[b, lam], [1, g * lam]]
    for n in range(3, 10):
        M = [[1, 0], [0, 1]]
        for _ in range(n):
            M = [[sum(M[i][k] * T[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
        assert partition_function(cycle_graph(n), p) == M[0][0] + M[1][1]


@given(graphs(), af_params())
def test_matches_brute_force(g, p):
    Z, mag, marg = brute_force(g, p)
    assert partition_function(g, p) == Z
    assert magnetization(g, p) == mag
    assert marginals(g, p) == marg


@given(graphs(), af_params())
def test_marginals_sum_to_magnetization(g, p):
    assert sum(marginals(g, p)) == magnetization(g, p)


@given(graphs(), af_params(), st.data())
def test_conditioning_is_total_probability(g, p, data):
    v = data.draw(st.integers(0, g.n - 1))
    m = marginals(g, p)[v]
    e1 = conditional_expectation(g, p, {v: 1})
    e0 = conditional_expectation(g, p, {v: 0})
    assert m * e1 + (1 - m) * e0 == magnetization(g, p)


def test_fields_override_lambda():
    g = Graph(2, ((0, 1),), {0: Fraction(3)})
    # hard-core: {}, {0} weight 3, {1} weight 1
    assert partition_function(g, HC) == 5
    assert marginals(g, HC) == [Fraction(3, 5), Fraction(1, 5)]


def test_jobs_do_not_change_results():
    g = cycle_graph(18)
    p = SpinParams(Fraction(1, 2), Fraction(1, 5), Fraction(7, 4))
    assert marginals(g, p, jobs=1) == marginals(g, p, jobs=4)
    assert partition_function(g, p, jobs=1) == partition_function(g, p, jobs=3)


def test_limit():
    with pytest.raises(InfeasibleError):
        partition_function(path_graph(30), HC)


def test_float_parameters():
    p = HC.floated()
    with p.context():
        assert partition_function(complete_graph(4), p) == 5


@given(graphs(max_n=9), st.data())
def test_compiled_kernel_matches_fallback(g, data):
    from twospin.oracle import _csr
    if _kernel.KERNEL != "compiled":
        pytest.skip("extension not built")
    indptr, indices = _csr(g)
    vclass = np.zeros(g.n, dtype=np.int32)
    sizes = np.array([g.n], dtype=np.int64)
    pins = np.array(data.draw(st.lists(st.sampled_from([-1, -1, 0, 1]), min_size=g.n, max_size=g.n)),
                    dtype=np.int8)
    a = _kernel.histogram(g.n, indptr, indices, vclass, sizes, pins, True)
    b = _enumerate_py.histogram(g.n, indptr, indices, vclass, sizes, pins, True)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_perturbation_bound_random():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(1, 7)
        g = Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.4))
        S = rng.sample(range(n), rng.randint(1, n))
        l1 = Fraction(rng.randint(1, 9), rng.randint(1, 9))
        measured, bound = perturbation_gap(g, HC, S, l1, l1 * Fraction(11, 10), rng.randrange(n))
        assert measured <= bound


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, TWOSPIN_PURE_PYTHON="1")
    code = ("from twospin import _kernel; from twospin.core import complete_graph, SpinParams;"
            "from twospin.oracle import partition_function;"
            "print(_kernel.KERNEL, partition_function(complete_graph(4), SpinParams(1, 0, 1)))")
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert proc.stdout.split() == ["python", "5"]
