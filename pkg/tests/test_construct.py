from fractions import Fraction

import pytest
from mpmath import mpf

from twospin.core import ConvergenceError, InfeasibleError, SpinParams, to_float, working_precision
from twospin.construct import (bootstrap_pairs, bounding_pair, bounding_sequence,
                               build_gadget, detect_case1, find_crossing_lambda,
                               find_pair, inner_gadget, verify_density)
from twospin.fixpoints import ode_fixpoint
from twospin.gadgets import Evaluator, eval_gadget, eval_gadget_oracle, eval_R_of_lambda, example_pair

HC = SpinParams.hardcore(1)


@pytest.mark.parametrize("b, g, lam", [
    (1, 0, 1), (1, 0, Fraction(5, 2)), (Fraction(1, 2), Fraction(1, 5), Fraction(3, 2)),
    (Fraction(1, 2), Fraction(1, 4), Fraction(2, 3)),  # tree fields all 1; triangle seeds
])
def test_bounding_sequence_brackets(b, g, lam):
    p = SpinParams(b, g, lam, precision=256)
    with p.context():
        x = to_float(ode_fixpoint(p)[0])
        prev = None
        for i, step in enumerate(bounding_sequence(p, max_steps=60)):
            assert step.L <= x <= step.U
            if prev is not None:
                assert step.ratio < prev
            prev = step.ratio
        assert prev < 1 + mpf("1e-9")


def test_bounding_sequence_trivial_ising():
    with pytest.raises(InfeasibleError):
        next(bounding_sequence(SpinParams(Fraction(1, 2), Fraction(1, 2), 1)))


def test_bounding_pair():
    p = SpinParams(1, 0, 1, precision=256)
    with p.context():
        x = ode_fixpoint(p)[0]
        e1, e2 = mpf("1e-3"), mpf("1e-4")
        t1, t2 = bounding_pair(p, e1, e2)
        ev = Evaluator(p.floated(), check=False)
        d1, d2 = abs(ev.field(t1) - x), abs(ev.field(t2) - x)
        assert d1 < e1 and d2 < e2 * d1


def test_family_is_dense(hardcore_family):
    p, fam, cd = hardcore_family
    assert verify_density(fam)
    with fam.params.context():
        assert all(r in fam.window for r in fam.R)
        assert fam.R == sorted(fam.R)
        assert 0 < cd.C_min <= cd.C_max < 1
        assert cd.I.lo < fam.x_star < cd.I.hi
        assert cd.I_prime.contains(cd.I)
        # spot check stored values against a fresh evaluation
        ev = Evaluator(fam.params, check=False)
        for i in (0, len(fam) // 2, len(fam) - 1):
            got = ev(fam.exprs[i])
            assert got.R == fam.R[i] and got.M == fam.M[i]


def test_family_members_have_degree_three(hardcore_family):
    _, fam, _ = hardcore_family
    assert max(e.max_degree for e in fam.exprs) <= 3


def test_build_contracts(hardcore_family):
    _, fam, cd = hardcore_family
    with fam.params.context():
        for frac in (mpf("0.1"), mpf("0.5"), mpf("0.9")):
            x = cd.I.lo + frac * cd.I.width
            errs = [abs(fam.evaluator.field(build_gadget(x, t, fam, cd).expr) - x)
                    for t in (5, 10, 15)]
            assert errs[1] < errs[0] * (cd.C_max + mpf("0.05")) ** 5
            assert errs[2] < errs[1] * (cd.C_max + mpf("0.05")) ** 5


def test_build_rejects_target_outside(hardcore_family):
    _, fam, cd = hardcore_family
    with fam.params.context():
        with pytest.raises(InfeasibleError):
            build_gadget(cd.I.hi + cd.I.width, 3, fam, cd)


def test_inner_gadget_follows_first_child(hardcore_family):
    _, fam, cd = hardcore_family
    with fam.params.context():
        res = build_gadget(fam.x_star, 4, fam, cd)
        assert inner_gadget(res, 0) is res.expr
        assert inner_gadget(res, 1) is res.expr.children[0]


def test_case_one_detected(hardcore_family):
    p, fam, cd = hardcore_family
    hit = detect_case1(p, fam, cd, t_max=40)
    assert hit is not None
    with fam.params.context():
        assert hit.g1.hi < hit.g2.lo and hit.M_hat > 0


def test_find_pair_certificate(hardcore_family):
    p, fam, cd = hardcore_family
    with fam.params.context():
        r = mpf("1e-3")
        (pair,) = find_pair(p, r, 1, family=fam, cdata=cd)
        ev = Evaluator(fam.params, check=False)
        a, b = ev(pair.expr1), ev(pair.expr2)
        assert abs(a.R - b.R) <= 2 * r
        assert abs(a.M - b.M) >= pair.M_hat > 0
        assert abs(a.R - pair.R_hat) <= r
        assert pair.to_json(with_exprs=False)["max_degree"] <= 3


@pytest.mark.slow
def test_pair_size_grows_for_tiny_r(hardcore_family):
    p, fam, cd = hardcore_family
    with working_precision(512):
        sizes = []
        for r in ("1e-20", "1e-60"):
            (pair,) = find_pair(p, mpf(r), 1, family=fam, cdata=cd, max_extra=600)
            assert abs(pair.R1 - pair.R2) <= 2 * mpf(r)
            sizes.append(max(pair.expr1.size, pair.expr2.size))
        assert sizes[1] > sizes[0]


@pytest.mark.parametrize("bad", [0, Fraction(1, 2), -1])
def test_find_pair_rejects_r(bad):
    with pytest.raises(InfeasibleError):
        find_pair(HC, bad, shortcut=True)


def test_find_pair_trivial_ising():
    with pytest.raises(InfeasibleError):
        find_pair(SpinParams(Fraction(1, 2), Fraction(1, 2), 1), Fraction(1, 100))


def test_shortcut_pairs_exact():
    pairs = find_pair(HC, Fraction(1, 100), 3, shortcut=True)
    assert [p.R_hat for p in pairs] == [Fraction(2, 3), Fraction(3, 5), Fraction(5, 8)]
    for p in pairs:
        assert p.R1 == p.R2 and p.M_hat == abs(p.M1 - p.M2) > 0


def test_bootstrap_matches_oracle():
    t1, t2 = example_pair()
    for j in range(3):
        e1, e2 = bootstrap_pairs(t1, t2, HC, j)
        a, b = eval_gadget(e1, HC), eval_gadget(e2, HC)
        assert a.R == b.R and a.M != b.M
        if max(e1.size, e2.size) <= 20:
            assert (a.R, a.M) == (eval_gadget_oracle(e1, HC).R, eval_gadget_oracle(e1, HC).M)
            assert (b.R, b.M) == (eval_gadget_oracle(e2, HC).R, eval_gadget_oracle(e2, HC).M)


def test_bootstrap_fields_distinct():
    t1, t2 = example_pair()
    fields = {eval_gadget(bootstrap_pairs(t1, t2, HC, j)[0], HC).R for j in range(6)}
    assert len(fields) == 6


def test_crossing_exact_short_circuit():
    t1, t2 = example_pair()
    assert find_crossing_lambda(t1, t2, 1, 0, 1, Fraction(1, 100)) == 1


def test_crossing_bisects_back_to_one():
    t1, t2 = example_pair()
    with working_precision(256):
        lam = find_crossing_lambda(t1, t2, 1, 0, 1 + mpf("1e-3"), mpf("1e-2"))
        assert abs(lam - 1) < mpf(2) ** -100
        r1 = eval_R_of_lambda(t1, 1, 0, lam, precision=256)[0]
        r2 = eval_R_of_lambda(t2, 1, 0, lam, precision=256)[0]
        assert abs(r1 - r2) < mpf("1e-30")


def test_crossing_without_sign_change():
    t1, t2 = example_pair()
    with pytest.raises(ConvergenceError):
        find_crossing_lambda(t1, t2, 1, 0, 3, Fraction(1, 100))
