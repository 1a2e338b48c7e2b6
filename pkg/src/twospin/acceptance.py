"""The fifteen acceptance checks, runnable from tests and from ``twospin verify``."""
from __future__ import annotations

import inspect
import io
import json
import math
import random
import time
from contextlib import redirect_stdout
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpf

from .core import (Graph, SpinParams, complete_graph, to_float,
                   working_precision)
from .gadgets import (DEGENERATE, TRIANGLE, Evaluator, GadgetExpr, Merge,
                      eval_gadget, eval_gadget_oracle, eval_R_of_lambda,
                      example_pair, omega)

SEED = 20240611


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.number:>2} {self.name}: {self.detail}"


# ------------------------------------------------------------------ generators

def random_tree_gadget(rng: random.Random, max_size: int, triangle: bool = False) -> GadgetExpr:
    """A random gadget with at least one edge and at most max_size vertices.

    Each merge node adds one vertex, so a random recursive tree on
    size - 1 merge nodes gives a uniform spread of sizes.
    """
    m = rng.randint(1, max_size - 1)
    kids: list[list[int]] = [[] for _ in range(m)]
    for i in range(1, m):
        open_ = [j for j in range(i) if len(kids[j]) < 3]
        kids[rng.choice(open_)].append(i)
    room = max_size - 1 - m
    built: list = [None] * m
    for i in reversed(range(m)):
        if triangle and not kids[i] and i and room >= 3 and rng.random() < 0.3:
            built[i] = TRIANGLE  # a triangle leaf has 3 non-root vertices vs 1
            room -= 2
        else:
            built[i] = Merge([built[j] for j in kids[i]])
    return built[0]


def random_params(rng: random.Random, triangle: bool = False) -> SpinParams:
    while True:
        b = Fraction(rng.randint(0, 12), rng.randint(1, 12))
        g = Fraction(rng.randint(0, 12), rng.randint(1, 12))
        if triangle:
            b, g = Fraction(rng.randint(1, 9), 10), Fraction(rng.randint(1, 9), 10)
            if b == g:
                continue
            return SpinParams(b, g, (1 - b) / (1 - g))
        lam = Fraction(rng.randint(1, 12), rng.randint(1, 12))
        if b * g < 1 and not (b == 0 and g == 0) and not (b == g and lam == 1):
            return SpinParams(b, g, lam)


# ------------------------------------------------------------------ criteria

def criterion_1() -> CriterionResult:
    t0 = time.perf_counter()
    p = SpinParams.hardcore(1)
    t1, t2 = example_pair()
    a, b = eval_gadget(t1, p), eval_gadget(t2, p)
    oa, ob = eval_gadget_oracle(t1, p), eval_gadget_oracle(t2, p)
    elapsed = time.perf_counter() - t0
    want = (Fraction(2, 3), Fraction(2, 3), Fraction(5, 6), Fraction(3, 4))
    got = (a.R, b.R, a.M, b.M)
    ok = got == want and (oa.R, ob.R, oa.M, ob.M) == want and elapsed < 1
    ok = ok and all(isinstance(x, Fraction) for x in got)
    return CriterionResult(1, "example pair exact", ok,
                           f"R=({a.R}, {b.R}) M=({a.M}, {b.M}) oracle agrees, {elapsed:.3f}s")


def _criterion2_cases(seed=SEED):
    rng = random.Random(seed)
    params = [random_params(rng) for _ in range(8)] + [random_params(rng, True) for _ in range(3)]
    cases = []
    for p in params:
        tri = p.triangle_admissible()
        cases.append((p, [random_tree_gadget(rng, 14, tri) for _ in range(200)]))
    return cases


def criterion_2(seed=SEED) -> CriterionResult:
    t0 = time.perf_counter()
    bad = 0
    total = 0
    for p, exprs in _criterion2_cases(seed):
        ev = Evaluator(p)
        for e in exprs:
            a, b = ev(e), eval_gadget_oracle(e, p)
            total += 1
            if (a.R, a.M, a.Zin, a.Zout) != (b.R, b.M, b.Zin, b.Zout):
                bad += 1
    elapsed = time.perf_counter() - t0
    return CriterionResult(2, "recursion equals oracle", bad == 0 and elapsed < 60,
                           f"{total} cases, {bad} mismatches, {elapsed:.1f}s")


def criterion_3(seed=SEED) -> CriterionResult:
    bad = 0
    total = 0
    for p, exprs in _criterion2_cases(seed):
        ev = Evaluator(p)
        for e in exprs:
            R = ev(e).R
            upper_ok = p.beta == 0 or R < 1 / p.beta
            w = omega(R, p)
            total += 1
            if not (p.gamma < R and upper_ok and 0 < w < 1):
                bad += 1
    return CriterionResult(3, "field and contraction ranges", bad == 0,
                           f"{total} gadgets, {bad} violations")


def criterion_4(seed=SEED) -> CriterionResult:
    rng = random.Random(seed + 4)
    r_bad = m_bad = 0
    example = None
    total = 0
    for _ in range(10):
        b = Fraction(rng.randint(1, 9), 10)
        p = SpinParams(b, b, 1)
        for _ in range(20):
            e = random_tree_gadget(rng, 12)
            ev = eval_gadget(e, p)
            total += 1
            r_bad += ev.R != 1
            if ev.M != 0:
                m_bad += 1
                if example is None:
                    example = (b, e.size, ev.M)
    tri_ok = True
    for b, g in ((Fraction(1, 2), Fraction(1, 4)), (Fraction(1, 3), Fraction(3, 5)),
                 (Fraction(7, 10), Fraction(1, 10))):
        p = SpinParams(b, g, (1 - b) / (1 - g))
        a, o = eval_gadget(TRIANGLE, p), eval_gadget_oracle(TRIANGLE, p)
        tri_ok &= a.R != 1 and g < a.R < 1 / b and (a.R, a.M) == (o.R, o.M)
    ok = r_bad == 0 and m_bad == 0 and tri_ok
    detail = f"R=1 in {total - r_bad}/{total}; M=0 in {total - m_bad}/{total}; triangle {'ok' if tri_ok else 'bad'}"
    if example:
        detail += f" (e.g. beta=gamma={example[0]}, size {example[1]}: M={example[2]})"
    return CriterionResult(4, "trivial Ising degeneracy", ok, detail)


def criterion_5() -> CriterionResult:
    from .fixpoints import (Verdict, hardcore_lambda_c, in_nonuniqueness,
                            tree_map, two_cycle_fixpoints)
    lc = hardcore_lambda_c(6)
    eps = Fraction(1, 10 ** 6)
    below = in_nonuniqueness(SpinParams.hardcore(lc - eps, 6))
    above = in_nonuniqueness(SpinParams.hardcore(lc + eps, 6))
    d5 = in_nonuniqueness(SpinParams(1, 0, 1, 5))
    d6 = in_nonuniqueness(SpinParams(1, 0, 1, 6))
    p = SpinParams(1, 0, 1, 6, 256)
    cyc = two_cycle_fixpoints(p)
    with p.context():
        f, _ = tree_map(p)
        res = max(abs(f(cyc.x) - cyc.y), abs(f(cyc.y) - cyc.x))
        res_ok = res <= mpf(2) ** -128
    ok = (lc == Fraction(3125, 4096) and below is Verdict.NO and above is Verdict.YES
          and d5 is Verdict.NO and d6 is Verdict.YES and res_ok)
    return CriterionResult(5, "criticality", ok,
                           f"lambda_c(6)={lc}; {below.value}/{above.value} across it; "
                           f"delta 5 {d5.value}, 6 {d6.value}; 2-cycle residual {mp.nstr(res, 3)}")


def criterion_6() -> CriterionResult:
    from .construct import bounding_sequence
    from .fixpoints import ode_fixpoint
    p = SpinParams(1, 0, 1, precision=256)
    with p.context():
        x = to_float(ode_fixpoint(p)[0])
        prev = None
        ok = True
        reached = None
        for i, step in enumerate(bounding_sequence(p, max_steps=199)):
            ok &= step.L <= x <= step.U
            if prev is not None:
                ok &= step.ratio < prev
            prev = step.ratio
            if step.ratio <= 1 + mpf("1e-9"):
                reached = i + 1
                break
    ok = ok and reached is not None
    return CriterionResult(6, "bounding sequence", ok,
                           f"bracket kept, ratio strictly decreasing, 1+1e-9 reached at iteration {reached}")


_FAMILY_CACHE: dict = {}


def hardcore_family():
    """Dense family and contraction data for hard-core at lambda = 1 (cached)."""
    if "hc" not in _FAMILY_CACHE:
        from .construct import contraction_data, dense_family
        p = SpinParams(1, 0, 1, precision=256)
        fam = dense_family(p)
        _FAMILY_CACHE["hc"] = (p, fam, contraction_data(p, fam))
    return _FAMILY_CACHE["hc"]


def criterion_7() -> CriterionResult:
    from .construct import build_gadget
    p, fam, cd = hardcore_family()
    worst = mpf(0)
    monotone = True
    with fam.params.context():
        for j in range(20):
            x = cd.I.lo + (j + mpf(1) / 2) * cd.I.width / 20
            errs = []
            for t in range(1, 31):
                R = fam.evaluator.field(build_gadget(x, t, fam, cd).expr)
                errs.append(abs(R - x))
            monotone &= all(b < a for a, b in zip(errs, errs[1:]))
            ratio = (errs[-1] / errs[0]) ** (mpf(1) / (len(errs) - 1))
            worst = max(worst, ratio)
        ok = monotone and worst <= cd.C_max + mpf("0.05")
        return CriterionResult(7, "build contraction", ok,
                               f"20 targets, worst geometric ratio {mp.nstr(worst, 5)} vs "
                               f"C_max {mp.nstr(cd.C_max, 5)}, strictly decreasing: {monotone}")


def _fit_residual(xs, ys):
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx if sxx else 0.0
    icpt = my - slope * mx
    return slope, icpt, max(abs(icpt + slope * x - y) / y for x, y in zip(xs, ys))


def criterion_8() -> CriterionResult:
    from .construct import find_pair
    t0 = time.perf_counter()
    p, fam, cd = hardcore_family()
    with fam.params.context():
        r = mpf("1e-4")
        pairs = find_pair(p, r, 3, family=fam, cdata=cd)
        ev = Evaluator(fam.params, check=False)
        ok = len(pairs) == 3 and len({pp.R_hat for pp in pairs}) == 3
        for pp in pairs:
            a, b = ev(pp.expr1), ev(pp.expr2)
            ok &= abs(a.R - b.R) <= 2 * r and abs(a.M - b.M) >= pp.M_hat > 0
            ok &= max(pp.expr1.max_degree, pp.expr2.max_degree) <= 3
        logs, sizes = [], []
        for rr in ("1e-2", "1e-4", "1e-6"):
            q = find_pair(p, mpf(rr), 1, family=fam, cdata=cd)[0]
            logs.append(abs(math.log(float(rr))))
            sizes.append(float(max(q.expr1.size, q.expr2.size)))
    slope, icpt, resid = _fit_residual(logs, sizes)
    c = max(s / lg for s, lg in zip(sizes, logs))
    elapsed = time.perf_counter() - t0
    ok = ok and resid < 0.2 and elapsed < 600
    return CriterionResult(8, "pair certificate", ok,
                           f"3 pairs, M_hat {mp.nstr(pairs[0].M_hat, 3)}; sizes {[f'{s:.3g}' for s in sizes]}, "
                           f"c={c:.3g}, fit residual {resid:.2%}, {elapsed:.0f}s")


def criterion_9() -> CriterionResult:
    from .construct import bootstrap_pairs
    p = SpinParams.hardcore(1)
    t1, t2 = example_pair()
    ok = True
    fields = []
    for j in range(6):
        e1, e2 = bootstrap_pairs(t1, t2, p, j)
        a, b = eval_gadget(e1, p), eval_gadget(e2, p)
        ok &= a.R == b.R and a.M != b.M and isinstance(a.R, Fraction)
        fields.append(a.R)
    ok &= len(set(fields)) == 6
    return CriterionResult(9, "bootstrap", ok, "fields " + ", ".join(map(str, fields)))


def criterion_10() -> CriterionResult:
    from .construct import find_crossing_lambda, find_pair
    p, fam, cd = hardcore_family()
    with working_precision(256):
        pair = find_pair(p, mpf("1e-6"), 1, family=fam, cdata=cd)[0]
        # start off the crossing so the bisection has work to do
        lam0 = 1 + mpf("1e-3")
        lam = find_crossing_lambda(pair.expr1, pair.expr2, 1, 0, lam0, mpf("1e-2"), precision=256)
        r1, d1 = eval_R_of_lambda(pair.expr1, 1, 0, lam, precision=256)
        r2, d2 = eval_R_of_lambda(pair.expr2, 1, 0, lam, precision=256)
        resid = abs(r1 - r2)
        h = mpf("1e-12")
        worst = mpf(0)
        for e, d in ((pair.expr1, d1), (pair.expr2, d2)):
            up = eval_R_of_lambda(e, 1, 0, lam + h, precision=256)[0]
            dn = eval_R_of_lambda(e, 1, 0, lam - h, precision=256)[0]
            fd = (up - dn) / (2 * h)
            worst = max(worst, abs(fd - d) / abs(d))
        ok = resid <= mpf("1e-20") and worst <= mpf("1e-6")
        return CriterionResult(10, "lambda crossing", ok,
                               f"lambda0=1+1e-3 -> lambda-1={mp.nstr(lam - 1, 3)}, residual {mp.nstr(resid, 3)}, "
                               f"derivative rel. error {mp.nstr(worst, 3)}")


def criterion_11(seed=SEED) -> CriterionResult:
    from .reduction import abc_functions, path_weights
    rng = random.Random(seed + 11)
    ident_ok = True
    for _ in range(100):
        b = Fraction(rng.randint(0, 20), rng.randint(1, 20))
        g = Fraction(rng.randint(0, 20), rng.randint(1, 20))
        if b * g >= 1 or (b == 0 and g == 0):
            g = Fraction(0)
            b = b or Fraction(1)
        p = SpinParams(b, g, 1)
        qp, qm = Fraction(rng.randint(1, 99), 100), Fraction(rng.randint(1, 99), 100)
        x = Fraction(rng.randint(0, 400), rng.randint(1, 40))
        fpp, fpm, fmp, fmm = path_weights(x, p, qp, qm)
        ident_ok &= fpm * fmp - fpp * fmm == (1 - b * g) ** 3 * x * x * (qp - qm) ** 2
    p = SpinParams(1, 0, 1, precision=128)
    qp, qm = Fraction(3, 4), Fraction(1, 5)
    a0 = abc_functions(SpinParams(1, 0, 1), qp, qm, Fraction(0))[0]
    worst = mpf(0)
    with working_precision(128):
        h = mpf("1e-6")
        for R in (mpf("0.3"), mpf("0.68"), mpf("1.5"), mpf(4)):
            D = abc_functions(p, qp, qm, R)[3]
            up = abc_functions(p, qp, qm, R + h)[0]
            dn = abc_functions(p, qp, qm, R - h)[0]
            fd = (mp.log(up) - mp.log(dn)) / (2 * h)
            worst = max(worst, abs(fd - D) / h ** 2)
        ok = ident_ok and a0 == 1 and worst <= 100
        return CriterionResult(11, "A/B/C/D algebra", ok,
                               f"identity exact at 100 points: {ident_ok}; A(0)={a0}; "
                               f"|FD - D|/h^2 <= {mp.nstr(worst, 3)}")


def criterion_12() -> CriterionResult:
    from .reduction import (build_reduction, complete_bipartite_gadget,
                            reduction_problems)
    G = complete_bipartite_gadget(3, 3)
    T = example_pair()[0]
    rg = build_reduction(complete_graph(4), G, T, 1)
    problems = reduction_problems(rg, 3)
    want = 8 * G.n + 4 * 6 * T.size
    ok = not problems and rg.graph.n == want
    return CriterionResult(12, "reduction structure", ok,
                           f"{rg.graph.n} vertices (expected {want}), max degree {rg.graph.max_degree()}, "
                           f"{len(problems)} problems")


def criterion_13() -> CriterionResult:
    from .decompose import composite_statistics
    from .reduction import (build_reduction, complete_bipartite_gadget,
                            maxcut_extract, measure_phase_gadget,
                            occupation_coefficients)
    p = SpinParams(1, 0, 1, 6)
    G = measure_phase_gadget(complete_bipartite_gadget(6, 3), p)
    H = complete_graph(4)
    t1, t2 = example_pair()
    evs = [eval_gadget(t, p) for t in (t1, t2)]
    stats = [composite_statistics(build_reduction(H, G, t, 1), p) for t in (t1, t2)]
    same = stats[0].hat_marginals == stats[1].hat_marginals
    with p.context():
        c, d = occupation_coefficients(p, G.q_plus, G.q_minus, evs[0].R)
        E = len(H.edges)
        D_hat = stats[0].magnetization - stats[1].magnetization
        mc = maxcut_extract(D_hat, evs[0].M, evs[1].M, evs[0].a_prime, evs[1].a_prime, c, d, 1, E)
        avg = to_float(stats[0].avg_cut)
        Q = d * avg + c * E
        eps = to_float(G.epsilon_measured)
        err = abs(mc - avg) * abs(d)
        ok = same and err <= 8 * eps * abs(Q)
        return CriterionResult(13, "cancellation and extraction", ok,
                               f"hat marginals identical: {same}; extracted {mp.nstr(mc, 5)} vs "
                               f"Avg-Cut {mp.nstr(avg, 5)}; |error|*|D|={mp.nstr(err, 3)} <= "
                               f"8*eps*|Q|={mp.nstr(8 * eps * abs(Q), 3)} (eps={mp.nstr(eps, 3)})")


def criterion_14(seed=SEED) -> CriterionResult:
    from .oracle import perturbation_gap
    rng = random.Random(seed + 14)
    bad = 0
    for _ in range(200):
        n = rng.randint(1, 10)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.35]
        p = random_params(rng)
        g = Graph(n, tuple(edges))
        S = rng.sample(range(n), rng.randint(1, n))
        l1 = Fraction(rng.randint(1, 30), rng.randint(1, 30))
        l2 = l1 * Fraction(1001, 1000) if rng.random() < 0.5 else Fraction(rng.randint(1, 30), 10)
        measured, bound = perturbation_gap(g, p, S, l1, l2, rng.randrange(n))
        bad += measured > bound
    return CriterionResult(14, "perturbation bound", bad == 0, f"200 instances, {bad} violations")


CLI_CASES = [
    ["eval", "--example", "t1"],
    ["eval", "--example", "t2", "--full"],
    ["oracle", "--builtin", "complete:4"],
    ["oracle", "--builtin", "path:20", "--stat", "marginals"],
    ["oracle", "--builtin", "cycle:16", "--stat", "magnetization", "--lambda", "3/2"],
    ["fixpoint", "--delta", "6"],
    ["critical", "--delta", "6"],
    ["find-pair", "--shortcut", "--k", "2"],
    ["crossing", "--example", "--lambda0", "1001/1000", "--eps", "1/100"],
    ["reduce", "--H", "K4", "--complete-bipartite", "3", "3", "--tree", "t1", "--delta", "3"],
]


def run_cli(argv) -> tuple:
    from .cli import main
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


def criterion_15() -> CriterionResult:
    mismatches = []
    for case in CLI_CASES:
        outs = [run_cli(case + ["--jobs", str(j)]) for j in (1, 8)]
        if outs[0] != outs[1] or outs[0][0] != 0:
            mismatches.append(" ".join(case))
    return CriterionResult(15, "CLI determinism", not mismatches,
                           f"{len(CLI_CASES)} invocations, mismatched or failed: {mismatches or 'none'}")


CRITERIA = {
    1: ("example-pair", criterion_1),
    2: ("recursion-oracle", criterion_2),
    3: ("closure", criterion_3),
    4: ("trivial-ising", criterion_4),
    5: ("criticality", criterion_5),
    6: ("bounding", criterion_6),
    7: ("build-contraction", criterion_7),
    8: ("pair-certificate", criterion_8),
    9: ("bootstrap", criterion_9),
    10: ("crossing", criterion_10),
    11: ("abcd-algebra", criterion_11),
    12: ("reduction-structure", criterion_12),
    13: ("cancellation", criterion_13),
    14: ("perturbation", criterion_14),
    15: ("cli-determinism", criterion_15),
}


def resolve(names) -> list:
    """Criterion numbers for names given as numbers or slugs; all when empty."""
    if not names:
        return sorted(CRITERIA)
    slug = {s: n for n, (s, _) in CRITERIA.items()}
    out = []
    for name in names:
        if str(name).isdigit() and int(name) in CRITERIA:
            out.append(int(name))
        elif name in slug:
            out.append(slug[name])
        else:
            raise KeyError(name)
    return out


def run(names=(), seed=None) -> list:
    results = []
    for n in resolve(names):
        _, fn = CRITERIA[n]
        kwargs = {"seed": seed} if seed is not None and "seed" in inspect.signature(fn).parameters else {}
        try:
            results.append(fn(**kwargs))
        except Exception as exc:  # a crash is a failure, reported not raised
            results.append(CriterionResult(n, CRITERIA[n][0], False, f"error: {exc!r}"))
    return results


def summary_json(results) -> str:
    return json.dumps([{"criterion": r.number, "name": r.name, "passed": r.passed,
                        "detail": r.detail} for r in results], sort_keys=True, indent=1)
