"""Gadget pairs with equal fields and different magnetization gaps."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mpf

from ..core import (ConvergenceError, InfeasibleError, SpinParams, as_scalar,
                    format_scalar, is_exact, to_float)
from ..gadgets import (TRIANGLE, Evaluator, GadgetExpr, Merge, example_pair,
                       expr_to_json)
from .family import (BuildResult, ContractionData, DenseFamily, Interval, _Maps,
                     _mul, build_gadget, contraction_data, dense_family,
                     detect_case1, inner_gadget, sequence_images)

EXACT_SIZE_LIMIT = 4096


class PairSearchFailed(InfeasibleError):
    """Neither route produced a certified pair; ``diagnostics`` says how far each got."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PairResult:
    R_hat: object
    expr1: GadgetExpr
    expr2: GadgetExpr
    M_hat: object
    R1: object
    R2: object
    M1: object
    M2: object
    route: str
    depth: int = 0
    certificate: dict = field(default_factory=dict, compare=False)

    def __iter__(self):
        return iter((self.R_hat, self.expr1, self.expr2, self.M_hat))

    def to_json(self, with_exprs: bool = True) -> dict:
        out = {"route": self.route, "depth": self.depth,
               "R_hat": format_scalar(self.R_hat), "M_hat": format_scalar(self.M_hat),
               "R1": format_scalar(self.R1), "R2": format_scalar(self.R2),
               "M1": format_scalar(self.M1), "M2": format_scalar(self.M2),
               "size1": self.expr1.size, "size2": self.expr2.size,
               "max_degree": max(self.expr1.max_degree, self.expr2.max_degree)}
        if self.certificate:
            out["certificate"] = self.certificate
        if with_exprs:
            out["expr1"] = expr_to_json(self.expr1)
            out["expr2"] = expr_to_json(self.expr2)
        return out


def _inner_ok(build: BuildResult, depth: int, ev: Evaluator, cdata: ContractionData) -> bool:
    R, M = ev._eval(inner_gadget(build, depth))[:2]
    return R in cdata.I_prime and M in cdata.J


def _deepen(x, prefixes, r, family, cdata, max_extra):
    """Builds for each prefix, continued canonically until the certificate and accuracy hold."""
    ev = family.evaluator
    for extra in range(1, max_extra + 1):
        builds = [build_gadget(x, len(p) + extra, family, cdata, prefix=p) for p in prefixes]
        if all(_inner_ok(b, len(p), ev, cdata) and abs(ev._eval(b.expr)[0] - x) <= r
               for b, p in zip(builds, prefixes)):
            return builds, extra
    raise ConvergenceError("build did not reach the certified region; raise max_extra")


def _targets(cdata: ContractionData, k: int):
    I = cdata.I
    return [I.lo + (j + 1) * I.width / (k + 1) for j in range(k)]


def find_pair(params: SpinParams, r, k_targets: int = 1, *, family: DenseFamily | None = None,
              cdata: ContractionData | None = None, t_max: int = 40, frontier_cap: int = 16,
              grid: int = 9, case2_depths=(20, 30, 40), max_extra: int = 400,
              shortcut: bool = False) -> list:
    """k_targets certified pairs with fields within r of distinct targets.

    Case I looks for two choice sequences with disjoint magnetization images
    at a common target.  If that fails for some target, Case II scans a grid
    for a pair (y1, y2) where merging the gadgets for y1 and y2 disagrees with
    the gadget for phi(y1 y2).  ``shortcut`` returns the known exact pair for
    hard-core at lambda = 1 (bootstrapped for k_targets > 1).
    """
    r = to_float(as_scalar(r)) if not isinstance(r, mpf) else r
    if not 0 < r < mpf(1) / 2:
        raise InfeasibleError("r must lie in (0, 1/2)")
    if k_targets < 1:
        raise InfeasibleError("k_targets must be positive")
    if params.is_trivial_ising:
        raise InfeasibleError("at beta = gamma, lambda = 1 every tree gadget has field 1")
    if params.beta * params.gamma >= 1:
        raise InfeasibleError("parameters must be antiferromagnetic (beta*gamma < 1)")
    if shortcut and params.is_hardcore and params.lam == 1:
        return _shortcut_pairs(params, k_targets)

    family = family or dense_family(params)
    cdata = cdata or contraction_data(params, family)
    ev = family.evaluator
    out = []
    diag = {"case1_targets_found": 0, "case1_t_max": t_max}
    with family.params.context():
        for x in _targets(cdata, k_targets):
            hit = detect_case1(params, family, cdata, t_max, x=x, frontier_cap=frontier_cap)
            if hit is None:
                break
            (b1, b2), extra = _deepen(x, (hit.seq1, hit.seq2), r, family, cdata, max_extra)
            out.append(_verified(x, b1.expr, b2.expr, hit.M_hat, ev, "case1",
                                 max(len(b1.choices), len(b2.choices)),
                                 {"seq1": list(hit.seq1), "seq2": list(hit.seq2),
                                  "g1": hit.g1.to_json(), "g2": hit.g2.to_json()}))
            diag["case1_targets_found"] += 1
        if len(out) == k_targets:
            return out
        out = _case2(params, r, k_targets, family, cdata, grid, case2_depths, max_extra, diag)
        return out


def _verified(x, e1, e2, M_hat, ev, route, depth, cert):
    R1, M1 = ev._eval(e1)[:2]
    R2, M2 = ev._eval(e2)[:2]
    if abs(M1 - M2) < M_hat * (1 - mpf(2) ** -64):
        raise ConvergenceError("evaluated magnetization gap is below the certified bound")
    if M1 < M2:
        e1, e2, R1, R2, M1, M2 = e2, e1, R2, R1, M2, M1
    return PairResult(x, e1, e2, M_hat, R1, R2, M1, M2, route, depth, cert)


def _case2(params, r, k, family, cdata, grid, depths, max_extra, diag):
    maps = _Maps(family.params)
    ev = family.evaluator
    I = cdata.I
    pts = [I.lo + (a + 1) * I.width / (grid + 1) + a * a * I.width / (1000 * grid ** 3)
           for a in range(grid)]
    best_gap = None
    for t0 in depths:
        found = []
        for a, y1 in enumerate(pts):
            for y2 in pts[a:]:
                y3 = maps.phi_point(y1 * y2)
                if y3 not in I:
                    continue
                try:
                    s = [build_gadget(y, t0, family, cdata).choices for y in (y1, y2, y3)]
                except InfeasibleError:
                    continue
                ims = [sequence_images(c, family, cdata, maps) for c in s]
                (_, G1, F1), (_, G2, F2), (_, G3, _) = ims
                R12 = maps.phi(_mul(F1, F2))
                M12 = Interval.of(1 - maps.omega(R12).iv() * (G1.iv() + G2.iv() - 1))
                gap = M12.distance(G3)
                if best_gap is None or gap > best_gap:
                    best_gap = gap
                if gap > 0:
                    found.append((gap, y1, y2, y3))
        found.sort(key=lambda f: (-f[0], f[3]))
        out, seen = [], set()
        for gap, y1, y2, y3 in found:
            if y3 in seen:
                continue
            try:
                pair = _case2_pair(y1, y2, y3, t0, gap, r, family, cdata, max_extra)
            except (InfeasibleError, ConvergenceError):
                continue
            seen.add(y3)
            out.append(pair)
            if len(out) == k:
                return out
        diag[f"case2_certified_at_{t0}"] = len(found)
    diag["case2_best_margin"] = format_scalar(best_gap) if best_gap is not None else None
    raise PairSearchFailed("no certified pair: Case I undetected and no Case II violation "
                           "certified at the configured depths", diag)


def _case2_pair(y1, y2, y3, t0, gap, r, family, cdata, max_extra):
    ev = family.evaluator
    for extra in range(0, max_extra + 1):
        t = t0 + extra
        bs = [build_gadget(y, t, family, cdata) for y in (y1, y2, y3)]
        if not all(_inner_ok(b, t0, ev, cdata) for b in bs):
            continue
        e1 = Merge([bs[0].expr, bs[1].expr])
        e2 = bs[2].expr
        if abs(ev._eval(e1)[0] - y3) <= r and abs(ev._eval(e2)[0] - y3) <= r:
            return _verified(y3, e1, e2, gap, ev, "case2", t + 1,
                             {"y1": format_scalar(y1), "y2": format_scalar(y2)})
    raise ConvergenceError("case II build did not reach the certified region")


def _shortcut_pairs(params, k):
    t1, t2 = example_pair()
    out = []
    ev = Evaluator(params)
    for j in range(k):
        e1, e2 = bootstrap_pairs(t1, t2, params, j)
        a, b = ev(e1), ev(e2)
        out.append(PairResult(a.R, e1, e2, abs(a.M - b.M), a.R, b.R, a.M, b.M, "exact", j))
    return out


# ------------------------------------------------------------------ bootstrap

def _same_field(R1, R2, params) -> bool:
    if is_exact(R1) and is_exact(R2):
        return R1 == R2
    with params.context():
        return abs(to_float(R1) - to_float(R2)) <= mpf(2) ** (-params.precision // 2)


def _is_merge_fixpoint(R, params) -> bool:
    """Whether R solves lam R^2 + (beta - gamma lam) R - 1 = 0."""
    b, g, lam = params.beta, params.gamma, params.lam
    if params.exact and isinstance(R, Fraction):
        return lam * R * R + (b - g * lam) * R - 1 == 0
    with params.context():
        R = to_float(R)
        b, g, lam = to_float(b), to_float(g), to_float(lam)
        return abs(lam * R * R + (b - g * lam) * R - 1) <= mpf(2) ** (-params.precision // 2)


def bootstrap_pairs(expr1: GadgetExpr, expr2: GadgetExpr, params: SpinParams, j: int):
    """The j-th pair of the sequence T -> Merge([T]) started from an equal-field pair.

    When the common field is the fixpoint of R -> phi(R), single merges would
    not move it, so the sequence is seeded with Merge([T, T]) instead (or
    with the triangle attached when that fixpoint is 1).
    """
    if j < 0:
        raise InfeasibleError("j must be non-negative")
    small = max(expr1.size, expr2.size) <= EXACT_SIZE_LIMIT
    ev = Evaluator(params if small else params.floated(), check=False)
    a, b = ev(expr1), ev(expr2)
    if not _same_field(a.R, b.R, ev.params):
        raise InfeasibleError("the two gadgets do not have equal fields")
    if a.M == b.M:
        raise InfeasibleError("the two gadgets have equal magnetization gaps")
    if _is_merge_fixpoint(a.R, ev.params):
        if _same_field(a.R, 1, ev.params):
            if not params.triangle_admissible():
                raise InfeasibleError("the common field is 1 and the triangle gadget is unavailable")
            expr1, expr2 = Merge([expr1, TRIANGLE]), Merge([expr2, TRIANGLE])
        else:
            expr1, expr2 = Merge([expr1, expr1]), Merge([expr2, expr2])
    for _ in range(j):
        expr1, expr2 = Merge([expr1]), Merge([expr2])
    return expr1, expr2


# ------------------------------------------------------------------ crossing

def find_crossing_lambda(expr1: GadgetExpr, expr2: GadgetExpr, beta, gamma, lambda0, eps,
                         precision: int = 256, delta=None, tol=None):
    """lambda within eps of lambda0 where the two fields agree, by bisection."""
    beta, gamma, lambda0 = as_scalar(beta), as_scalar(gamma), as_scalar(lambda0)
    if max(expr1.size, expr2.size) <= EXACT_SIZE_LIMIT and all(
            is_exact(v) for v in (beta, gamma, lambda0)):
        p = SpinParams(beta, gamma, lambda0, delta, precision)
        ev = Evaluator(p, check=False)
        if ev(expr1).R == ev(expr2).R:
            return lambda0
    base = SpinParams(beta, gamma, lambda0, delta, precision).floated()
    with base.context():
        tol = mpf(2) ** (-precision // 2) if tol is None else to_float(tol)
        lam0, eps = to_float(lambda0), to_float(eps)

        def h(lam):
            ev = Evaluator(base.with_lambda(lam), check=False)
            with ev.params.context():
                return ev._eval(expr1)[0] - ev._eval(expr2)[0]

        h0 = h(lam0)
        if abs(h0) <= tol:
            return lam0
        lo, hi = lam0 - eps, lam0 + eps
        if lo <= 0:
            raise InfeasibleError("search interval reaches lambda <= 0")
        hlo, hhi = h(lo), h(hi)
        if hlo == 0:
            return lo
        if hhi == 0:
            return hi
        if (hlo > 0) == (hhi > 0):
            raise ConvergenceError("no sign change of R1 - R2 on [lambda0 - eps, lambda0 + eps]")
        # start from the half containing lambda0's sign change
        if (h0 > 0) == (hlo > 0):
            lo, hlo = lam0, h0
        else:
            hi = lam0
        for _ in range(4 * precision):
            mid = (lo + hi) / 2
            hm = h(mid)
            if abs(hm) <= tol or mid in (lo, hi):
                return mid
            if (hm > 0) == (hlo > 0):
                lo, hlo = mid, hm
            else:
                hi = mid
        raise ConvergenceError("bisection did not reach the tolerance")
