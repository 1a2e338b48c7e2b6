"""Dense families of gadgets near x*, contraction intervals and Build-gadget.

Merging the gadget under construction with a family member of field R_i is
the pair of maps

    phi_i(R)    = (1 + g lam R R_i) / (b + lam R R_i)
    psi_i(R, M) = 1 - omega(phi_i(R)) (M + M_i - 1)

on (field, magnetization gap).  Everything here is float mode at the
parameters' precision; interval bounds use mpmath's outward-rounded ``iv``.
"""
from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

from mpmath import iv, mpf

from ..core import (BudgetExceeded, ConvergenceError, InfeasibleError,
                    SpinParams, to_float)
from ..fixpoints import ode_fixpoint
from ..gadgets import DEGENERATE, Evaluator, GadgetExpr, Merge, omega
from .bounding import bounding_pair


# ------------------------------------------------------------------ intervals

@dataclass(frozen=True)
class Interval:
    lo: mpf
    hi: mpf

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval"):
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def distance(self, other: "Interval"):
        """Gap between disjoint intervals, 0 when they meet."""
        return max(mpf(0), other.lo - self.hi, self.lo - other.hi)

    def iv(self):
        return iv.mpf([self.lo, self.hi])

    @classmethod
    def of(cls, v) -> "Interval":
        return cls(mpf(v.a), mpf(v.b))

    def to_json(self):
        from ..core import format_scalar
        return [format_scalar(self.lo), format_scalar(self.hi)]


class _Maps:
    """Interval versions of phi, omega and psi for fixed parameters."""

    def __init__(self, params: SpinParams):
        self.b = iv.mpf(to_float(params.beta))
        self.g = iv.mpf(to_float(params.gamma))
        self.lam = iv.mpf(to_float(params.lam))
        self.bf, self.gf, self.lf = (to_float(v) for v in (params.beta, params.gamma, params.lam))

    def phi_point(self, P):
        return (1 + self.gf * self.lf * P) / (self.bf + self.lf * P)

    def phi(self, P: Interval) -> Interval:
        # decreasing in the product P
        lo = (1 + self.g * self.lam * P.hi) / (self.b + self.lam * P.hi)
        hi = (1 + self.g * self.lam * P.lo) / (self.b + self.lam * P.lo)
        return Interval(mpf(lo.a), mpf(hi.b))

    def omega(self, R: Interval) -> Interval:
        r = R.iv()
        v = (1 + self.b * self.g - self.b * r - self.g / r) / (1 - self.b * self.g)
        return Interval.of(v)

    def psi(self, R_out: Interval, M: Interval, M_i) -> Interval:
        v = 1 - self.omega(R_out).iv() * (M.iv() + (iv.mpf(M_i) - 1))
        return Interval.of(v)

    def preimage_product(self, y):
        """The product P with phi(P) = y."""
        return (1 - self.bf * y) / (self.lf * (y - self.gf))


def _mul(a: Interval, b: Interval) -> Interval:
    return Interval.of(a.iv() * b.iv())


# ------------------------------------------------------------------ family

@dataclass
class DenseFamily:
    """Gadgets with fields in [x* - tau, x* + tau], sorted by field."""

    params: SpinParams
    x_star: mpf
    omega_star: mpf
    tau: mpf
    delta: mpf
    exprs: list
    R: list
    M: list
    levels: int
    evaluator: Evaluator = field(repr=False)

    @property
    def gadgets(self):
        return list(zip(self.exprs, self.R, self.M))

    def __len__(self):
        return len(self.exprs)

    @property
    def window(self) -> Interval:
        return Interval(self.x_star - self.tau, self.x_star + self.tau)

    def without(self, index: int) -> "DenseFamily":
        keep = [i for i in range(len(self)) if i != index]
        return DenseFamily(self.params, self.x_star, self.omega_star, self.tau, self.delta,
                           [self.exprs[i] for i in keep], [self.R[i] for i in keep],
                           [self.M[i] for i in keep], self.levels, self.evaluator)

    def nearest(self, target) -> int:
        """Index of the member whose field is closest to target (ties: lower index)."""
        j = _bisect.bisect_left(self.R, target)
        best = None
        for i in (j - 1, j):
            if 0 <= i < len(self.R):
                d = abs(self.R[i] - target)
                if best is None or d < best[0]:
                    best = (d, i)
        return best[1]


def density_violations(family: DenseFamily) -> list:
    """Points of the window farther than tau*delta from every member, as gaps (a, b)."""
    with family.params.context():
        w = family.window
        reach = family.tau * family.delta
        bad = []
        Rs = family.R
        if not Rs:
            return [(w.lo, w.hi)]
        if Rs[0] - w.lo > reach:
            bad.append((w.lo, Rs[0]))
        for a, b in zip(Rs, Rs[1:]):
            if b - a > 2 * reach:
                bad.append((a, b))
        if w.hi - Rs[-1] > reach:
            bad.append((Rs[-1], w.hi))
        return bad


def verify_density(family: DenseFamily) -> bool:
    return not density_violations(family)


def _levels_for(omega_star, delta) -> int:
    # level-Q spacing must be below 2 tau delta on the sparser side, plus one level of slack
    return math.ceil(math.log2(1 / (float(omega_star) ** 2 * float(delta)))) + 1


def dense_family(params: SpinParams, delta=None, tau1=None, levels: int | None = None,
                 retries: int = 3) -> DenseFamily:
    """Build a delta-dense family by repeated pairwise merging around x*.

    Level 0 holds two gadgets with fields x* (very nearly) and x* + a; level
    i+1 merges pairs from level i so that member j has field close to
    x* + j a (-omega*)^(i+1).  The last two levels cover opposite sides of x*.
    Density is always re-checked from the computed fields.
    """
    fparams = params if not params.exact else params.floated()
    with fparams.context():
        x_star, omega_star = (to_float(v) for v in ode_fixpoint(params))
        if not 0 < omega_star < 1:
            raise InfeasibleError("omega* must lie in (0, 1)")
        delta = omega_star / 200 if delta is None else to_float(delta)
        if not 0 < delta < omega_star / 100:
            raise InfeasibleError("density parameter must satisfy 0 < delta < omega*/100")
        tau1 = mpf("1e-3") if tau1 is None else to_float(tau1)
        Q = levels or _levels_for(omega_star, delta)
        ev = Evaluator(fparams, check=False)
        eps2 = mpf(2) ** (-Q) / 200
        eps1 = eps2 * mpf(2) ** (-Q) / 100
        last = None
        for _ in range(retries + 1):
            fam = _doubling(fparams, ev, x_star, omega_star, delta, Q, eps1, eps2)
            if fam.tau < tau1:
                if verify_density(fam):
                    return fam
                last = fam
            eps1 /= 2 ** 10
            eps2 /= 2 ** 4
        if last is None:
            raise ConvergenceError("could not bring tau below the requested bound")
        return _fill_gaps(last)


def _doubling(params, ev, x_star, omega_star, delta, Q, eps1, eps2) -> DenseFamily:
    t1, t2 = bounding_pair(params, eps1, eps2, evaluator=ev)
    alpha0 = ev.field(t1) - x_star
    level = [t2, t1]
    prev = None
    for i in range(1, Q + 1):
        prev = level
        level = [Merge([prev[j // 2], prev[j - j // 2]]) for j in range(2 ** i + 1)]
    alpha_q = alpha0 * (-omega_star) ** Q
    tau = 2 ** (Q - 1) * omega_star * abs(alpha_q)
    lo, hi = x_star - tau, x_star + tau
    members = {}
    for expr in level + prev:
        R, M = ev._eval(expr)[:2]
        if lo <= R <= hi:
            members[id(expr)] = (R, M, expr)
    rows = sorted(members.values(), key=lambda t: t[0])
    return DenseFamily(params, x_star, omega_star, tau, delta, [e for _, _, e in rows],
                       [r for r, _, _ in rows], [m for _, m, _ in rows], Q, ev)


def _fill_gaps(fam: DenseFamily, rounds: int = 8) -> DenseFamily:
    """Close density gaps by merging pairs from the gadgets evaluated so far."""
    ev = fam.evaluator
    maps = _Maps(fam.params)
    with fam.params.context():
        pool = sorted({id(e): (ev.field(e), e) for e in fam.exprs}.values(), key=lambda t: t[0])
        for _ in range(rounds):
            gaps = density_violations(fam)
            if not gaps:
                return fam
            added = False
            for a, b in gaps:
                target = maps.preimage_product((a + b) / 2)
                best = None
                j = len(pool) - 1
                for i in range(len(pool)):
                    while j > i and pool[i][0] * pool[j][0] > target:
                        j -= 1
                    for jj in (j, j + 1):
                        if i <= jj < len(pool):
                            d = abs(pool[i][0] * pool[jj][0] - target)
                            if best is None or d < best[0]:
                                best = (d, pool[i][1], pool[jj][1])
                if best is None:
                    continue
                cand = Merge([best[1], best[2]])
                R, M = ev._eval(cand)[:2]
                if a < R < b and R in fam.window:
                    k = _bisect.bisect_left(fam.R, R)
                    fam.R.insert(k, R)
                    fam.M.insert(k, M)
                    fam.exprs.insert(k, cand)
                    added = True
            if not added:
                break
        if density_violations(fam):
            raise ConvergenceError("dense family still has gaps after gap filling")
        return fam


# ------------------------------------------------------------------ contraction

@dataclass(frozen=True)
class ContractionData:
    I: Interval
    I_prime: Interval
    J: Interval
    C_min: mpf
    C_max: mpf
    T_bound: mpf

    def to_json(self) -> dict:
        from ..core import format_scalar
        return {"I": self.I.to_json(), "I_prime": self.I_prime.to_json(),
                "J": self.J.to_json(), "C_min": format_scalar(self.C_min),
                "C_max": format_scalar(self.C_max), "T": format_scalar(self.T_bound)}


def contraction_data(params: SpinParams, family: DenseFamily) -> ContractionData:
    """Interval bounds on |phi_i'| and omega over I', containment phi_i(I') in I'."""
    fp = family.params
    with fp.context():
        x, w, tau = family.x_star, family.omega_star, family.tau
        I = Interval(x - w * tau / 2, x + w * tau / 2)
        half = 2 * tau * w / (1 - w)
        Ip = Interval(x - half, x + half)
        maps = _Maps(fp)
        Ri = Interval(family.R[0], family.R[-1])
        # |phi_i'(R)| = lam R_i (1 - bg) / (b + lam R R_i)^2 over the box I' x [R_min, R_max]
        ri, r = Ri.iv(), Ip.iv()
        dphi = maps.lam * ri * (1 - maps.b * maps.g) / (maps.b + maps.lam * r * ri) ** 2
        om = maps.omega(Ip)
        c_min = mpf(dphi.a)
        c_max = max(mpf(dphi.b), om.hi)
        if not 0 < c_min < c_max < 1:
            raise InfeasibleError("contraction bounds fail; tau is too large")
        image = maps.phi(_mul(Ip, Ri))
        if not Ip.contains(image):
            raise InfeasibleError("phi_i(I') is not inside I'; tau is too large")
        T = (2 + max(abs(m) for m in family.M)) / (1 - c_max)
        return ContractionData(I, Ip, Interval(-T, T), c_min, c_max, T)


# ------------------------------------------------------------------ Build-gadget

@dataclass(frozen=True)
class BuildResult:
    expr: GadgetExpr
    choices: tuple
    targets: tuple  # targets[s] is the field aimed at after s outer steps

    def __iter__(self):
        return iter((self.expr, self.choices))


def canonical_choice(y, family: DenseFamily, maps: _Maps | None = None) -> int:
    """Member whose map sends the point nearest x* to y."""
    maps = maps or _Maps(family.params)
    return family.nearest(maps.preimage_product(y) / family.x_star)


def build_gadget(x, t: int, family: DenseFamily, cdata: ContractionData,
                 prefix: Sequence[int] = ()) -> BuildResult:
    """Steer the field to x in t merge steps.

    The first ``len(prefix)`` choices are forced; the rest take the canonical
    member.  Every canonical step needs its target in I.
    """
    if t < 0:
        raise InfeasibleError("t must be non-negative")
    maps = _Maps(family.params)
    with family.params.context():
        y = to_float(x)
        if not prefix and t > 0 and y not in cdata.I:
            raise InfeasibleError("target is outside the interval I")
        choices, targets = [], [y]
        for s in range(t):
            P = maps.preimage_product(y)
            if s < len(prefix):
                i = prefix[s]
            else:
                if y not in cdata.I:
                    raise InfeasibleError("target left the interval I; no map covers it")
                i = family.nearest(P / family.x_star)
            y = P / family.R[i]
            if s >= len(prefix) - 1 and y not in cdata.I:
                raise InfeasibleError(
                    "no family map covers the target (density failure)")
            choices.append(i)
            targets.append(y)
        expr = DEGENERATE
        for i in reversed(choices):
            expr = Merge([expr, family.exprs[i]])
        return BuildResult(expr, tuple(choices), tuple(targets))


def inner_gadget(build: BuildResult, depth: int) -> GadgetExpr:
    """The gadget hanging below the first ``depth`` merges of a Build result."""
    expr = build.expr
    for _ in range(depth):
        expr = expr.children[0]
    return expr


# ------------------------------------------------------------------ images

def sequence_images(choices: Sequence[int], family: DenseFamily, cdata: ContractionData,
                    maps: _Maps | None = None, start: Interval | None = None):
    """(f(start), g(I' x J), f(I')) for the composed maps of a choice sequence (outer first)."""
    maps = maps or _Maps(family.params)
    with family.params.context():
        f = start or cdata.I
        fp = cdata.I_prime
        R, M = cdata.I_prime, cdata.J
        for i in reversed(choices):
            Ri = Interval(family.R[i], family.R[i])
            f = maps.phi(_mul(f, Ri))
            fp = maps.phi(_mul(fp, Ri))
            R = maps.phi(_mul(R, Ri))
            M = maps.psi(R, M, family.M[i])
        return f, M, fp


def admissible_choices(y, family: DenseFamily, cdata: ContractionData, maps=None) -> range:
    """Indices i with y in phi_i(I), i.e. preimage K(y)/R_i inside I."""
    maps = maps or _Maps(family.params)
    P = maps.preimage_product(y)
    lo = _bisect.bisect_left(family.R, P / cdata.I.hi)
    hi = _bisect.bisect_right(family.R, P / cdata.I.lo)
    return range(lo, hi)


def family_images(x, t: int, family: DenseFamily, cdata: ContractionData,
                  max_sequences: int = 100_000) -> list:
    """All admissible choice sequences of length t for x, with f(I) and g(I' x J)."""
    maps = _Maps(family.params)
    with family.params.context():
        x = to_float(x)
        frontier = [((), x)]
        for _ in range(t):
            nxt = []
            for seq, y in frontier:
                P = maps.preimage_product(y)
                for i in admissible_choices(y, family, cdata, maps):
                    nxt.append((seq + (i,), P / family.R[i]))
                    if len(nxt) > max_sequences:
                        raise BudgetExceeded(
                            f"more than {max_sequences} sequences at depth {len(seq) + 1}")
            frontier = nxt
        out = []
        for seq, _ in frontier:
            f, g, _ = sequence_images(seq, family, cdata, maps)
            out.append((seq, f, g))
        return out


@dataclass(frozen=True)
class CaseOne:
    x: mpf
    seq1: tuple
    seq2: tuple
    M_hat: mpf
    g1: Interval
    g2: Interval
    f1: Interval
    f2: Interval


def detect_case1(params: SpinParams, family: DenseFamily, cdata: ContractionData,
                 t_max: int, x=None, frontier_cap: int = 16):
    """Search for two choice sequences for x whose g-images are disjoint.

    Sequences are grown one inner step at a time, branching on the member
    with the smallest gap, the largest gap and the canonical member.  Per
    depth only the ``frontier_cap`` sequences with the most extreme g-image
    endpoints survive.  The best pair over all depths up to t_max is kept,
    so a hit at t_max is also a hit at any larger t_max.
    """
    maps = _Maps(family.params)
    with family.params.context():
        x = family.x_star if x is None else to_float(x)
        if x not in cdata.I:
            raise InfeasibleError("x must lie in I")
        low = high = None  # (g.hi, seq, g, f) with minimal hi / (g.lo, ...) with maximal lo
        frontier = [((), x)]
        for _ in range(t_max):
            cand = {}
            for seq, y in frontier:
                adm = admissible_choices(y, family, cdata, maps)
                if len(adm) == 0:
                    continue
                ms = [(family.M[i], i) for i in adm]
                picks = {min(ms)[1], max(ms)[1], canonical_choice(y, family, maps)}
                P = maps.preimage_product(y)
                for i in sorted(picks):
                    s2 = seq + (i,)
                    if s2 not in cand:
                        cand[s2] = P / family.R[i]
            scored = []
            for seq, y in cand.items():
                f, g, _ = sequence_images(seq, family, cdata, maps)
                scored.append((seq, y, f, g))
                if low is None or g.hi < low[0]:
                    low = (g.hi, seq, g, f)
                if high is None or g.lo > high[0]:
                    high = (g.lo, seq, g, f)
            if low is not None and low[0] < high[0]:
                return CaseOne(x, low[1], high[1], high[0] - low[0], low[2], high[2],
                               low[3], high[3])
            half = max(1, frontier_cap // 2)
            by_hi = sorted(scored, key=lambda s: (s[3].hi, s[0]))[:half]
            by_lo = sorted(scored, key=lambda s: (-s[3].lo, s[0]))[:half]
            keep = {s[0]: s[1] for s in by_hi + by_lo}
            frontier = sorted(keep.items())
        return None
