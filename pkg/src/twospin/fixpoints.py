"""Critical points, tree fixpoints and the uniqueness test.

All root finding is plain bisection on a certified sign change, capped at
``4 * precision`` halvings.  The tree recursion used throughout is

    f(x) = lam * ((gamma*x + 1) / (x + beta)) ** (delta - 1)

which maps the occupied/unoccupied ratio at the children of a vertex of the
(delta-1)-ary tree to the ratio at the vertex.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mpf

from .core import (ConvergenceError, InfeasibleError, Scalar, SpinParams,
                   to_float)
from .gadgets import omega


class Verdict(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "boundary-undecided"


@dataclass(frozen=True)
class FixpointResult:
    x_star: Scalar
    derivative_abs: Scalar
    bracket: tuple
    iterations: int


def hardcore_lambda_c(delta: int) -> Fraction:
    """(delta-1)^(delta-1) / (delta-2)^delta."""
    if delta < 3:
        raise InfeasibleError("delta must be at least 3")
    return Fraction((delta - 1) ** (delta - 1), (delta - 2) ** delta)


def ising_beta_c(delta: int) -> Fraction:
    if delta < 3:
        raise InfeasibleError("delta must be at least 3")
    return Fraction(delta - 2, delta)


def _need_delta(params: SpinParams) -> int:
    if params.delta is None:
        raise InfeasibleError("this operation needs the degree bound delta")
    return params.delta


def bisect(g, lo, hi, prec: int):
    """Root of g on [lo, hi] given g(lo) and g(hi) of opposite signs.

    Returns (root, (lo, hi), iterations)."""
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo, (lo, lo), 0
    if ghi == 0:
        return hi, (hi, hi), 0
    if (glo > 0) == (ghi > 0):
        raise ConvergenceError("no sign change on the bracket")
    tol = mpf(2) ** (-prec)
    cap = 4 * prec
    for it in range(1, cap + 1):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi or hi - lo <= tol * max(1, abs(mid)):
            return mid, (lo, hi), it
        gm = g(mid)
        if gm == 0:
            return mid, (mid, mid), it
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge in {cap} steps")


def _upper_bracket(g, start):
    """Double ``start`` until g becomes negative (g decreasing)."""
    hi = start
    for _ in range(4096):
        if g(hi) < 0:
            return hi
        hi *= 2
    raise ConvergenceError("could not bracket the fixpoint")


def tree_map(params: SpinParams):
    """(f, f') for the floated parameters; call inside params.context()."""
    d = _need_delta(params)
    b, g, lam = (to_float(v) for v in (params.beta, params.gamma, params.lam))

    def f(x):
        return lam * ((g * x + 1) / (x + b)) ** (d - 1)

    def fprime(x):
        return lam * (d - 1) * ((g * x + 1) / (x + b)) ** (d - 2) * (b * g - 1) / (x + b) ** 2

    return f, fprime


def uniqueness_fixpoint(params: SpinParams) -> FixpointResult:
    """The positive fixpoint of the tree map and |f'| there."""
    with params.context():
        f, fprime = tree_map(params)
        h = lambda x: f(x) - x
        lo = mpf(0)
        hi = _upper_bracket(h, mpf(1))
        x, bracket, its = bisect(h, lo, hi, params.precision)
        return FixpointResult(x, abs(fprime(x)), bracket, its)


def in_nonuniqueness(params: SpinParams) -> Verdict:
    """Whether |f'(x*)| > 1, with an undecided band of 2^(-precision/4) around 1."""
    res = uniqueness_fixpoint(params)
    with params.context():
        band = mpf(2) ** (-params.precision // 4)
        gap = res.derivative_abs - 1
        if abs(gap) <= band:
            return Verdict.UNDECIDED
        return Verdict.YES if gap > 0 else Verdict.NO


def in_star_region(params: SpinParams) -> bool:
    """Non-uniqueness excluding the trivial point beta = gamma, lambda = 1."""
    if params.is_trivial_ising:
        return False
    return in_nonuniqueness(params) is Verdict.YES


def ode_fixpoint(params: SpinParams):
    """(x*, omega*) with x* = (1 + g lam x*^2)/(b + lam x*^2)."""
    b, g, lam = params.beta, params.gamma, params.lam
    if params.exact and lam * (1 - g) == 1 - b:
        x = Fraction(1)
        return x, omega(x, params)
    with params.context():
        bf, gf, lf = (to_float(v) for v in (b, g, lam))
        h = lambda x: (1 + gf * lf * x * x) / (bf + lf * x * x) - x
        hi = _upper_bracket(h, mpf(1))
        x, _, _ = bisect(h, mpf(0), hi, params.precision)
        return x, omega(x, params.floated())


@dataclass(frozen=True)
class TwoCycle:
    x: Scalar
    y: Scalar
    q_minus: Scalar
    q_plus: Scalar

    def __iter__(self):
        return iter((self.x, self.y, self.q_minus, self.q_plus))


def two_cycle_fixpoints(params: SpinParams) -> TwoCycle:
    """The solution x < y of x = f(y), y = f(x), and q = ratio/(1+ratio)."""
    if in_nonuniqueness(params) is not Verdict.YES:
        raise InfeasibleError("parameters are not in the non-uniqueness region; no 2-cycle")
    fx = uniqueness_fixpoint(params).x_star
    with params.context():
        f, _ = tree_map(params)
        h = lambda x: f(f(x)) - x
        floor = mpf(2) ** (-params.precision // 2) * fx
        step = fx / 2
        while h(fx - step) >= 0:
            step /= 2
            if step < floor:
                raise ConvergenceError("2-cycle is too close to the fixpoint at this precision")
        x, _, _ = bisect(h, mpf(0), fx - step, params.precision)
        y = f(x)
        return TwoCycle(x, y, x / (1 + x), y / (1 + y))
