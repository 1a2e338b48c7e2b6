"""Gadgets whose fields squeeze the merge fixpoint x* from both sides."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from mpmath import mpf

from ..core import ConvergenceError, InfeasibleError, SpinParams, to_float
from ..fixpoints import ode_fixpoint
from ..gadgets import DEGENERATE, TRIANGLE, Evaluator, GadgetExpr, Merge


@dataclass(frozen=True)
class BoundingStep:
    lower: GadgetExpr
    upper: GadgetExpr
    L: mpf
    U: mpf

    @property
    def ratio(self):
        return self.U / self.L


def _initial(params: SpinParams, ev: Evaluator, x_star):
    edge = Merge([])
    if params.is_trivial_ising:
        raise InfeasibleError("at beta = gamma, lambda = 1 every tree gadget has field 1")
    r_edge = ev.field(edge)
    if abs(r_edge - 1) <= mpf(2) ** (-ev.params.precision // 2):
        if not params.triangle_admissible():
            raise InfeasibleError("every tree gadget has field 1 at these parameters "
                                  "and the triangle gadget is not available")
        r_tri = ev.field(TRIANGLE)
        return (TRIANGLE, edge) if r_tri < 1 else (edge, TRIANGLE)
    if x_star < 1:
        return edge, DEGENERATE
    return DEGENERATE, edge


def bounding_sequence(params: SpinParams, max_steps: int = 10_000,
                      evaluator: Evaluator | None = None) -> Iterator[BoundingStep]:
    """Yield brackets L_i <= x* <= U_i with U_i/L_i strictly decreasing.

    Each step merges two copies drawn from the current pair: with
    m = phi(U L), either (m, phi(L^2)) or (phi(U^2), m) brackets x*.
    """
    ev = evaluator or Evaluator(params.floated() if params.exact else params, check=False)
    with ev.params.context():
        x_star = to_float(ode_fixpoint(params)[0])
        lo, hi = _initial(params, ev, x_star)
        L, U = ev.field(lo), ev.field(hi)
        yield BoundingStep(lo, hi, L, U)
        for _ in range(max_steps):
            mid = Merge([hi, lo])
            m = ev.field(mid)
            if m <= x_star:
                lo, hi = mid, Merge([lo, lo])
            else:
                lo, hi = Merge([hi, hi]), mid
            L2, U2 = ev.field(lo), ev.field(hi)
            if not L2 < U2 or U2 / L2 >= U / L:
                raise ConvergenceError("bracket stopped shrinking at this precision")
            L, U = L2, U2
            yield BoundingStep(lo, hi, L, U)


def bounding_pair(params: SpinParams, eps1, eps2, max_steps: int = 10_000,
                  evaluator: Evaluator | None = None) -> tuple[GadgetExpr, GadgetExpr]:
    """Two gadgets with |R1 - x*| < eps1 and |R2 - x*| < eps2 |R1 - x*|."""
    ev = evaluator or Evaluator(params.floated() if params.exact else params, check=False)
    with ev.params.context():
        x_star = to_float(ode_fixpoint(params)[0])
        eps1, eps2 = to_float(eps1), to_float(eps2)
        first = None
        d1 = None
        for step in bounding_sequence(params, max_steps, ev):
            if first is None:
                if step.ratio <= 1 + eps1 / x_star:
                    # the endpoint farther from x* is certainly different from it
                    dl, du = x_star - step.L, step.U - x_star
                    first = step.lower if dl >= du else step.upper
                    d1 = max(dl, du)
                continue
            if step.ratio <= 1 + eps2 * d1 / x_star:
                dl, du = x_star - step.L, step.U - x_star
                second = step.lower if dl <= du else step.upper
                return first, second
        raise ConvergenceError("bounding sequence did not reach the requested closeness")
