"""Exact statistics of reduction composites by conditioning on port spins.

Given the spins of its ports, a phase-gadget copy is independent of the
rest of the composite, and each three-edge path with its two field-gadget
copies only sees its two end ports.  So the composite's partition function
is a tensor contraction: one tensor per gadget copy (indexed by its port
spins and its phase) and one 2x2 factor per path.  Gadget tensors come from
the enumeration oracle, field gadgets from the merge recursion.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from mpmath import mpf

from .core import BudgetExceeded, InfeasibleError, SpinParams, to_float
from .gadgets import Evaluator, materialize
from .oracle import ORACLE_LIMIT, _Model, marginals, phase_distribution
from .reduction import MINUS, PLUS, PhaseGadgetSpec, ReductionGraph

DECOMPOSITION_BUDGET = 2 ** 20
_LETTERS = string.ascii_letters


@dataclass
class GadgetTables:
    """Per port assignment and phase (index 0 is +): weight, size-weighted and occupancy tensors."""

    Z: np.ndarray
    size: np.ndarray
    occ: np.ndarray  # [vertex, ports..., phase]


def gadget_tables(spec: PhaseGadgetSpec, params: SpinParams,
                  budget: int = DECOMPOSITION_BUDGET) -> GadgetTables:
    ports = spec.ports
    if 2 ** len(ports) > budget:
        raise BudgetExceeded(f"2^{len(ports)} port assignments exceed the budget {budget}")
    tags = [1 if v < spec.n else 2 for v in range(spec.graph.n)]
    model = _Model(spec.graph, params, tags)
    plus_cls = [c for c, t in enumerate(model.class_tags) if t == 1]
    minus_cls = [c for c, t in enumerate(model.class_tags) if t == 2]
    shape = (2,) * len(ports) + (2,)
    Z = np.empty(shape, dtype=object)
    S = np.empty(shape, dtype=object)
    O = np.empty((spec.graph.n,) + shape, dtype=object)
    with params.context():
        for tau in itertools.product((0, 1), repeat=len(ports)):
            enum = model.enumerate(dict(zip(ports, tau)), want_occ=True, limit=ORACLE_LIMIT)
            counts, ks, m0, m1, occ = enum.decoded()
            w, denom = model.weights(ks, m0, m1)
            conv = _converter(model.exact, denom)
            z = [0, 0]
            s = [0, 0]
            o = [[0, 0] for _ in range(spec.graph.n)]
            rows = ks.tolist()
            occ = occ.tolist()
            for idx, (c, row, x) in enumerate(zip(counts.tolist(), rows, w)):
                ph = 0 if sum(row[i] for i in plus_cls) >= sum(row[i] for i in minus_cls) else 1
                z[ph] += c * x
                s[ph] += c * x * sum(row)
                for v in range(spec.graph.n):
                    o[v][ph] += occ[v][idx] * x
            for ph in (0, 1):
                Z[tau + (ph,)] = conv(z[ph])
                S[tau + (ph,)] = conv(s[ph])
                for v in range(spec.graph.n):
                    O[(v,) + tau + (ph,)] = conv(o[v][ph])
    return GadgetTables(Z, S, O)


def _converter(exact, denom):
    if exact:
        return lambda x: Fraction(x, denom)
    return lambda x: mpf(x) / denom


@dataclass
class PathFactors:
    """2x2 factors in the end-port spins: weight, expected occupied count, P(t1 = 1), P(t2 = 1)."""

    P: np.ndarray
    size: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


def path_factors(rg: ReductionGraph, params: SpinParams) -> PathFactors:
    ev = Evaluator(params, check=False)(rg.tree)
    b, g = (params.beta, params.gamma) if params.exact else (to_float(params.beta), to_float(params.gamma))
    A = [[b, 1], [1, g]]
    w = [ev.Zout, ev.Zin]
    e = [ev.e_out, ev.e_in]
    P = np.zeros((2, 2), dtype=object)
    S = np.zeros((2, 2), dtype=object)
    T1 = np.zeros((2, 2), dtype=object)
    T2 = np.zeros((2, 2), dtype=object)
    for a, c in itertools.product((0, 1), repeat=2):
        for s1, s2 in itertools.product((0, 1), repeat=2):
            x = A[a][s1] * w[s1] * A[s1][s2] * w[s2] * A[s2][c]
            P[a, c] += x
            S[a, c] += x * (e[s1] + e[s2])
            T1[a, c] += x * s1
            T2[a, c] += x * s2
    return PathFactors(P, S, T1, T2)


class _Network:
    def __init__(self, rg: ReductionGraph, params: SpinParams, budget: int):
        self.rg = rg
        self.params = params
        self.tables = gadget_tables(rg.gadget, params, budget)
        self.paths = path_factors(rg, params)
        var = {}
        for v, gv in enumerate(rg.gadget_vertices):
            for q in rg.gadget.ports:
                var[gv[q]] = len(var)
            var[("Y", v)] = len(var)
        if len(var) > len(_LETTERS):
            raise BudgetExceeded(f"{len(var)} contraction indices exceed {len(_LETTERS)}")
        self.var = var
        self.gadget_idx = ["".join(_LETTERS[var[gv[q]]] for q in rg.gadget.ports)
                           + _LETTERS[var[("Y", v)]] for v, gv in enumerate(rg.gadget_vertices)]
        self.path_idx = [_LETTERS[var[p.port_u]] + _LETTERS[var[p.port_v]] for p in rg.paths]

    def contract(self, gadget_override=None, path_override=None, open_phases=False):
        ops, subs = [], []
        for v, idx in enumerate(self.gadget_idx):
            t = gadget_override.get(v) if gadget_override else None
            ops.append(self.tables.Z if t is None else t)
            subs.append(idx)
        for j, idx in enumerate(self.path_idx):
            t = path_override.get(j) if path_override else None
            ops.append(self.paths.P if t is None else t)
            subs.append(idx)
        out = ""
        if open_phases:
            out = "".join(_LETTERS[self.var[("Y", v)]] for v in range(len(self.gadget_idx)))
        with self.params.context():
            return np.einsum(",".join(subs) + "->" + out, *ops, optimize="greedy")

    def Z(self):
        return self.contract()[()]

    def hat_size(self):
        return sum(self.contract({v: self.tables.size})[()] for v in range(len(self.gadget_idx)))

    def path_size(self):
        return sum(self.contract(path_override={j: self.paths.size})[()]
                   for j in range(len(self.path_idx)))

    def internal_occupation(self):
        return sum(self.contract(path_override={j: self.paths.t1})[()]
                   + self.contract(path_override={j: self.paths.t2})[()]
                   for j in range(len(self.path_idx)))


def _div(a, b):
    return a / b


def _locate(rg: ReductionGraph, v: int):
    for h, gv in enumerate(rg.gadget_vertices):
        if gv[0] <= v <= gv[-1]:
            return ("gadget", h, v - gv[0])
    for j, copies in enumerate(rg.tree_vertices):
        for which, ids in enumerate(copies):
            if v in ids:
                return ("tree", j, which, ids.index(v))
    raise InfeasibleError(f"vertex {v} is not in the composite")


def decomposed_evaluate(rg: ReductionGraph, params: SpinParams, target="Z",
                        budget: int = DECOMPOSITION_BUDGET):
    """Z, the magnetization, or ("marginal", v) of the composite, exactly."""
    net = _Network(rg, params, budget)
    with params.context():
        Z = net.Z()
        if target == "Z":
            return Z
        if target == "magnetization":
            return _div(net.hat_size() + net.path_size(), Z)
        kind, v = target
        if kind != "marginal":
            raise InfeasibleError(f"unknown target {target!r}")
        where = _locate(rg, int(v))
        if where[0] == "gadget":
            _, h, local = where
            return _div(net.contract({h: net.tables.occ[local]})[()], Z)
        _, j, which, local = where
        t_one = net.contract(path_override={j: net.paths.t1 if which == 0 else net.paths.t2})[()]
        p1 = _div(t_one, Z)
        if local == 0:
            return p1
        # a non-root tree vertex only sees its root
        tgraph, root = materialize(rg.tree, limit=ORACLE_LIMIT)
        m1 = marginals(tgraph, params, pins={root: 1})[local]
        m0 = marginals(tgraph, params, pins={root: 0})[local]
        return p1 * m1 + (1 - p1) * m0


def _phase_key(bits) -> str:
    return "".join(PLUS if b == 0 else MINUS for b in bits)


def phase_statistics(composite, params: SpinParams, budget: int = DECOMPOSITION_BUDGET):
    """Exact phase-vector distribution and Avg-Cut.

    For a lone phase gadget the distribution is over {+, -} and Avg-Cut is 0.
    """
    if isinstance(composite, PhaseGadgetSpec):
        dist = phase_distribution(composite.graph, composite.plus, composite.minus, params)
        return dist, 0 * dist["+"]
    net = _Network(composite, params, budget)
    with params.context():
        joint = net.contract(open_phases=True)
        Z = sum(joint.flat)
        dist = {}
        avg = 0
        for bits in itertools.product((0, 1), repeat=composite.H.n):
            p = _div(joint[bits], Z)
            dist[_phase_key(bits)] = p
            cut = sum(1 for u, v in composite.H.edges if bits[u] != bits[v])
            avg += p * cut
        return dict(sorted(dist.items())), avg


@dataclass
class CompositeStats:
    Z: object
    magnetization: object
    hat_magnetization: object
    hat_marginals: list
    internal_occupation: object
    phase_distribution: dict
    avg_cut: object


def composite_statistics(rg: ReductionGraph, params: SpinParams,
                         budget: int = DECOMPOSITION_BUDGET) -> CompositeStats:
    """Everything the cancellation check needs, from one set of tables."""
    net = _Network(rg, params, budget)
    with params.context():
        Z = net.Z()
        hat = net.hat_size()
        mag = _div(hat + net.path_size(), Z)
        hat_marg = []
        for h, gv in enumerate(rg.gadget_vertices):
            for local in range(len(gv)):
                hat_marg.append(_div(net.contract({h: net.tables.occ[local]})[()], Z))
        occ_t = _div(net.internal_occupation(), Z)
    dist, avg = phase_statistics(rg, params, budget)
    return CompositeStats(Z, mag, _div(hat, Z), hat_marg, occ_t, dist, avg)
