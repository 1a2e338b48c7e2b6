"""Brute-force Gibbs oracle for small graphs.

Every configuration is enumerated by the kernel in :mod:`twospin._kernel`,
which only counts configurations per (occupied-per-class, m0, m1) key.  Exact
weights are then assembled with integer arithmetic over a common
denominator, so rational inputs give rational outputs with no rounding.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import _kernel
from .core import (Graph, InfeasibleError, Scalar, SpinParams, to_float)

ORACLE_LIMIT = 25


@dataclass
class Enumeration:
    """Counts of configurations per key, plus per-vertex occupied counts."""

    hist: np.ndarray
    occ: np.ndarray | None
    class_sizes: tuple
    n_edges: int

    def decoded(self):
        """(counts, k[key, class], m0, m1, occ columns) over the keys that occur."""
        keys = np.flatnonzero(self.hist)
        e1 = self.n_edges + 1
        rest = keys.copy()
        m1 = rest % e1
        rest //= e1
        m0 = rest % e1
        rest //= e1
        ks = np.zeros((len(keys), len(self.class_sizes)), dtype=np.int64)
        for c in range(len(self.class_sizes) - 1, -1, -1):
            base = self.class_sizes[c] + 1
            ks[:, c] = rest % base
            rest //= base
        occ = self.occ[:, keys] if self.occ is not None else None
        return self.hist[keys], ks, m0, m1, occ


def _csr(graph: Graph):
    indptr = np.zeros(graph.n + 1, dtype=np.int32)
    indices = []
    for v, nbrs in enumerate(graph.adjacency):
        indices.extend(nbrs)
        indptr[v + 1] = len(indices)
    return indptr, np.asarray(indices, dtype=np.int32)


def _run_kernel(args):
    n, indptr, indices, vclass, sizes, pins, want_occ = args
    return _kernel.histogram(n, indptr, indices, vclass, sizes, pins, want_occ)


def enumerate_graph(graph: Graph, vclass: Sequence[int], class_sizes: Sequence[int],
                    pins: Mapping[int, int] | None = None, want_occ: bool = False,
                    jobs: int = 1, limit: int = ORACLE_LIMIT) -> Enumeration:
    free = graph.n - len(pins or {})
    if graph.n > limit:
        raise InfeasibleError(f"graph has {graph.n} vertices, enumeration limit is {limit}")
    indptr, indices = _csr(graph)
    vclass = np.ascontiguousarray(vclass, dtype=np.int32)
    sizes = np.ascontiguousarray(class_sizes, dtype=np.int64)
    pin_arr = np.full(graph.n, -1, dtype=np.int8)
    for v, s in (pins or {}).items():
        if s not in (0, 1):
            raise InfeasibleError("pins must be 0 or 1")
        pin_arr[v] = s
    split = 0
    if jobs > 1 and free > 12:
        split = min(free - 10, max(1, math.ceil(math.log2(jobs))) + 2)
    if split == 0:
        hist, occ = _kernel.histogram(graph.n, indptr, indices, vclass, sizes, pin_arr, want_occ)
    else:
        free_vs = np.flatnonzero(pin_arr < 0)[-split:]
        tasks = []
        for mask in range(1 << split):
            p = pin_arr.copy()
            for b, v in enumerate(free_vs):
                p[v] = (mask >> b) & 1
            tasks.append((graph.n, indptr, indices, vclass, sizes, p, want_occ))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_kernel, tasks))
        # integer sums: independent of worker scheduling
        hist = sum(h for h, _ in parts)
        occ = sum(o for _, o in parts) if want_occ else None
    return Enumeration(np.asarray(hist), None if occ is None else np.asarray(occ),
                       tuple(int(s) for s in class_sizes), len(graph.edges))


class _Model:
    """Vertex classes and weight tables for one (graph, params) pair.

    ``tags`` optionally splits vertices into extra classes (used to track
    occupied counts on subsets such as the two sides of a phase gadget).
    """

    def __init__(self, graph: Graph, params: SpinParams, tags: Sequence[int] | None = None):
        self.graph = graph
        self.params = params
        fields = [graph.vertex_field(v, params.lam) for v in range(graph.n)]
        self.exact = params.exact and all(isinstance(f, Fraction) for f in fields)
        classes: dict = {}
        vclass = []
        for v in range(graph.n):
            key = (fields[v], tags[v] if tags is not None else 0)
            if key not in classes:
                classes[key] = len(classes)
            vclass.append(classes[key])
        self.vclass = vclass
        self.class_fields = [f for f, _ in classes]
        self.class_tags = [t for _, t in classes]
        self.class_sizes = [vclass.count(c) for c in range(len(classes))]

    def enumerate(self, pins=None, want_occ=False, jobs=1, limit=ORACLE_LIMIT) -> Enumeration:
        return enumerate_graph(self.graph, self.vclass, self.class_sizes, pins, want_occ,
                               jobs, limit)

    def weights(self, ks, m0, m1):
        """Per-key weight numerators and the common denominator."""
        E = len(self.graph.edges)
        if self.exact:
            b, g = self.params.beta, self.params.gamma
            tb = [b.numerator ** i * b.denominator ** (E - i) for i in range(E + 1)]
            tg = [g.numerator ** i * g.denominator ** (E - i) for i in range(E + 1)]
            denom = b.denominator ** E * g.denominator ** E
            tables = []
            for f, n_c in zip(self.class_fields, self.class_sizes):
                tables.append([f.numerator ** i * f.denominator ** (n_c - i) for i in range(n_c + 1)])
                denom *= f.denominator ** n_c
        else:
            b, g = to_float(self.params.beta), to_float(self.params.gamma)
            tb = [b ** i for i in range(E + 1)]
            tg = [g ** i for i in range(E + 1)]
            denom = 1
            tables = [[to_float(f) ** i for i in range(n_c + 1)]
                      for f, n_c in zip(self.class_fields, self.class_sizes)]
        out = []
        for row, a, c in zip(ks.tolist(), m0.tolist(), m1.tolist()):
            w = tb[a] * tg[c]
            for t, k in zip(tables, row):
                w = w * t[k]
            out.append(w)
        return out, denom

    def sums(self, enum: Enumeration):
        """Weighted sums needed by most statistics: Z numerator, size numerator, occupancy."""
        counts, ks, m0, m1, occ = enum.decoded()
        w, denom = self.weights(ks, m0, m1)
        counts = [int(c) for c in counts]
        sizes = ks.sum(axis=1).tolist()
        z = sum(c * x for c, x in zip(counts, w))
        s = sum(c * x * k for c, x, k in zip(counts, w, sizes))
        occ_sums = None
        if occ is not None:
            occ_sums = [sum(int(o) * x for o, x in zip(row, w)) for row in occ.tolist()]
        return z, s, occ_sums, denom, (counts, ks, w)

    def ratio(self, num, den):
        if den == 0:
            raise InfeasibleError("conditioning event has zero weight")
        if self.exact:
            return Fraction(num, den)
        with self.params.context():
            return num / den


def _ctx(params):
    return params.context()


def partition_function(graph: Graph, params: SpinParams, pins=None, jobs=1,
                       limit=ORACLE_LIMIT) -> Scalar:
    model = _Model(graph, params)
    with _ctx(params):
        z, _, _, denom, _ = model.sums(model.enumerate(pins, jobs=jobs, limit=limit))
        return model.ratio(z, denom) if model.exact else z / denom


def magnetization(graph: Graph, params: SpinParams, jobs=1, limit=ORACLE_LIMIT) -> Scalar:
    """E|sigma| under the Gibbs distribution."""
    return conditional_expectation(graph, params, {}, "size", jobs=jobs, limit=limit)


def marginals(graph: Graph, params: SpinParams, pins=None, jobs=1, limit=ORACLE_LIMIT) -> list:
    """P(sigma(v) = 1) for every vertex (optionally conditioned on pins)."""
    model = _Model(graph, params)
    with _ctx(params):
        z, _, occ, _, _ = model.sums(model.enumerate(pins, want_occ=True, jobs=jobs, limit=limit))
        return [model.ratio(o, z) for o in occ]


def conditional_expectation(graph: Graph, params: SpinParams, pin: Mapping[int, int],
                            statistic="size", jobs=1, limit=ORACLE_LIMIT) -> Scalar:
    """E[statistic | pinned spins]; statistic is "size" or ("indicator", v)."""
    model = _Model(graph, params)
    with _ctx(params):
        if statistic == "size":
            z, s, _, _, _ = model.sums(model.enumerate(pin, jobs=jobs, limit=limit))
            return model.ratio(s, z)
        kind, v = statistic
        if kind != "indicator":
            raise InfeasibleError(f"unknown statistic {statistic!r}")
        z, _, occ, _, _ = model.sums(model.enumerate(pin, want_occ=True, jobs=jobs, limit=limit))
        return model.ratio(occ[v], z)


def gadget_statistics(graph: Graph, root: int, params: SpinParams, limit=ORACLE_LIMIT):
    """(Zin, Zout, E[|s| | root=1], E[|s| | root=0]) by enumeration."""
    model = _Model(graph, params)
    with _ctx(params):
        out = []
        for s in (1, 0):
            z, tot, _, denom, _ = model.sums(model.enumerate({root: s}, limit=limit))
            zz = model.ratio(z, denom) if model.exact else z / denom
            out.append((zz, model.ratio(tot, z)))
    (zin, e_in), (zout, e_out) = out
    return zin, zout, e_in, e_out


def phase_distribution(graph: Graph, plus: Sequence[int], minus: Sequence[int],
                       params: SpinParams, pins=None, limit=ORACLE_LIMIT, jobs=1):
    """Probabilities of phase + (|s on plus| >= |s on minus|) and phase -."""
    tags = [0] * graph.n
    for v in plus:
        tags[v] = 1
    for v in minus:
        tags[v] = 2
    model = _Model(graph, params, tags)
    with _ctx(params):
        z, _, _, _, (counts, ks, w) = model.sums(model.enumerate(pins, jobs=jobs, limit=limit))
        plus_cls = [c for c, t in enumerate(model.class_tags) if t == 1]
        minus_cls = [c for c, t in enumerate(model.class_tags) if t == 2]
        zp = 0
        for c, row, x in zip(counts, ks.tolist(), w):
            if sum(row[i] for i in plus_cls) >= sum(row[i] for i in minus_cls):
                zp = zp + c * x
        p_plus = model.ratio(zp, z)
        return {"+": p_plus, "-": 1 - p_plus}


def perturbation_gap(graph: Graph, params: SpinParams, S: Sequence[int], lambda1, lambda2,
                     v: int, limit=ORACLE_LIMIT):
    """Measured |E2[s(v)] - E1[s(v)]| when the vertices of S get field lambda1
    versus lambda2, together with the bound 2|S||lambda2/lambda1 - 1|."""
    from .core import as_scalar
    lambda1, lambda2 = as_scalar(lambda1), as_scalar(lambda2)
    base = dict(graph.fields)
    m = []
    for lam_s in (lambda1, lambda2):
        fields = dict(base)
        fields.update({int(u): lam_s for u in S})
        m.append(marginals(graph.with_fields(fields), params, limit=limit)[v])
    with _ctx(params):
        exact = all(isinstance(x, Fraction) for x in (lambda1, lambda2, *m))
        if exact:
            measured = abs(m[1] - m[0])
            bound = 2 * len(set(S)) * abs(lambda2 / lambda1 - 1)
        else:
            measured = abs(to_float(m[1]) - to_float(m[0]))
            bound = 2 * len(set(S)) * abs(to_float(lambda2) / to_float(lambda1) - 1)
    return measured, bound


def default_jobs() -> int:
    return max(1, min(8, os.cpu_count() or 1))
