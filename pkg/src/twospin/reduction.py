"""Max-Cut reduction: phase gadgets, the composite graph and the A/B/C/D algebra.

A phase gadget is a bipartite graph with sides U+ and U- (vertices 0..n-1 and
n..2n-1) obtained from a delta-regular bipartite graph by deleting a matching
of size ell; the matched vertices are the ports W+ and W-.  The composite
replaces every vertex of a Max-Cut instance H by a copy of the gadget and
every edge of H by k three-edge paths between + ports and k between - ports,
with a field gadget hung off each of the two internal path vertices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import networkx as nx
from mpmath import mpf

from .core import (Graph, InfeasibleError, Scalar, SpinParams, format_scalar,
                   to_float)
from .gadgets import GadgetEval, GadgetExpr, materialize
from .oracle import ORACLE_LIMIT, _Model

PLUS, MINUS = "+", "-"


# ------------------------------------------------------------------ phase gadgets

@dataclass(frozen=True)
class PhaseGadgetSpec:
    graph: Graph
    n: int
    ports_plus: tuple
    ports_minus: tuple
    delta: int
    q_plus: Scalar | None = None
    q_minus: Scalar | None = None
    epsilon_measured: Scalar | None = None

    @property
    def ell(self) -> int:
        return len(self.ports_plus)

    @property
    def plus(self) -> tuple:
        return tuple(range(self.n))

    @property
    def minus(self) -> tuple:
        return tuple(range(self.n, 2 * self.n))

    @property
    def ports(self) -> tuple:
        return self.ports_plus + self.ports_minus

    def to_json(self) -> dict:
        out = {"graph": self.graph.to_json(), "n": self.n, "delta": self.delta,
               "ports_plus": list(self.ports_plus), "ports_minus": list(self.ports_minus)}
        for key in ("q_plus", "q_minus", "epsilon_measured"):
            val = getattr(self, key)
            if val is not None:
                out[key] = format_scalar(val)
        return out

    @classmethod
    def from_json(cls, data) -> "PhaseGadgetSpec":
        from .core import parse_scalar
        extra = {k: parse_scalar(str(data[k])) for k in ("q_plus", "q_minus", "epsilon_measured")
                 if k in data}
        spec = cls(Graph.from_json(data["graph"]), int(data["n"]), tuple(data["ports_plus"]),
                   tuple(data["ports_minus"]), int(data["delta"]), **extra)
        problems = phase_gadget_problems(spec)
        if problems:
            raise InfeasibleError("; ".join(problems))
        return spec


def phase_gadget(biadjacency: Sequence[Sequence[int]], matching: Sequence[tuple],
                 delta: int) -> PhaseGadgetSpec:
    """Gadget from an n x n 0/1 matrix (rows U+, columns U-) minus the matched pairs."""
    n = len(biadjacency)
    removed = {(int(i), int(j)) for i, j in matching}
    edges = []
    for i, row in enumerate(biadjacency):
        for j, a in enumerate(row):
            if a and (i, j) not in removed:
                edges.append((i, n + j))
            elif not a and (i, j) in removed:
                raise InfeasibleError(f"matching pair {(i, j)} is not an edge")
    pp = tuple(sorted(i for i, _ in removed))
    pm = tuple(sorted(n + j for _, j in removed))
    spec = PhaseGadgetSpec(Graph(2 * n, tuple(edges)), n, pp, pm, delta)
    problems = phase_gadget_problems(spec)
    if problems:
        raise InfeasibleError("; ".join(problems))
    return spec


def complete_bipartite_gadget(n: int, ell: int) -> PhaseGadgetSpec:
    """K_{n,n} minus the matching {(i, i) : i < ell}; delta = n."""
    if not 0 <= ell <= n:
        raise InfeasibleError("need 0 <= ell <= n")
    return phase_gadget([[1] * n for _ in range(n)], [(i, i) for i in range(ell)], n)


def phase_gadget_problems(spec: PhaseGadgetSpec) -> list:
    g, n, d = spec.graph, spec.n, spec.delta
    out = []
    if g.n != 2 * n:
        out.append(f"gadget has {g.n} vertices, expected {2 * n}")
        return out
    if len(spec.ports_plus) != len(spec.ports_minus):
        out.append("port sides differ in size")
    ports = set(spec.ports)
    for u, v in g.edges:
        if (u < n) == (v < n):
            out.append(f"edge {(u, v)} is inside one side")
    for p in spec.ports_plus:
        if not 0 <= p < n:
            out.append(f"+ port {p} is not on the + side")
    for p in spec.ports_minus:
        if not n <= p < 2 * n:
            out.append(f"- port {p} is not on the - side")
    for v in range(g.n):
        want = d - 1 if v in ports else d
        if g.degree(v) != want:
            out.append(f"vertex {v} has degree {g.degree(v)}, expected {want}")
    return out


def port_product(spec: PhaseGadgetSpec, phase: str, tau: Sequence[int]):
    """Q^{phase}(tau) for tau over spec.ports (+ ports first)."""
    qp, qm = (spec.q_plus, spec.q_minus) if phase == PLUS else (spec.q_minus, spec.q_plus)
    out = 1
    for idx, t in enumerate(tau):
        q = qp if idx < spec.ell else qm
        out = out * (q if t else 1 - q)
    return out


def measure_phase_gadget(spec: PhaseGadgetSpec, params: SpinParams, q_plus=None, q_minus=None,
                         limit: int = ORACLE_LIMIT) -> PhaseGadgetSpec:
    """Fill in q+/q- (from the tree 2-cycle unless given) and the measured epsilon.

    epsilon is the smallest value satisfying both balance of the two phases
    and the (1 +- epsilon) product approximation of the port distribution.
    """
    if q_plus is None or q_minus is None:
        from .fixpoints import two_cycle_fixpoints
        cyc = two_cycle_fixpoints(params.with_delta(spec.delta))
        q_plus, q_minus = cyc.q_plus, cyc.q_minus
    spec = replace(spec, q_plus=q_plus, q_minus=q_minus)
    tags = [1 if v < spec.n else 2 for v in range(spec.graph.n)]
    model = _Model(spec.graph, params, tags)
    plus_cls = [c for c, t in enumerate(model.class_tags) if t == 1]
    minus_cls = [c for c, t in enumerate(model.class_tags) if t == 2]
    table = {}
    with params.context():
        for tau in itertools.product((0, 1), repeat=len(spec.ports)):
            pins = dict(zip(spec.ports, tau))
            _, _, _, _, (counts, ks, w) = model.sums(model.enumerate(pins, limit=limit))
            zp = zm = 0
            for c, row, x in zip(counts, ks.tolist(), w):
                if sum(row[i] for i in plus_cls) >= sum(row[i] for i in minus_cls):
                    zp += c * x
                else:
                    zm += c * x
            table[tau] = (zp, zm)
        total_p = sum(v[0] for v in table.values())
        total_m = sum(v[1] for v in table.values())
        total = total_p + total_m
        exact = model.exact and all(isinstance(q, Fraction) for q in (q_plus, q_minus))
        conv = (lambda a, b: Fraction(a, b)) if exact else (lambda a, b: mpf(a) / b)
        eps = abs(2 * conv(total_p, total) - 1)
        for tau, (zp, zm) in table.items():
            for phase, z, tot in ((PLUS, zp, total_p), (MINUS, zm, total_m)):
                if tot == 0:
                    continue
                q = port_product(spec, phase, tau)
                ratio = conv(z, tot) / (q if exact else to_float(q))
                eps = max(eps, abs(ratio - 1))
    return replace(spec, epsilon_measured=eps)


def _regular_biadjacencies(n: int, d: int):
    """n x n 0/1 matrices with all row and column sums d, rows non-increasing as bit strings."""
    rows = [r for r in itertools.combinations(range(n), d)]
    rows.sort(reverse=True)

    def rec(prefix, col_sums, start):
        if len(prefix) == n:
            yield prefix
            return
        left = n - len(prefix)
        for idx in range(start, len(rows)):
            r = rows[idx]
            new = list(col_sums)
            ok = True
            for c in r:
                new[c] += 1
                if new[c] > d:
                    ok = False
                    break
            if not ok or any(d - s > left - 1 for s in new):
                continue
            yield from rec(prefix + [r], new, idx)

    for mat in rec([], [0] * n, 0):
        yield [[1 if j in r else 0 for j in range(n)] for r in mat]


def _gadget_key(spec: PhaseGadgetSpec):
    g = nx.Graph()
    ports = set(spec.ports)
    for v in range(spec.graph.n):
        g.add_node(v, kind=("+" if v < spec.n else "-") + ("p" if v in ports else ""))
    g.add_edges_from(spec.graph.edges)
    return g


def enumerate_phase_gadgets(delta: int, ell: int, n: int, max_candidates: int = 10_000):
    """Members of the gadget class up to isomorphism (respecting sides and ports)."""
    if n < delta or ell > n:
        return []
    seen: dict = {}
    out = []
    for mat in _regular_biadjacencies(n, delta):
        edges = [(i, j) for i in range(n) for j in range(n) if mat[i][j]]
        for matching in itertools.combinations(edges, ell):
            if len({i for i, _ in matching}) < ell or len({j for _, j in matching}) < ell:
                continue
            spec = phase_gadget(mat, matching, delta)
            g = _gadget_key(spec)
            h = nx.weisfeiler_lehman_graph_hash(g, node_attr="kind")
            bucket = seen.setdefault(h, [])
            if any(nx.is_isomorphic(g, o, node_match=lambda a, b: a["kind"] == b["kind"])
                   for o in bucket):
                continue
            bucket.append(g)
            out.append(spec)
            if len(out) >= max_candidates:
                return out
    return out


def phase_gadget_search(params: SpinParams, delta: int, ell: int, epsilon, n_max: int,
                        budget: int = 10_000):
    """Best gadget (smallest measured epsilon) over all sizes up to n_max.

    Returns the first gadget meeting epsilon, otherwise the best one found
    with its measured epsilon; None when no gadget exists at these sizes.
    """
    best = None
    tried = 0
    for n in range(max(delta, ell), n_max + 1):
        if 2 * n > ORACLE_LIMIT:
            break
        for spec in enumerate_phase_gadgets(delta, ell, n, budget - tried):
            tried += 1
            m = measure_phase_gadget(spec, params)
            if best is None or m.epsilon_measured < best.epsilon_measured:
                best = m
            if m.epsilon_measured <= epsilon:
                return m
            if tried >= budget:
                return best
    return best


# ------------------------------------------------------------------ composite

@dataclass(frozen=True)
class PathInfo:
    edge: int
    side: str
    index: int
    port_u: int
    t1: int
    t2: int
    port_v: int


@dataclass(frozen=True)
class ReductionGraph:
    graph: Graph
    labels: tuple
    H: Graph
    gadget: PhaseGadgetSpec
    tree: GadgetExpr
    k: int
    gadget_vertices: tuple  # per H-vertex, composite ids of gadget vertices in local order
    paths: tuple
    tree_vertices: tuple  # per path, ((vertices of copy 1), (vertices of copy 2)), roots first

    @property
    def hat_vertices(self) -> list:
        return [v for vs in self.gadget_vertices for v in vs]

    def to_json(self) -> dict:
        return {"graph": self.graph.to_json(),
                "labels": {str(v): lab for v, lab in enumerate(self.labels)},
                "k": self.k, "H": self.H.to_json(), "gadget": self.gadget.to_json()}

    def edge_list(self) -> str:
        lines = [f"{self.graph.n} {len(self.graph.edges)}"]
        lines += [f"{u} {v}" for u, v in self.graph.edges]
        return "\n".join(lines) + "\n"


def build_reduction(H: Graph, G: PhaseGadgetSpec, T: GadgetExpr, k: int,
                    degree: int = 3) -> ReductionGraph:
    """The composite graph for Max-Cut instance H.

    Ports are consumed in sorted order: the p-th edge at a vertex (edges
    sorted) takes ports p*k .. p*k+k-1 on each side.  ``degree`` relaxes the
    3-regularity requirement on H for small test instances.
    """
    if k < 1:
        raise InfeasibleError("k must be positive")
    if any(H.degree(v) != degree for v in range(H.n)):
        raise InfeasibleError(f"H must be {degree}-regular")
    if G.ell != degree * k:
        raise InfeasibleError(f"gadget has {G.ell} ports per side, need {degree} * k = {degree * k}")
    tgraph, _ = materialize(T)
    tsize = tgraph.n
    labels: list = []
    edges: list = []
    gadget_vertices = []
    port_ids = set(G.ports)
    plus_port_pos = {p: i for i, p in enumerate(G.ports_plus)}
    minus_port_pos = {p: i for i, p in enumerate(G.ports_minus)}
    for v in range(H.n):
        base = len(labels)
        for local in range(G.graph.n):
            if local in port_ids:
                side = PLUS if local < G.n else MINUS
                pos = plus_port_pos.get(local, minus_port_pos.get(local))
                labels.append(f"port:{v}:{side}:{pos}")
            else:
                labels.append(f"g:{v}:{local}")
        edges += [(base + a, base + b) for a, b in G.graph.edges]
        gadget_vertices.append(tuple(range(base, base + G.graph.n)))
    incident = {v: [ei for ei, e in enumerate(H.edges) if v in e] for v in range(H.n)}
    paths = []
    trees = []
    for ei, (u, v) in enumerate(H.edges):
        pu, pv = incident[u].index(ei), incident[v].index(ei)
        for side, plist in ((PLUS, G.ports_plus), (MINUS, G.ports_minus)):
            for i in range(k):
                a = gadget_vertices[u][plist[pu * k + i]]
                b = gadget_vertices[v][plist[pv * k + i]]
                copies = []
                for j in (1, 2):
                    root = len(labels)
                    labels.append(f"path:{ei}:{side}:{i}:{j}")
                    ids = [root]
                    for local in range(1, tsize):
                        ids.append(len(labels))
                        labels.append(f"tree:{ei}:{side}:{i}:{j}:{local}")
                    edges += [(ids[x], ids[y]) for x, y in tgraph.edges]
                    copies.append(tuple(ids))
                t1, t2 = copies[0][0], copies[1][0]
                edges += [(a, t1), (t1, t2), (t2, b)]
                paths.append(PathInfo(ei, side, i, a, t1, t2, b))
                trees.append(tuple(copies))
    graph = Graph(len(labels), tuple(edges))
    return ReductionGraph(graph, tuple(labels), H, G, T, k, tuple(gadget_vertices),
                          tuple(paths), tuple(trees))


def reduction_problems(rg: ReductionGraph, delta: int) -> list:
    """Structural checks that need no Gibbs computation; empty when valid."""
    g, H, G, k = rg.graph, rg.H, rg.gadget, rg.k
    out = []
    if g.max_degree() > delta:
        out.append(f"maximum degree {g.max_degree()} exceeds {delta}")
    tsize = rg.tree.size
    want = H.n * 2 * G.n + 4 * k * len(H.edges) * tsize
    if g.n != want:
        out.append(f"vertex count {g.n}, expected {want}")
    edge_set = set(g.edges)
    per_edge: dict = {}
    used_ports: dict = {}
    used_edges: set = set()
    for p in rg.paths:
        per_edge.setdefault(p.edge, []).append(p)
        seq = (p.port_u, p.t1, p.t2, p.port_v)
        for a, b in zip(seq, seq[1:]):
            e = (min(a, b), max(a, b))
            if e not in edge_set:
                out.append(f"path edge {e} missing")
            if e in used_edges:
                out.append(f"edge {e} used by two paths")
            used_edges.add(e)
        for port in (p.port_u, p.port_v):
            used_ports[port] = used_ports.get(port, 0) + 1
    for ei in range(len(H.edges)):
        ps = per_edge.get(ei, [])
        if len(ps) != 2 * k:
            out.append(f"H-edge {ei} has {len(ps)} paths, expected {2 * k}")
        for s in (PLUS, MINUS):
            if sum(1 for p in ps if p.side == s) != k:
                out.append(f"H-edge {ei} has the wrong number of {s} paths")
    all_ports = {gv[q] for gv in rg.gadget_vertices for q in G.ports}
    if set(used_ports) != all_ports or any(c != 1 for c in used_ports.values()):
        out.append("ports are not each used exactly once")
    return out


def validate_reduction(rg: ReductionGraph, delta: int) -> None:
    problems = reduction_problems(rg, delta)
    if problems:
        raise InfeasibleError("; ".join(problems))


# ------------------------------------------------------------------ A/B/C/D

def path_matrix(x, params: SpinParams):
    """Interaction between the ends of a three-edge path whose middle vertices have field x."""
    b, g = _bg(params)
    return [[b ** 3 + 2 * b * x + g * x * x, b * b + x * (1 + b * g) + g * g * x * x],
            [b * b + x * (1 + b * g) + g * g * x * x, b + 2 * g * x + g ** 3 * x * x]]


def _path_matrix_dx(x, params):
    b, g = _bg(params)
    off = (1 + b * g) + 2 * g * g * x
    return [[2 * b + 2 * g * x, off], [off, 2 * g + 2 * g ** 3 * x]]


def _bg(params):
    if params.exact:
        return params.beta, params.gamma
    return to_float(params.beta), to_float(params.gamma)


def _quad(L, qa, qb):
    va, vb = (1 - qa, qa), (1 - qb, qb)
    return sum(va[i] * L[i][j] * vb[j] for i in range(2) for j in range(2))


def path_weights(x, params: SpinParams, q_plus, q_minus):
    """(f++, f+-, f-+, f--) at x."""
    L = path_matrix(x, params)
    return (_quad(L, q_plus, q_plus), _quad(L, q_plus, q_minus),
            _quad(L, q_minus, q_plus), _quad(L, q_minus, q_minus))


def abc_functions(params: SpinParams, q_plus, q_minus, R):
    """(A, B, C, D) at field R; B and C are R-derivatives of the log path weights.

    A = f+- f-+ / (f++ f--) at x = lam R, B = d/dR log(f+- f-+),
    C = d/dR log(f++ f--) and D = B - C = d/dR log A.
    """
    if R < 0:
        raise InfeasibleError("R must be non-negative")
    if q_plus == q_minus:
        raise InfeasibleError("q+ and q- must differ")
    with params.context():
        lam = params.lam if params.exact else to_float(params.lam)
        if not params.exact:
            R, q_plus, q_minus = to_float(R), to_float(q_plus), to_float(q_minus)
        x = lam * R
        fpp, fpm, fmp, fmm = path_weights(x, params, q_plus, q_minus)
        if fpp == 0 or fmm == 0 or fpm == 0 or fmp == 0:
            raise InfeasibleError("a path weight vanishes here (beta = 0 at R = 0)")
        L1 = _path_matrix_dx(x, params)
        dpp, dpm, dmp, dmm = (_quad(L1, a, c) for a, c in
                              ((q_plus, q_plus), (q_plus, q_minus), (q_minus, q_plus),
                               (q_minus, q_minus)))
        A = fpm * fmp / (fpp * fmm)
        B = lam * (dpm / fpm + dmp / fmp)
        C = lam * (dpp / fpp + dmm / fmm)
        return A, B, C, B - C


def occupation_coefficients(params: SpinParams, q_plus, q_minus, R):
    """Expected occupied internal vertices per path pair: (R*C, R*D).

    Over one H-edge, the k + paths and k - paths hold k*(R*C) occupied internal
    vertices in expectation when the endpoints share a phase and k*(R*C + R*D)
    when they differ.
    """
    _, _, C, D = abc_functions(params, q_plus, q_minus, R)
    with params.context():
        if not params.exact:
            R = to_float(R)
        return R * C, R * D


def maxcut_extract(D_hat, M1, M2, A1_prime, A2_prime, C, D, k: int, num_edges: int):
    """Max-Cut estimate from the magnetization difference of the two composites."""
    if M1 == M2:
        raise InfeasibleError("M1 = M2: the magnetization difference carries no cut information")
    if D == 0:
        raise InfeasibleError("D = 0: the cut coefficient vanishes")
    D_hat, M1, M2, A1_prime, A2_prime, C, D = _common(D_hat, M1, M2, A1_prime, A2_prime, C, D)
    return (D_hat - 4 * k * (A1_prime - A2_prime) * num_edges) / (k * (M1 - M2) * D) \
        - (C / D) * num_edges


def _common(*vals):
    """Rationals stay exact unless some value is a float, then everything is a float."""
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return vals
    return tuple(to_float(v) for v in vals)


def approximation_factor(A, k: int):
    """K = 1 + 6/(k log A): Avg-Cut is at least Max-Cut / K."""
    if not A > 1:
        raise InfeasibleError("need A > 1")
    return 1 + 6 / (k * math.log(float(A)))


def k_for_factor(A, K_target) -> int:
    """Smallest k with 1 + 6/(k log A) <= K_target, and at least 10/log A."""
    la = math.log(float(A))
    if not K_target > 1:
        raise InfeasibleError("target factor must exceed 1")
    return max(math.ceil(6 / ((float(K_target) - 1) * la)), math.ceil(10 / la))


@dataclass(frozen=True)
class Envelope:
    lower: Scalar
    upper: Scalar
    hat_term: str = "E|sigma_hat|"
    regime: dict = field(default_factory=dict)

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper


def predicted_magnetization_envelope(H: Graph, G: PhaseGadgetSpec, T_eval: GadgetEval,
                                     k: int, epsilon, avg_cut_bounds, params: SpinParams,
                                     hat_term=None) -> Envelope:
    """Range of the field-gadget part of the composite magnetization.

    The field-gadget part is 4 k A' |E| + (1 +- 8 eps) k M Q with
    Q = R*D*AvgCut + R*C*|E|.  The phase-gadget term E|sigma_hat| is added
    when ``hat_term`` is given, otherwise left symbolic (it cancels between
    two gadgets with equal fields).
    """
    E = len(H.edges)
    c, d = occupation_coefficients(params, G.q_plus, G.q_minus, T_eval.R)
    lo_cut, hi_cut = avg_cut_bounds
    c, d, lo_cut, hi_cut, epsilon, a_prime, M = _common(c, d, lo_cut, hi_cut, epsilon,
                                                        T_eval.a_prime, T_eval.M)
    qs = [d * lo_cut + c * E, d * hi_cut + c * E]
    base = 4 * k * a_prime * E
    vals = []
    for q in qs:
        for s in (-1, 1):
            vals.append(base + (1 + s * 8 * epsilon) * k * M * q)
    extra = 0 if hat_term is None else hat_term
    A = abc_functions(params, G.q_plus, G.q_minus, T_eval.R)[0]
    regime = {"k_at_least_10_over_logA": bool(k >= 10 / math.log(float(A))),
              "epsilon_below_tenth": bool(10 * epsilon < 1)}
    return Envelope(min(vals) + extra, max(vals) + extra,
                    "E|sigma_hat|" if hat_term is None else "included", regime)
