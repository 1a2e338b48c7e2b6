"""Field gadgets as an expression algebra.

A gadget is a rooted tree whose root has degree one (or a lone root).  Three
constructors generate every gadget used by the package:

* ``DEGENERATE``: the lone root;
* ``TRIANGLE``: a root hanging off one corner of a 3-cycle;
* ``Merge(children)``: a new root joined by one edge to a vertex ``u`` at which
  the roots of all children are identified.

``Merge`` nodes are interned, so structurally equal expressions are the same
object and large constructions are stored as DAGs.
"""
from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (Graph, InfeasibleError, ParseError, Scalar, SpinParams,
                   to_float)

MATERIALIZE_LIMIT = 10**6
NESTED_JSON_LIMIT = 4096


class GadgetExpr:
    __slots__ = ("__weakref__",)

    children: tuple = ()

    # cached structural data lives in module-level weak dicts so the
    # interned objects stay small and immutable

    @property
    def size(self) -> int:
        return _structure(self)[0]

    @property
    def max_degree(self) -> int:
        return _structure(self)[1]

    @property
    def depth(self) -> int:
        return _structure(self)[2]

    @property
    def has_triangle(self) -> bool:
        return _structure(self)[3]

    def to_json(self) -> dict:
        return expr_to_json(self)


class _Degenerate(GadgetExpr):
    __slots__ = ()

    def __repr__(self):
        return "DEGENERATE"

    def __reduce__(self):
        return (_get_degenerate, ())


class _Triangle(GadgetExpr):
    __slots__ = ()

    def __repr__(self):
        return "TRIANGLE"

    def __reduce__(self):
        return (_get_triangle, ())


DEGENERATE = _Degenerate()
TRIANGLE = _Triangle()


def _get_degenerate():
    return DEGENERATE


def _get_triangle():
    return TRIANGLE


class Merge(GadgetExpr):
    __slots__ = ("children",)

    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()
    _lock = threading.Lock()

    def __new__(cls, children: Iterable[GadgetExpr] = ()):
        children = tuple(children)
        for c in children:
            if not isinstance(c, GadgetExpr):
                raise TypeError(f"Merge child must be a GadgetExpr, got {type(c).__name__}")
        key = tuple(id(c) for c in children)
        with cls._lock:
            node = cls._table.get(key)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "children", children)
                cls._table[key] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError("Merge is immutable")

    def __reduce__(self):
        return (Merge, (self.children,))

    def __repr__(self):
        if self.depth > 6:
            return f"Merge(<{len(self.children)} children, size {self.size}>)"
        return f"Merge([{', '.join(map(repr, self.children))}])"


def merge(*children: GadgetExpr) -> Merge:
    return Merge(children)


def path_gadget(edges: int) -> GadgetExpr:
    """Rooted path with the given number of edges."""
    expr = DEGENERATE
    for _ in range(edges):
        expr = Merge([expr]) if expr is not DEGENERATE else Merge([])
    return expr


# ------------------------------------------------------------------ traversal

def postorder(root: GadgetExpr) -> list[GadgetExpr]:
    """Distinct nodes of the DAG, children before parents."""
    seen = set()
    out = []
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            out.append(node)
            continue
        stack.append((node, True))
        for c in reversed(node.children):
            if id(c) not in seen:
                stack.append((c, False))
    return out


_structure_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_structure_lock = threading.Lock()


def _structure(expr: GadgetExpr) -> tuple:
    """(size, max degree, depth, contains triangle)."""
    hit = _structure_cache.get(expr)
    if hit is not None:
        return hit
    for node in postorder(expr):
        if node in _structure_cache:
            continue
        if node is DEGENERATE:
            val = (1, 0, 0, False)
        elif node is TRIANGLE:
            val = (4, 3, 1, True)
        else:
            kids = [_structure_cache[c] for c in node.children]
            size = 2 + sum(k[0] - 1 for k in kids)
            u_deg = 1 + sum(1 for c in node.children if c is not DEGENERATE)
            maxdeg = max([u_deg] + [k[1] for k in kids])
            depth = 1 + max((k[2] for k in kids), default=0)
            tri = any(k[3] for k in kids)
            val = (size, maxdeg, depth, tri)
        with _structure_lock:
            _structure_cache[node] = val
    return _structure_cache[expr]


# ------------------------------------------------------------------ evaluation

@dataclass(frozen=True)
class GadgetEval:
    """Effective field R, magnetization gap M and root-conditioned weights.

    ``e_in`` and ``e_out`` are the expected numbers of spin-1 vertices given
    the root is 1 and 0 respectively; ``e_out`` is the A' quantity used by the
    reduction.
    """

    R: Scalar
    M: Scalar
    Zin: Scalar
    Zout: Scalar
    size: int
    e_in: Scalar
    e_out: Scalar

    @property
    def Z(self):
        return self.Zin + self.Zout

    @property
    def a_prime(self):
        return self.e_out


def omega(R, params: SpinParams):
    """Contraction factor (1 + bg - bR - g/R) / (1 - bg)."""
    if R == 0:
        raise InfeasibleError("omega is undefined at R = 0")
    b, g = params.beta, params.gamma
    if not params.exact and isinstance(R, Fraction):
        R = to_float(R)
    return (1 + b * g - b * R - g / R) / (1 - b * g)


def phi(P, params: SpinParams):
    """Field of Merge(children) as a function of the product of child fields."""
    b, g, lam = params.beta, params.gamma, params.lam
    return (1 + g * lam * P) / (b + lam * P)


def check_admissible(expr: GadgetExpr, params: SpinParams) -> None:
    if expr.has_triangle and not params.triangle_admissible():
        raise InfeasibleError(
            "the triangle gadget requires lambda = (1-beta)/(1-gamma) with beta != gamma in (0,1)")
    if params.delta is not None and expr.max_degree > params.delta:
        raise InfeasibleError(
            f"gadget has maximum degree {expr.max_degree} > {params.delta}")


def _triangle_eval(b, g, lam, one):
    # root r on corner a of triangle (a, x, y); enumerate a, x, y
    zin = zout = sin = sout = 0 * one
    for a in (0, 1):
        for x in (0, 1):
            for y in (0, 1):
                w = one
                occ = a + x + y
                for s, t in ((a, x), (a, y), (x, y)):
                    if s == t:
                        w = w * (g if s else b)
                w = w * lam ** occ
                # edge r-a
                w_in = w * lam * (g if a else 1)
                w_out = w * (1 if a else b)
                zin += w_in
                sin += w_in * (occ + 1)
                zout += w_out
                sout += w_out * occ
    return zin, zout, sin / zin, sout / zout


class Evaluator:
    """Memoizing evaluator of gadget expressions for fixed parameters.

    In float mode all arithmetic runs at ``params.precision`` bits.
    """

    def __init__(self, params: SpinParams, check: bool = True):
        self.params = params if params.exact else params.floated()
        self.check = check
        self._memo: dict[int, tuple] = {}
        self._keep: list = []  # keeps memoized nodes alive so ids stay valid
        self._lock = threading.Lock()

    def __call__(self, expr: GadgetExpr) -> GadgetEval:
        if self.check:
            check_admissible(expr, self.params)
        with self.params.context():
            R, M, zin, zout, e_in, e_out = self._eval(expr)
        return GadgetEval(R, M, zin, zout, expr.size, e_in, e_out)

    def field(self, expr: GadgetExpr):
        with self.params.context():
            return self._eval(expr)[0]

    def _eval(self, expr):
        hit = self._memo.get(id(expr))
        if hit is not None:
            return hit
        p = self.params
        b, g, lam = p.beta, p.gamma, p.lam
        one = Fraction(1) if p.exact else to_float(1)
        for node in postorder(expr):
            if id(node) in self._memo:
                continue
            if node is DEGENERATE:
                val = (one, one, lam, one, one, 0 * one)
            elif node is TRIANGLE:
                zin, zout, e_in, e_out = _triangle_eval(b, g, lam, one)
                val = (zin / (lam * zout), e_in - e_out, zin, zout, e_in, e_out)
            else:
                kids = [self._memo[id(c)] for c in node.children]
                prod_r = one
                w1 = lam
                w0 = one
                e1 = one
                e0 = 0 * one
                msum = one
                for R_i, M_i, zin_i, zout_i, ein_i, eout_i in kids:
                    prod_r *= R_i
                    w1 *= zin_i / lam
                    w0 *= zout_i
                    e1 += ein_i - 1
                    e0 += eout_i
                    msum += M_i - 1
                R = phi(prod_r, p)
                M = 1 - omega(R, p) * msum
                zin = lam * (w0 + g * w1)
                zout = b * w0 + w1
                e_in = 1 + (w0 * e0 + g * w1 * e1) / (w0 + g * w1)
                e_out = (b * w0 * e0 + w1 * e1) / zout
                val = (R, M, zin, zout, e_in, e_out)
            with self._lock:
                self._memo[id(node)] = val
                self._keep.append(node)
        return self._memo[id(expr)]


def eval_gadget(expr: GadgetExpr, params: SpinParams) -> GadgetEval:
    """Exact (rational parameters) or big-float evaluation via the merge recursion."""
    return Evaluator(params)(expr)


def eval_R_of_lambda(expr: GadgetExpr, beta, gamma, lam, delta=None, precision=None):
    """Return (R(lambda), dR/dlambda) using dR/dlambda = R (M - 1) / lambda."""
    kw = {} if precision is None else {"precision": precision}
    params = SpinParams(beta, gamma, lam, delta, **kw)
    ev = eval_gadget(expr, params)
    lam_v = params.lam if params.exact else to_float(params.lam)
    with params.context():
        return ev.R, ev.R * (ev.M - 1) / lam_v


def eval_gadget_oracle(expr: GadgetExpr, params: SpinParams, limit: int | None = None) -> GadgetEval:
    """Evaluate by brute-force enumeration of the materialized gadget."""
    from .oracle import ORACLE_LIMIT, gadget_statistics
    limit = ORACLE_LIMIT if limit is None else limit
    check_admissible(expr, params)
    if expr.size > limit:
        raise InfeasibleError(f"gadget has {expr.size} vertices, oracle limit is {limit}")
    graph, root = materialize(expr)
    zin, zout, e_in, e_out = gadget_statistics(graph, root, params, limit=limit)
    with params.context():
        lam = params.lam if params.exact else to_float(params.lam)
        return GadgetEval(zin / (lam * zout), e_in - e_out, zin, zout, expr.size, e_in, e_out)


# ------------------------------------------------------------------ materialize

def materialize(expr: GadgetExpr, limit: int = MATERIALIZE_LIMIT) -> tuple[Graph, int]:
    """Expand the expression into an explicit graph; the root is vertex 0."""
    size = expr.size
    if size > limit:
        raise InfeasibleError(f"gadget has {size} vertices, materialization limit is {limit}")
    edges = []
    counter = [1]

    def new_vertex():
        v = counter[0]
        counter[0] += 1
        return v

    # attach(node, r): build node with its root identified with existing vertex r
    stack = [(expr, 0)]
    while stack:
        node, r = stack.pop()
        if node is DEGENERATE:
            continue
        if node is TRIANGLE:
            a, x, y = new_vertex(), new_vertex(), new_vertex()
            edges += [(r, a), (a, x), (a, y), (x, y)]
            continue
        u = new_vertex()
        edges.append((r, u))
        for c in reversed(node.children):
            stack.append((c, u))
    assert counter[0] == size
    return Graph(size, tuple(edges)), 0


# ------------------------------------------------------------------ JSON

def expr_to_json(expr: GadgetExpr) -> dict:
    nodes = postorder(expr)
    tree_nodes = _tree_node_count(expr)
    if tree_nodes <= NESTED_JSON_LIMIT:
        return _nested(expr)
    index = {id(n): i for i, n in enumerate(nodes)}
    out = []
    for n in nodes:
        if n is DEGENERATE:
            out.append({"t": "deg"})
        elif n is TRIANGLE:
            out.append({"t": "tri"})
        else:
            out.append({"t": "merge", "c": [index[id(c)] for c in n.children]})
    return {"dag": out}


def _tree_node_count(expr) -> int:
    counts = {}
    for n in postorder(expr):
        counts[id(n)] = 1 + sum(counts[id(c)] for c in n.children)
        if counts[id(n)] > NESTED_JSON_LIMIT:
            return counts[id(n)]
    return counts[id(expr)]


def _nested(expr) -> dict:
    if expr is DEGENERATE:
        return {"t": "deg"}
    if expr is TRIANGLE:
        return {"t": "tri"}
    return {"t": "merge", "c": [_nested(c) for c in expr.children]}


def expr_from_json(data) -> GadgetExpr:
    try:
        if "dag" in data:
            built: list[GadgetExpr] = []
            for node in data["dag"]:
                t = node["t"]
                if t == "merge":
                    kids = node.get("c", [])
                    if any(not 0 <= int(i) < len(built) for i in kids):
                        raise ParseError("DAG child index must refer to an earlier node")
                    built.append(Merge(built[int(i)] for i in kids))
                else:
                    built.append(_leaf(t))
            if not built:
                raise ParseError("empty gadget DAG")
            return built[-1]
        return _from_nested(data)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"bad gadget JSON: {exc}") from exc


def _leaf(t) -> GadgetExpr:
    if t == "deg":
        return DEGENERATE
    if t == "tri":
        return TRIANGLE
    raise ParseError(f"unknown gadget node type {t!r}")


def _from_nested(data) -> GadgetExpr:
    # iterative so deep paths do not hit the recursion limit
    result: dict[int, GadgetExpr] = {}
    stack = [(data, False)]
    while stack:
        node, ready = stack.pop()
        t = node["t"]
        if t != "merge":
            result[id(node)] = _leaf(t)
            continue
        kids = node.get("c", [])
        if ready:
            result[id(node)] = Merge(result[id(c)] for c in kids)
        else:
            stack.append((node, True))
            stack.extend((c, False) for c in kids)
    return result[id(data)]


def example_pair() -> tuple[GadgetExpr, GadgetExpr]:
    """Two hard-core (lambda = 1) gadgets with equal field 2/3 and gaps 5/6 and 3/4."""
    edge = Merge([])
    t1 = Merge([edge])
    t2 = Merge([t1, Merge([edge, t1])])
    return t1, t2
