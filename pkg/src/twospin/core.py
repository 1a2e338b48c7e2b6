"""Scalars, spin parameters, graphs and the Gibbs weight.

Scalars are exact ``Fraction`` values whenever every input is rational and
``mpmath.mpf`` big-floats otherwise.  Float precision is carried by the
parameters and activated with :func:`working_precision`.
"""
from __future__ import annotations

import contextlib
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import mpmath
from mpmath import iv, mp, mpf

Scalar = Union[Fraction, mpf]

DEFAULT_PRECISION = 256
MIN_PRECISION = 64


class TwoSpinError(Exception):
    """Base class for all package errors."""


class ParseError(TwoSpinError, ValueError):
    pass


class InfeasibleError(TwoSpinError):
    """Inputs violate a precondition or a size limit."""


class BudgetExceeded(InfeasibleError):
    pass


class ConvergenceError(TwoSpinError):
    """A solver ran out of iterations or precision."""


# ----------------------------------------------------------------- scalars

@contextlib.contextmanager
def working_precision(bits: int):
    """Set the mpmath float and interval precision for the enclosed block."""
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits")
    old = mp.prec, iv.prec
    mp.prec = iv.prec = bits
    try:
        yield
    finally:
        mp.prec, iv.prec = old


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def to_float(x) -> mpf:
    """Convert any scalar to an mpf at the current precision."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def to_exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"{x!r} is not rational")


def as_scalar(x) -> Scalar:
    """Normalise user input: ints and decimal strings become Fractions."""
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, mpf):
        return x
    raise TypeError(f"cannot interpret {x!r} as a scalar")


_FLOAT_RE = re.compile(r"^\s*([-+0-9.eE]+)@(\d+)\s*$")


def parse_scalar(text: str) -> Scalar:
    """Parse ``"p/q"``, an integer, an exact decimal, or ``"<decimal>@<bits>"``.

    Decimal literals without a precision tag are read exactly, so
    ``"1e-6"`` is the rational 1/1000000.
    """
    text = text.strip()
    m = _FLOAT_RE.match(text)
    if m:
        bits = int(m.group(2))
        if bits < MIN_PRECISION:
            raise ParseError(f"precision tag below {MIN_PRECISION} bits: {text!r}")
        with working_precision(bits):
            return mpf(m.group(1))
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"not a scalar: {text!r}") from exc


def format_scalar(x) -> str:
    """Canonical string form: ``p/q`` (or ``p``) for rationals, tagged decimal for floats."""
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, mpf):
        digits = max(1, int(mp.prec * math.log10(2)))
        return f"{mpmath.nstr(x, digits, min_fixed=-4, max_fixed=6)}@{mp.prec}"
    raise TypeError(f"cannot format {x!r}")


def sqrt(x):
    """Square root: exact when x is a rational square, mpf otherwise."""
    if isinstance(x, Fraction) and x >= 0:
        p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if p * p == x.numerator and q * q == x.denominator:
            return Fraction(p, q)
        return mpmath.sqrt(to_float(x))
    return mpmath.sqrt(x)


# -------------------------------------------------------------- parameters

@dataclass(frozen=True)
class SpinParams:
    """Edge activities beta (0-0 edges), gamma (1-1 edges) and field lam."""

    beta: Scalar
    gamma: Scalar
    lam: Scalar
    delta: int | None = None
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        for name in ("beta", "gamma", "lam"):
            object.__setattr__(self, name, as_scalar(getattr(self, name)))
        if self.precision < MIN_PRECISION:
            raise InfeasibleError(f"precision must be at least {MIN_PRECISION} bits")
        b, g, lam = self.beta, self.gamma, self.lam
        if b < 0 or g < 0 or not lam > 0:
            raise InfeasibleError("need beta >= 0, gamma >= 0, lambda > 0")
        if not b * g < 1 or (b == 0 and g == 0):
            raise InfeasibleError("parameters are not antiferromagnetic (need 0 <= beta*gamma < 1, not both zero)")
        if self.delta is not None and self.delta < 3:
            raise InfeasibleError("degree bound must be at least 3")

    @classmethod
    def hardcore(cls, lam=1, delta=None, precision=DEFAULT_PRECISION) -> "SpinParams":
        return cls(Fraction(1), Fraction(0), lam, delta, precision)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.beta, self.gamma, self.lam))

    @property
    def is_trivial_ising(self) -> bool:
        return self.beta == self.gamma and self.lam == 1

    @property
    def is_hardcore(self) -> bool:
        return self.beta == 1 and self.gamma == 0

    def floated(self) -> "SpinParams":
        """Same parameters as big-floats at this object's precision."""
        with working_precision(self.precision):
            return replace(self, beta=to_float(self.beta), gamma=to_float(self.gamma),
                           lam=to_float(self.lam))

    def with_lambda(self, lam) -> "SpinParams":
        return replace(self, lam=lam)

    def with_delta(self, delta) -> "SpinParams":
        return replace(self, delta=delta)

    def context(self):
        return working_precision(self.precision)

    def triangle_lambda(self):
        """The special field (1-beta)/(1-gamma), or None when gamma = 1."""
        if self.gamma == 1:
            return None
        return (1 - self.beta) / (1 - self.gamma)

    def triangle_admissible(self) -> bool:
        b, g = self.beta, self.gamma
        if not (0 < b < 1 and 0 < g < 1) or b == g:
            return False
        target = (1 - b) / (1 - g)
        if self.exact:
            return self.lam == target
        with self.context():
            return abs(to_float(self.lam) - to_float(target)) <= mpf(2) ** (-self.precision // 2)

    def to_json(self) -> dict:
        out = {"beta": format_scalar(self.beta), "gamma": format_scalar(self.gamma),
               "lambda": format_scalar(self.lam)}
        if self.delta is not None:
            out["delta"] = self.delta
        return out


# ------------------------------------------------------------------ graphs

SpinConfig = tuple  # tuple of 0/1 per vertex


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1 with optional per-vertex fields.

    A vertex listed in ``fields`` uses that value instead of the uniform lambda.
    """

    n: int
    edges: tuple = ()
    fields: tuple = ()  # sorted (vertex, field) pairs

    def __post_init__(self):
        if self.n < 0:
            raise InfeasibleError("negative vertex count")
        norm = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise InfeasibleError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InfeasibleError(f"edge {(u, v)} out of range")
            e2 = (min(u, v), max(u, v))
            if e2 in norm:
                raise InfeasibleError(f"repeated edge {e2}")
            norm.add(e2)
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        if isinstance(self.fields, Mapping):
            items = self.fields.items()
        else:
            items = self.fields
        fl = {}
        for v, lam in items:
            v = int(v)
            if not 0 <= v < self.n:
                raise InfeasibleError(f"field for missing vertex {v}")
            lam = as_scalar(lam)
            if not lam > 0:
                raise InfeasibleError("vertex fields must be positive")
            fl[v] = lam
        object.__setattr__(self, "fields", tuple(sorted(fl.items())))

    @cached_property
    def adjacency(self) -> tuple:
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def field_map(self) -> dict:
        return dict(self.fields)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def vertex_field(self, v: int, lam):
        return self.field_map.get(v, lam)

    def with_fields(self, fields) -> "Graph":
        return Graph(self.n, self.edges, fields)

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        out = []
        for s in range(self.n):
            if seen[s]:
                continue
            comp, stack = [], [s]
            seen[s] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            out.append(sorted(comp))
        return out

    def subgraph(self, vertices: Sequence[int]) -> tuple["Graph", dict]:
        """Induced subgraph, relabelled in the given order; returns (graph, old->new)."""
        index = {v: i for i, v in enumerate(vertices)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        fields = [(index[v], lam) for v, lam in self.fields if v in index]
        return Graph(len(vertices), tuple(edges), tuple(fields)), index

    # JSON
    def to_json(self) -> dict:
        out = {"n": self.n, "edges": [list(e) for e in self.edges]}
        if self.fields:
            out["fields"] = {str(v): format_scalar(lam) for v, lam in self.fields}
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Graph":
        try:
            n = int(data["n"])
            edges = tuple(tuple(e) for e in data.get("edges", []))
            fields = {int(v): parse_scalar(str(s)) for v, s in data.get("fields", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad graph JSON: {exc}") from exc
        return cls(n, edges, fields)


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def edge_counts(graph: Graph, config: Sequence[int]) -> tuple[int, int]:
    """(m0, m1): numbers of 0-0 and 1-1 edges."""
    m0 = m1 = 0
    for u, v in graph.edges:
        if config[u] and config[v]:
            m1 += 1
        elif not config[u] and not config[v]:
            m0 += 1
    return m0, m1


def weight(graph: Graph, params: SpinParams, config: Sequence[int]) -> Scalar:
    """Gibbs weight lambda_v over occupied v, times beta^m0 gamma^m1 (0^0 = 1)."""
    if len(config) != graph.n:
        raise InfeasibleError(f"configuration has {len(config)} entries, graph has {graph.n} vertices")
    if any(s not in (0, 1) for s in config):
        raise InfeasibleError("spins must be 0 or 1")
    m0, m1 = edge_counts(graph, config)
    w = params.beta ** m0 * params.gamma ** m1
    for v, s in enumerate(config):
        if s:
            w = w * graph.vertex_field(v, params.lam)
    return w


def uniform_scalar_kind(values: Iterable) -> bool:
    """True when every value is rational."""
    return all(is_exact(v) for v in values)
