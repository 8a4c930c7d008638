"""Finite percolation graphs, terminals and graph transformations.

Graphs are immutable values.  Every transformation returns a new graph and
leaves edge indices of the untouched edges where they were, so that an edge
index stays meaningful across gluing and decoration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Union

Prob = Union[Fraction, float]

HALF = Fraction(1, 2)
ONE = Fraction(1)


class GraphError(ValueError):
    """Malformed graph, terminal or transformation request."""


def as_prob(x) -> Prob:
    """Coerce ints, Fractions and "num/den" strings to exact values; floats stay floats."""
    if isinstance(x, bool):
        raise GraphError(f"not a probability: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return parse_prob(x)
    raise GraphError(f"not a probability: {x!r}")


def parse_prob(s: str) -> Prob:
    s = s.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            value = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"bad probability string {s!r}") from exc
        return value
    try:
        return Fraction(int(s))
    except ValueError:
        pass
    try:
        value = float(s)
    except ValueError as exc:
        raise GraphError(f"bad probability string {s!r}") from exc
    if not math.isfinite(value):
        raise GraphError(f"bad probability string {s!r}")
    return value


def format_prob(p) -> str:
    if isinstance(p, Fraction):
        return f"{p.numerator}/{p.denominator}"
    if isinstance(p, int):
        return f"{p}/1"
    return repr(float(p))


def is_exact(p) -> bool:
    return isinstance(p, (Fraction, int)) and not isinstance(p, bool)


class Edge(NamedTuple):
    u: str
    v: str
    p: Prob


@dataclass(frozen=True)
class TerminalSpec:
    zero: str
    b: str
    A: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(self.A))

    def rename(self, old: str, new: str) -> "TerminalSpec":
        r = lambda x: new if x == old else x
        A = []
        for a in self.A:
            if r(a) not in A:
                A.append(r(a))
        return TerminalSpec(r(self.zero), r(self.b), tuple(A))


@dataclass(frozen=True)
class WeightedGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...] = ()
    directed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(
            self, "edges", tuple(Edge(u, v, as_prob(p)) for u, v, p in self.edges)
        )

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def exact(self) -> bool:
        return all(is_exact(e.p) for e in self.edges)

    def degree(self, v: str) -> int:
        """Edge-end count at v; a self-loop counts twice."""
        return sum((e.u == v) + (e.v == v) for e in self.edges)

    def neighbours(self, v: str) -> list[str]:
        out = []
        for e in self.edges:
            for x, y in ((e.u, e.v), (e.v, e.u)):
                if x == v and y != v and y not in out:
                    out.append(y)
        return out

    def with_probability(self, e: int, p) -> "WeightedGraph":
        edges = list(self.edges)
        edges[e] = Edge(edges[e].u, edges[e].v, as_prob(p))
        return WeightedGraph(self.vertices, edges, self.directed)

    def with_probabilities(self, ps: Iterable) -> "WeightedGraph":
        edges = [Edge(e.u, e.v, p) for e, p in zip(self.edges, ps, strict=True)]
        return WeightedGraph(self.vertices, edges, self.directed)

    def to_float(self) -> "WeightedGraph":
        return self.with_probabilities(float(e.p) for e in self.edges)

    def remove_vertices(self, drop: Iterable[str]) -> "WeightedGraph":
        """Induced subgraph on the remaining vertices (G minus W)."""
        drop = set(drop)
        return WeightedGraph(
            [v for v in self.vertices if v not in drop],
            [e for e in self.edges if e.u not in drop and e.v not in drop],
            self.directed,
        )

    def components(self, ignore: Iterable[str] = ()) -> list[set[str]]:
        """Structural components (edge direction ignored) after removing `ignore`."""
        ignore = set(ignore)
        parent = {v: v for v in self.vertices if v not in ignore}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            if e.u in parent and e.v in parent:
                parent[find(e.u)] = find(e.v)
        groups: dict[str, set[str]] = {}
        for v in parent:
            groups.setdefault(find(v), set()).add(v)
        return list(groups.values())


def validate(g: WeightedGraph, t: TerminalSpec | None = None) -> list[str]:
    """All invariant violations of `g` (and `t`), as readable strings; empty when well formed."""
    problems = []
    seen = set()
    for v in g.vertices:
        if not isinstance(v, str):
            problems.append(f"vertex {v!r}: id must be a string")
        if v in seen:
            problems.append(f"vertex {v!r}: duplicate id")
        seen.add(v)
    for i, e in enumerate(g.edges):
        for end in (e.u, e.v):
            if end not in seen:
                problems.append(f"edge {i}: unknown endpoint {end!r}")
        p = e.p
        if isinstance(p, float) and math.isnan(p):
            problems.append(f"edge {i}: probability is NaN")
        elif not 0 <= p <= 1:
            problems.append(f"edge {i}: probability out of range")
    if t is not None:
        for name, v in (("zero", t.zero), ("b", t.b)):
            if v not in seen:
                problems.append(f"{name}: unknown vertex {v!r}")
        if not t.A:
            problems.append("A empty")
        for a in t.A:
            if a not in seen:
                problems.append(f"A: unknown vertex {a!r}")
    return problems


def _require(g: WeightedGraph, *vs: str):
    for v in vs:
        if v not in g.index:
            raise GraphError(f"unknown vertex {v!r}")


def _require_undirected(g: WeightedGraph, what: str):
    if g.directed:
        raise GraphError(f"{what} needs an undirected graph")


def glue(g: WeightedGraph, pair: tuple[str, str]) -> WeightedGraph:
    """Identify the two vertices of `pair`; the first id survives.

    Edges keep their indices; an edge between the two vertices becomes an
    inert self-loop.
    """
    keep, gone = pair
    _require(g, keep, gone)
    if keep == gone:
        return g
    r = lambda x: keep if x == gone else x
    return WeightedGraph(
        [v for v in g.vertices if v != gone],
        [Edge(r(e.u), r(e.v), e.p) for e in g.edges],
        g.directed,
    )


def delete_edge(g: WeightedGraph, e: int) -> WeightedGraph:
    if not 0 <= e < g.m:
        raise GraphError(f"edge index {e} out of range (graph has {g.m} edges)")
    return WeightedGraph(g.vertices, g.edges[:e] + g.edges[e + 1 :], g.directed)


def _fresh(g_vertices, base: str, tag: str):
    """Yield vertex ids derived from `base` that do not clash with existing ones."""
    taken = set(g_vertices)
    i = 0
    while True:
        name = f"{base}{tag}{i}"
        i += 1
        if name not in taken:
            taken.add(name)
            yield name


def pendant_inflate(g: WeightedGraph, b: str, k: int) -> WeightedGraph:
    """Attach `k` new leaves to `b` by probability-1 edges."""
    _require_undirected(g, "pendant_inflate")
    _require(g, b)
    if k < 0:
        raise GraphError("k must be nonnegative")
    names = _fresh(g.vertices, b, "~leaf")
    leaves = [next(names) for _ in range(k)]
    return WeightedGraph(
        g.vertices + tuple(leaves),
        g.edges + tuple(Edge(b, x, ONE) for x in leaves),
        False,
    )


def _dyadic_target(p: Fraction, eps) -> tuple[int, int]:
    """(k, L) with k odd and k/2^L within eps of p, L as small as the bit budget allows."""
    if eps == 0:
        den = p.denominator
        if den & (den - 1):
            raise GraphError(f"{p} is not dyadic; an exact gadget needs eps > 0")
        return p.numerator, den.bit_length() - 1
    bits = max(1, math.ceil(math.log2(1 / eps)))
    # ceil(log2(1/eps)) can be off by one in floating point
    while Fraction(1, 2**bits) > eps:
        bits += 1
    while bits > 1 and Fraction(1, 2 ** (bits - 1)) <= eps:
        bits -= 1
    k = round(p * 2**bits)
    k = min(max(k, 1), 2**bits - 1)
    L = bits
    while k % 2 == 0:
        k //= 2
        L -= 1
    return k, L


def half_edge_gadget(p, eps=Fraction(1, 2**10)) -> tuple[WeightedGraph, tuple[str, str]]:
    """Series-parallel two-terminal graph with only 1/2 edges approximating `p`.

    Writes p ~ 0.b1 b2 ... bL in binary (bL = 1) and builds it from a single
    1/2 edge by repeatedly applying q -> q/2 (one more 1/2 edge in series) or
    q -> (1+q)/2 (one more 1/2 edge in parallel), innermost bit first.
    Returns the gadget and its terminals (source, sink).
    """
    p = as_prob(p)
    eps = as_prob(eps)
    if not 0 < p < 1:
        raise GraphError("gadget needs 0 < p < 1; delete or glue the edge instead")
    if eps < 0:
        raise GraphError("eps must be nonnegative")
    p = Fraction(p)
    eps = Fraction(eps)
    k, L = _dyadic_target(p, eps)
    digits = [(k >> (L - 1 - i)) & 1 for i in range(L)]  # b1..bL, bL == 1
    source, sink = "s", "t"
    vertices = [source, sink]
    edges = [Edge(source, sink, HALF)]
    for i, bit in enumerate(reversed(digits[:-1])):
        if bit:
            edges.append(Edge(source, sink, HALF))
        else:
            new = f"x{i}"
            vertices.append(new)
            edges.append(Edge(new, source, HALF))
            source = new
    return WeightedGraph(vertices, edges), (source, sink)


def half_edge_reduce(g: WeightedGraph, eps=Fraction(1, 2**10)) -> WeightedGraph:
    """Replace every edge by a 1/2-edge gadget; p=0 edges are dropped, p=1 edges kept."""
    _require_undirected(g, "half_edge_reduce")
    vertices = list(g.vertices)
    edges = []
    names = _fresh(g.vertices, "", "h")
    for e in g.edges:
        if e.p == 0:
            continue
        if e.p == 1 or e.p == HALF:
            edges.append(Edge(e.u, e.v, ONE if e.p == 1 else HALF))
            continue
        gadget, (s, t) = half_edge_gadget(e.p, eps)
        rename = {s: e.u, t: e.v}
        for x in gadget.vertices:
            if x not in rename:
                rename[x] = next(names)
                vertices.append(rename[x])
        edges.extend(Edge(rename[x.u], rename[x.v], x.p) for x in gadget.edges)
    return WeightedGraph(vertices, edges)


# Cubic dangling end: a root with one edge back to the host, joined to x1 and
# x4 of a K4 on x1..x4 minus the edge x1-x4.  Every pendant vertex has degree 3.
_PENDANT_EDGES = [("r", "x1"), ("r", "x4"), ("x1", "x2"), ("x2", "x3"),
                  ("x3", "x4"), ("x2", "x4"), ("x1", "x3")]


def degree3_reduce(g: WeightedGraph) -> WeightedGraph:
    """Equivalent graph in which every vertex has degree exactly 3.

    A vertex of degree d > 3 becomes a path of d - 2 cubic vertices joined by
    probability-1 edges, the first keeping the original id.  A vertex short of
    3 gets one probability-1 dangling pendant per missing edge end.
    Connection probabilities between original vertices are unchanged.
    """
    _require_undirected(g, "degree3_reduce")
    vertices = list(g.vertices)
    taken = set(vertices)

    def fresh(base):
        i = 0
        while f"{base}#{i}" in taken:
            i += 1
        name = f"{base}#{i}"
        taken.add(name)
        vertices.append(name)
        return name

    # slot assignment for each edge end
    ends: dict[str, list[tuple[int, int]]] = {v: [] for v in g.vertices}
    for i, e in enumerate(g.edges):
        ends[e.u].append((i, 0))
        ends[e.v].append((i, 1))
    new_ends = [[e.u, e.v] for e in g.edges]
    extra: list[Edge] = []
    for v in g.vertices:
        d = len(ends[v])
        if d > 3:
            spine = [v] + [fresh(v) for _ in range(d - 3)]
            for a, b in zip(spine, spine[1:]):
                extra.append(Edge(a, b, ONE))
            # first and last spine vertex take two ends, middle ones one
            capacity = [2] + [1] * (len(spine) - 2) + [2]
            slots = [x for x, c in zip(spine, capacity) for _ in range(c)]
            for (i, side), host in zip(ends[v], slots):
                new_ends[i][side] = host
        elif d < 3:
            for _ in range(3 - d):
                names = {x: fresh(v) for x in ("r", "x1", "x2", "x3", "x4")}
                extra.append(Edge(v, names["r"], ONE))
                extra.extend(Edge(names[a], names[b], ONE) for a, b in _PENDANT_EDGES)
    edges = [Edge(u, w, e.p) for (u, w), e in zip(new_ends, g.edges)] + extra
    return WeightedGraph(vertices, edges)


def canonicalize(g: WeightedGraph) -> WeightedGraph:
    """Sorted vertices and edges (undirected endpoints ordered); probabilities untouched."""
    edges = []
    for e in g.edges:
        u, v = (e.u, e.v) if g.directed or e.u <= e.v else (e.v, e.u)
        edges.append(Edge(u, v, e.p))
    edges.sort(key=lambda e: (e.u, e.v, float(e.p), format_prob(e.p)))
    return WeightedGraph(sorted(g.vertices), edges, g.directed)


@dataclass(frozen=True)
class Instance:
    """A graph together with its terminals."""
    graph: WeightedGraph
    terminals: TerminalSpec
    meta: dict = field(default_factory=dict, compare=False, hash=False)


def directed_counterexample() -> tuple[WeightedGraph, TerminalSpec]:
    """Four-vertex directed graph on which the post-FKG inequality fails.

    0 -> a1, 0 -> a2, a1 -> b, a2 -> b with probability 1/2 and the return
    edges a1 -> 0, a2 -> 0 with probability 1.
    """
    g = WeightedGraph(
        ["0", "a1", "a2", "b"],
        [("0", "a1", HALF), ("0", "a2", HALF), ("a1", "b", HALF), ("a2", "b", HALF),
         ("a1", "0", ONE), ("a2", "0", ONE)],
        directed=True,
    )
    return g, TerminalSpec("0", "b", ("a1", "a2"))
