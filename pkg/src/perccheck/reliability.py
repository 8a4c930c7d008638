"""Two-terminal connection probabilities by deletion-contraction.

P(s <-> t) = p_e P(G with e contracted) + (1 - p_e) P(G with e deleted),
after series, parallel, dangling-vertex and certain-edge simplifications.
Subproblems are memoised on a relabelled sorted edge list; no isomorphism
search is attempted, so a hit only happens on literally identical encodings.
"""
from __future__ import annotations

from fractions import Fraction

from .engine import EngineError
from .graph import GraphError, WeightedGraph

DEFAULT_MEMO_BUDGET = 200_000


class MemoBudgetExceeded(EngineError):
    pass


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _simplify(edges, s, t):
    """Reduce a two-terminal multigraph.  Returns (edges, s, t) or a final probability."""
    while True:
        # certain edges are contracted, impossible ones and loops dropped
        parent = {}
        for u, v, p in edges:
            parent.setdefault(u, u)
            parent.setdefault(v, v)
        parent.setdefault(s, s)
        parent.setdefault(t, t)
        kept = []
        for u, v, p in edges:
            if u == v or p == 0:
                continue
            if p == 1:
                parent[_find(parent, u)] = _find(parent, v)
            else:
                kept.append((u, v, p))
        s, t = _find(parent, s), _find(parent, t)
        if s == t:
            return 1
        merged = {}
        for u, v, p in kept:
            u, v = _find(parent, u), _find(parent, v)
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            q = merged.get(key)
            merged[key] = p if q is None else 1 - (1 - q) * (1 - p)
        # keep only the component of s
        adj: dict = {}
        for (u, v), p in merged.items():
            adj.setdefault(u, []).append((v, p))
            adj.setdefault(v, []).append((u, p))
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y, _ in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if t not in seen:
            return 0
        adj = {x: nbrs for x, nbrs in adj.items() if x in seen}
        changed = False
        drop = set()
        series = None
        for x, nbrs in adj.items():
            if x in (s, t):
                continue
            if len(nbrs) <= 1:
                drop.add(x)
                changed = True
            elif len(nbrs) == 2 and series is None:
                series = x
        edges = [(u, v, p) for (u, v), p in merged.items()
                 if u in seen and u not in drop and v not in drop]
        if series is not None and not changed:
            (a, pa), (b, pb) = adj[series]
            edges = [e for e in edges if series not in (e[0], e[1])]
            edges.append((a, b, pa * pb))
            changed = True
        if not changed:
            return edges, s, t


def _key(edges, s, t):
    label = {s: 0, t: 1}
    for u, v, _ in sorted(edges, key=lambda e: (e[0] != s and e[1] != s, repr(e[0]), repr(e[1]))):
        for x in (u, v):
            if x not in label:
                label[x] = len(label)
    enc = []
    for u, v, p in edges:
        a, b = label[u], label[v]
        enc.append((min(a, b), max(a, b), p))
    enc.sort(key=lambda x: (x[0], x[1], float(x[2]), repr(x[2])))
    return tuple(enc)


class _Solver:
    def __init__(self, budget):
        self.memo = {}
        self.budget = budget

    def solve(self, edges, s, t):
        red = _simplify(edges, s, t)
        if not isinstance(red, tuple):
            return red
        edges, s, t = red
        key = _key(edges, s, t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        # branch on an edge at the source: contraction moves the source forward
        deg = {}
        for u, v, _ in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        i = max(range(len(edges)),
                key=lambda j: ((s in edges[j][:2]) or (t in edges[j][:2]),
                               deg[edges[j][0]] + deg[edges[j][1]]))
        u, v, p = edges[i]
        rest = edges[:i] + edges[i + 1:]
        contracted = [(u if a == v else a, u if b == v else b, q) for a, b, q in rest]
        cs, ct = (u if s == v else s), (u if t == v else t)
        value = p * self.solve(contracted, cs, ct) + (1 - p) * self.solve(rest, s, t)
        if len(self.memo) >= self.budget:
            raise MemoBudgetExceeded(
                f"deletion-contraction memo exceeded {self.budget} entries")
        self.memo[key] = value
        return value


def connection_probability_dc(g: WeightedGraph, S, T, *, memo_budget=DEFAULT_MEMO_BUDGET):
    """P(some vertex of S is connected to some vertex of T), undirected graphs only."""
    if g.directed:
        raise GraphError("deletion-contraction handles undirected graphs only")
    S = [S] if isinstance(S, str) else list(S)
    T = [T] if isinstance(T, str) else list(T)
    for x in S + T:
        if x not in g.index:
            raise GraphError(f"unknown vertex {x!r}")
    if set(S) & set(T):
        return Fraction(1) if g.exact else 1.0
    # all of S glued into one source, all of T into one sink
    ix = dict(g.index)
    src, snk = ix[S[0]], ix[T[0]]
    for x in S:
        ix[x] = src
    for x in T:
        ix[x] = snk
    edges = [(ix[e.u], ix[e.v], e.p) for e in g.edges]
    value = _Solver(memo_budget).solve(edges, src, snk)
    if g.exact:
        return Fraction(value)
    return float(value)
