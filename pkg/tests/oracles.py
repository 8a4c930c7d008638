"""Slow reference implementations that share no code with the engine.

Configurations are enumerated with itertools.product; connectivity is a plain
depth-first search per configuration.
"""
import itertools
from fractions import Fraction

from perccheck.events import And, ClusterAtLeast, Conn, EdgeOpen, Not, NumExpr, Or, Pivotal, Reach


def configurations(g):
    """(open-edge tuple, weight) for every configuration."""
    for bits in itertools.product((0, 1), repeat=g.m):
        w = Fraction(1)
        for b, e in zip(bits, g.edges):
            p = Fraction(e.p)
            w *= p if b else 1 - p
        if w:
            yield bits, w


def _adj(g, edges_open):
    adj = {v: set() for v in g.vertices}
    for (u, v) in edges_open:
        adj[u].add(v)
        if not g.directed:
            adj[v].add(u)
    return adj


def reached(g, edges_open, sources):
    adj = _adj(g, edges_open)
    seen = set(sources)
    stack = list(sources)
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def holds(ev, g, edges_open, bits):
    if isinstance(ev, (Conn, Reach)):
        return bool(reached(g, edges_open, ev.S) & ev.T)
    if isinstance(ev, ClusterAtLeast):
        return len(reached(g, edges_open, [ev.v])) >= ev.k
    if isinstance(ev, EdgeOpen):
        return bool(bits[ev.e])
    if isinstance(ev, Not):
        return not holds(ev.x, g, edges_open, bits)
    if isinstance(ev, And):
        return all(holds(a, g, edges_open, bits) for a in ev.args)
    if isinstance(ev, Or):
        return any(holds(a, g, edges_open, bits) for a in ev.args)
    if isinstance(ev, Pivotal):
        u, v = ev.pair
        joins = lambda x, y: (x, y) == (u, v) or (not g.directed and (y, x) == (u, v))
        base = [(x, y) for (x, y) in edges_open if not joins(x, y)]
        return holds(ev.inner, g, base + [(u, v)], bits) != holds(ev.inner, g, base, bits)
    raise TypeError(ev)


def probability(g, ev):
    total = Fraction(0)
    for bits, w in configurations(g):
        edges_open = [(e.u, e.v) for b, e in zip(bits, g.edges) if b]
        if holds(ev, g, edges_open, bits):
            total += w
    return total


def expectation(g, f: NumExpr):
    total = Fraction(0)
    for bits, w in configurations(g):
        edges_open = [(e.u, e.v) for b, e in zip(bits, g.edges) if b]
        val = len(reached(g, edges_open, [f.cluster_of])) if f.cluster_of is not None else 1
        for ev in f.events:
            val *= holds(ev, g, edges_open, bits)
        total += w * val
    return total
