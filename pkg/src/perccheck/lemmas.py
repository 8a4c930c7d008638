"""Randomised instances of the auxiliary correlation lemmas.

Each lemma is instantiated on a given graph with randomly drawn vertex sets and
a conditioning event Q from a small family of cluster events (connection of a
fixed vertex set to another fixed set, or its negation).  Draws whose
conditioning event has probability zero are skipped and counted; draws that do
not fit the graph (too few vertices, no neighbours at 0, ...) are counted as
structural skips.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .checkers import CheckReport
from .engine import probabilities
from .events import FALSE, And, Conn, EdgeOpen, Not, Pivotal
from .graph import GraphError, TerminalSpec, WeightedGraph, glue

LEMMAS = ("cond-monotone-i", "cond-monotone-ii", "phi-superadditive", "compare-i",
          "compare-ii", "pivotal-max", "pivotal-glued", "star-config")


class _Skip(Exception):
    def __init__(self, zero: bool):
        self.zero = zero


@dataclass
class SuiteResult:
    reports: list[CheckReport] = field(default_factory=list)
    draws: int = 0
    skipped_zero: int = 0
    skipped_structural: int = 0

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)

    @property
    def violations(self):
        return [r for r in self.reports if r.violated]

    def merge(self, other: "SuiteResult"):
        self.reports += other.reports
        self.draws += other.draws
        self.skipped_zero += other.skipped_zero
        self.skipped_structural += other.skipped_structural


def _cond(g, pairs, **kw):
    """Conditional probabilities P(x | y) for (x, y) pairs, sharing one enumeration."""
    evs = []
    for x, y in pairs:
        evs += [And((x, y)), y]
    vals = probabilities(g, evs, **kw)
    out = []
    for i in range(0, len(vals), 2):
        if vals[i + 1] == 0:
            raise _Skip(True)
        out.append(vals[i] / vals[i + 1])
    return out


def _pick(rng, items, k=None):
    items = list(items)
    if k is None:
        return items[int(rng.integers(len(items)))]
    idx = rng.choice(len(items), size=k, replace=False)
    return [items[i] for i in sorted(idx)]


def _random_set(rng, items, exclude=()):
    pool = [x for x in items if x not in exclude]
    if not pool:
        raise _Skip(False)
    k = int(rng.integers(1, len(pool) + 1))
    return _pick(rng, pool, k)


def _split(rng, A):
    """Nonempty X and its complement inside A."""
    k = int(rng.integers(1, len(A) + 1))
    X = _pick(rng, A, k)
    return X, [a for a in A if a not in X]


def _conn_or_false(S, T):
    return Conn(S, T) if S and T else FALSE


def _report(name, lhs, rhs, aux, exact=True):
    return CheckReport("lemma:" + name, lhs, rhs, [], exact, aux)


# --------------------------------------------------------------------------


def cond_monotone(g, t, rng, part: str, **kw):
    """Conditioning on a cluster event Q moves phi(X) in the predicted direction."""
    A = list(t.A)
    X, Xc = _split(rng, A)
    Y = _random_set(rng, g.vertices)
    on_X = rng.integers(2) == 0
    # (i): increasing on A(X) or decreasing on A(X^c); (ii): the reverse
    if on_X:
        Q = Conn(X, Y) if part == "i" else Not(Conn(X, Y))
    else:
        if not Xc:
            raise _Skip(False)
        Q = Not(Conn(Xc, Y)) if part == "i" else Conn(Xc, Y)
    sep = Not(_conn_or_false(X, Xc))
    hit = Conn(t.zero, X)
    plain, given_q = _cond(g, [(hit, sep), (hit, And((sep, Q)))], **kw)
    lhs, rhs = (given_q, plain) if part == "i" else (plain, given_q)
    return _report(f"cond-monotone-{part}", lhs, rhs,
                   {"X": X, "Y": Y, "Q": "increasing" if (on_X == (part == "i")) else "decreasing",
                    "on": "A(X)" if on_X else "A(X^c)"})


def phi_superadditive(g, t, rng, **kw):
    """sum_k phi(X_k) <= phi(X) for a random partition of a random X."""
    A = list(t.A)
    X, _ = _split(rng, A)
    labels = rng.integers(0, len(X), size=len(X))
    parts = [[x for x, l in zip(X, labels) if l == j] for j in sorted(set(labels.tolist()))]

    def phi_pair(Y):
        rest = [a for a in A if a not in Y]
        return Conn(t.zero, Y), Not(_conn_or_false(Y, rest))

    vals = _cond(g, [phi_pair(X)] + [phi_pair(P) for P in parts], **kw)
    return _report("phi-superadditive", vals[0], sum(vals[1:], Fraction(0) if g.exact else 0.0),
                   {"X": X, "parts": parts, "phi_parts": vals[1:]})


def compare(g, t, rng, part: str, **kw):
    """P(a1~b) <= P(a2~b) + delta survives conditioning on a suitable Q."""
    pool = [v for v in g.vertices if v != t.b]
    if len(pool) < 2:
        raise _Skip(False)
    a1, a2 = _pick(rng, pool, 2)
    if rng.integers(2):
        a1, a2 = a2, a1
    p1, p2 = probabilities(g, [Conn(a1, t.b), Conn(a2, t.b)], **kw)
    delta = max(p1 - p2, 0 * p1)
    if part == "i":
        Y = _random_set(rng, g.vertices, exclude=(a2,))
        Q = Conn(a2, Y)
        c1, c2 = _cond(g, [(Conn(a1, t.b), Q), (Conn(a2, t.b), Q)], **kw)
    else:
        Y = _random_set(rng, g.vertices, exclude=(a1,))
        Q = Not(Conn(a1, Y))
        c1, c2 = probabilities(g, [And((Conn(a1, t.b), Q)), And((Conn(a2, t.b), Q))], **kw)
    return _report(f"compare-{part}", c2 + delta, c1,
                   {"a1": a1, "a2": a2, "b": t.b, "Y": Y, "delta": delta})


def _three(g, t, rng):
    pool = [v for v in g.vertices if v != t.b]
    if len(pool) < 3:
        raise _Skip(False)
    A = [a for a in t.A if a != t.b]
    if len(A) >= 3:
        return _pick(rng, A, 3)
    return _pick(rng, pool, 3)


def pivotal_max(g, t, rng, **kw):
    """The pair {a1,a2} is at least as often pivotal for a_j~b (some j) as for a3~b."""
    a1, a2, a3 = _three(g, t, rng)
    vals = probabilities(g, [Pivotal((a1, a2), Conn(a, t.b)) for a in (a1, a2, a3)], **kw)
    return _report("pivotal-max", max(vals[:2]), vals[2],
                   {"a": [a1, a2, a3], "b": t.b, "pivotal": vals})


def pivotal_glued(g, t, rng, **kw):
    """Gluing a1 and a2 gains at least min_j P(a_j~b) - P(a3~b) over a3."""
    a1, a2, a3 = _three(g, t, rng)
    base = probabilities(g, [Conn(a, t.b) for a in (a1, a2, a3)], **kw)
    h = glue(g, (a1, a2))
    glued = probabilities(h, [Conn(a1, t.b), Conn(a3, t.b)], **kw)
    return _report("pivotal-glued", glued[0] - glued[1], min(base[:2]) - base[2],
                   {"a": [a1, a2, a3], "b": t.b})


def star_config(g, t, rng, **kw):
    """P(a~b, sigma_B) <= P(0~b, sigma_B) with sigma_B fixing every edge at 0."""
    zero = t.zero
    if zero == t.b:
        raise _Skip(False)
    nbrs = sorted(set(g.neighbours(zero)) - {zero})
    if len(nbrs) < 2:
        raise _Skip(False)
    a, v = _pick(rng, nbrs, 2)
    rest = g.remove_vertices([zero])
    if t.b not in rest.index:
        raise _Skip(False)
    pa, pv = probabilities(rest, [Conn(a, t.b), Conn(v, t.b)], **kw)
    if pa > pv:
        a, v = v, a
    B = sorted(set([v] + [x for x in nbrs if x != v and rng.integers(2)]))
    sigma = []
    for i, e in enumerate(g.edges):
        if e.u == e.v or zero not in (e.u, e.v):
            continue
        other = e.v if e.u == zero else e.u
        sigma.append(EdgeOpen(i) if other in B else Not(EdgeOpen(i)))
    sig = And(sigma)
    lhs, rhs = probabilities(g, [And((Conn(zero, t.b), sig)), And((Conn(a, t.b), sig))], **kw)
    if lhs == 0 and rhs == 0 and probabilities(g, [sig], **kw)[0] == 0:
        raise _Skip(True)
    return _report("star-config", lhs, rhs, {"a": a, "v": v, "B": B})


def _draw(name, g, t, rng, **kw):
    if name == "cond-monotone-i":
        return cond_monotone(g, t, rng, "i", **kw)
    if name == "cond-monotone-ii":
        return cond_monotone(g, t, rng, "ii", **kw)
    if name == "phi-superadditive":
        return phi_superadditive(g, t, rng, **kw)
    if name == "compare-i":
        return compare(g, t, rng, "i", **kw)
    if name == "compare-ii":
        return compare(g, t, rng, "ii", **kw)
    if name == "pivotal-max":
        return pivotal_max(g, t, rng, **kw)
    if name == "pivotal-glued":
        return pivotal_glued(g, t, rng, **kw)
    if name == "star-config":
        return star_config(g, t, rng, **kw)
    raise ValueError(f"unknown lemma {name!r}")


def lemma_suite(g: WeightedGraph, t: TerminalSpec, seed: int = 0, lemmas=LEMMAS,
                draws: int = 1, **kw) -> SuiteResult:
    """`draws` random instances of every lemma on (g, t); undirected graphs only."""
    if g.directed:
        raise GraphError("lemma suite is stated for undirected graphs only")
    rng = np.random.default_rng(seed)
    res = SuiteResult()
    for name in lemmas:
        for _ in range(draws):
            res.draws += 1
            try:
                res.reports.append(_draw(name, g, t, rng, **kw))
            except _Skip as s:
                if s.zero:
                    res.skipped_zero += 1
                else:
                    res.skipped_structural += 1
    return res
