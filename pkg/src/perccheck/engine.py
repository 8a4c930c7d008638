"""Exact probabilities by enumeration of all edge configurations.

Configurations are processed in blocks of 2^CHUNK_BITS.  Inside a block each
edge state is a boolean vector, connectivity is computed for the whole block
at once, and the per-configuration values are reduced to an exact weighted
sum by folding one edge axis at a time with the integer weights
(den - num, num) of that edge's probability.  The result is divided by the
product of the denominators only at the very end, so exact mode never touches
a float and never builds per-configuration Fractions.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .events import (
    And, ClusterAtLeast, Conn, EdgeOpen, Event, EventError, Not, NumExpr, Or,
    Pivotal, Reach, link,
)
from .graph import Prob, TerminalSpec, WeightedGraph

DEFAULT_MAX_EDGES = 26
CHUNK_BITS = 16
_INT_LIMIT = 2**62


class EngineError(RuntimeError):
    pass


class EdgeLimitExceeded(EngineError):
    """The graph has too many edges for exact enumeration."""


class ZeroConditioning(EngineError):
    """Conditioning on an event of probability zero."""


def max_edges_default() -> int:
    env = os.environ.get("PERC_MAX_EDGES")
    if env:
        try:
            return int(env)
        except ValueError:
            raise EngineError(f"PERC_MAX_EDGES is not an integer: {env!r}") from None
    return DEFAULT_MAX_EDGES


# --------------------------------------------------------------------------
# block evaluation


class _Block:
    """Edge states of a block of configurations plus connectivity caches."""

    def __init__(self, n, directed, ends, states, size):
        self.n = n
        self.directed = directed
        self.ends = ends
        self.states = states
        self.size = size
        self._labels = None
        self._reach = {}
        self._variants = {}
        self._memo = {}

    def labels(self):
        """Component label (smallest member index) of every vertex, per configuration."""
        if self._labels is None:
            lab = np.repeat(np.arange(self.n, dtype=np.int16)[:, None], self.size, axis=1)
            live = [(u, v, s) for (u, v), s in zip(self.ends, self.states)
                    if u != v and (s is True or (s is not False and s.any()))]
            changed = True
            while changed:
                changed = False
                for u, v, s in live:
                    lu, lv = lab[u], lab[v]
                    diff = lu != lv
                    if s is not True:
                        diff &= s
                    if diff.any():
                        low = np.minimum(lu, lv)
                        lab[u] = np.where(diff, low, lu)
                        lab[v] = np.where(diff, low, lv)
                        changed = True
            self._labels = lab
        return self._labels

    def reach(self, sources: frozenset[int]):
        """Boolean (n, size) array: vertex reachable from `sources` along open directed edges."""
        hit = self._reach.get(sources)
        if hit is None:
            hit = np.zeros((self.n, self.size), dtype=bool)
            for s in sources:
                hit[s] = True
            live = [(u, v, s) for (u, v), s in zip(self.ends, self.states)
                    if u != v and s is not False]
            changed = True
            while changed:
                changed = False
                for u, v, s in live:
                    new = hit[u] & ~hit[v]
                    if s is not True:
                        new &= s
                    if new.any():
                        hit[v] |= new
                        changed = True
            self._reach[sources] = hit
        return hit

    def cluster_size(self, v: int):
        if self.directed:
            return self.reach(frozenset([v])).sum(axis=0)
        lab = self.labels()
        return (lab == lab[v]).sum(axis=0)

    def variant(self, u: int, v: int, extra_open: bool) -> "_Block":
        """Same block with every u-v edge closed, plus one extra edge u-v if requested."""
        key = (u, v, extra_open)
        blk = self._variants.get(key)
        if blk is None:
            states = []
            for (x, y), s in zip(self.ends, self.states):
                joins = (x, y) == (u, v) or (not self.directed and (y, x) == (u, v))
                states.append(False if joins else s)
            ends = list(self.ends)
            if extra_open:
                ends.append((u, v))
                states.append(True)
            blk = _Block(self.n, self.directed, ends, states, self.size)
            self._variants[key] = blk
        return blk

    def full(self, value: bool):
        return np.full(self.size, value, dtype=bool)


def _bind_set(g: WeightedGraph, S) -> frozenset[int]:
    try:
        return frozenset(g.index[x] for x in S)
    except KeyError as exc:
        raise EventError(f"unknown vertex {exc.args[0]!r}") from None


def _evaluate(ev: Event, blk: _Block, g: WeightedGraph):
    """Boolean vector of `ev` over the block."""
    hit = blk._memo.get(ev)
    if hit is not None:
        return hit
    if isinstance(ev, Conn):
        if blk.directed:
            raise EventError("conn atoms need an undirected graph; use reach")
        S, T = _bind_set(g, ev.S), _bind_set(g, ev.T)
        if S & T:
            out = blk.full(True)
        else:
            lab = blk.labels()
            out = blk.full(False)
            for s in S:
                for t in T:
                    out |= lab[s] == lab[t]
    elif isinstance(ev, Reach):
        if not blk.directed:
            raise EventError("reach atoms need a directed graph; use conn")
        S, T = _bind_set(g, ev.S), _bind_set(g, ev.T)
        hit_all = blk.reach(S)
        out = blk.full(False)
        for t in T:
            out |= hit_all[t]
    elif isinstance(ev, ClusterAtLeast):
        (v,) = _bind_set(g, [ev.v])
        out = blk.cluster_size(v) >= ev.k
    elif isinstance(ev, EdgeOpen):
        if not 0 <= ev.e < g.m:
            raise EventError(f"edge index {ev.e} out of range")
        s = blk.states[ev.e]
        out = blk.full(s) if isinstance(s, bool) else s
    elif isinstance(ev, Pivotal):
        u, v = (g.index.get(x) for x in ev.pair)
        if u is None or v is None:
            raise EventError(f"unknown vertex in pivotal pair {ev.pair!r}")
        with_edge = _evaluate(ev.inner, blk.variant(u, v, True), g)
        without = _evaluate(ev.inner, blk.variant(u, v, False), g)
        out = with_edge != without
    elif isinstance(ev, Not):
        out = ~_evaluate(ev.x, blk, g)
    elif isinstance(ev, And):
        out = blk.full(True)
        for a in ev.args:
            out = out & _evaluate(a, blk, g)
    elif isinstance(ev, Or):
        out = blk.full(False)
        for a in ev.args:
            out = out | _evaluate(a, blk, g)
    else:
        raise EventError(f"not an event: {ev!r}")
    blk._memo[ev] = out
    return out


def _evaluate_num(f: NumExpr, blk: _Block, g: WeightedGraph):
    if f.cluster_of is not None:
        (v,) = _bind_set(g, [f.cluster_of])
        out = blk.cluster_size(v).astype(np.int64)
    else:
        out = np.ones(blk.size, dtype=np.int64)
    for ev in f.events:
        out = out * _evaluate(ev, blk, g)
    return out


def _check_kinds(g: WeightedGraph, items):
    for item in items:
        events = item.events if isinstance(item, NumExpr) else (item,)
        for ev in events:
            stack = [ev]
            while stack:
                x = stack.pop()
                if isinstance(x, Conn) and g.directed:
                    raise EventError("conn atoms need an undirected graph; use reach")
                if isinstance(x, Reach) and not g.directed:
                    raise EventError("reach atoms need a directed graph; use conn")
                if isinstance(x, (And, Or)):
                    stack.extend(x.args)
                elif isinstance(x, Not):
                    stack.append(x.x)
                elif isinstance(x, Pivotal):
                    stack.append(x.inner)


# --------------------------------------------------------------------------
# exact weighted folding


@dataclass
class _Weights:
    exact: bool
    w0: list
    w1: list
    den: list


def _weights(g: WeightedGraph, mode: str | None) -> _Weights:
    exact = g.exact if mode is None else mode == "exact"
    if mode == "exact" and not g.exact:
        exact = True
    if exact:
        w0, w1, den = [], [], []
        for e in g.edges:
            p = Fraction(e.p)
            w1.append(p.numerator)
            w0.append(p.denominator - p.numerator)
            den.append(p.denominator)
        return _Weights(True, w0, w1, den)
    ps = [float(e.p) for e in g.edges]
    return _Weights(False, [1.0 - p for p in ps], ps, [1] * len(ps))


def _fold(arr, bits: Sequence[int], w: _Weights, keep: int | None, bound: int):
    """Weighted sum over the leading 2^len(bits) configuration axis of `arr`.

    Bit i of the configuration index is the state of edge bits[i].  When
    `keep` is among the bits that axis is not summed and ends up last.
    Returns (array, bound) with bound an upper bound on |entries| (exact mode).
    """
    k = len(bits)
    a = arr.reshape([2] * k + list(arr.shape[1:]))
    for i, e in enumerate(bits):
        ax = k - 1 - i
        if e == keep:
            a = np.moveaxis(a, ax, -1)
            continue
        if w.exact:
            bound *= w.den[e]
            if bound >= _INT_LIMIT and a.dtype != object:
                a = a.astype(object)
        a = a.take(0, axis=ax) * w.w0[e] + a.take(1, axis=ax) * w.w1[e]
    return a, bound


def _run(g: WeightedGraph, evaluators: Sequence[Callable], *, keep=None,
         max_edges=None, mode=None) -> list:
    """Weighted sums of each evaluator's per-configuration value.

    Returns, per evaluator, the expectation (keep=None) or the pair of partial
    expectations with edge `keep` closed / open, each conditioned on that state.
    """
    # edges with p in {0, 1} are constant and need no enumeration
    free = [e for e, edge in enumerate(g.edges) if 0 < edge.p < 1 or e == keep]
    m = len(free)
    limit = max_edges_default() if max_edges is None else max_edges
    if m > limit:
        raise EdgeLimitExceeded(
            f"{m} random edges exceed the exact-enumeration limit of {limit}; "
            "raise --max-edges / PERC_MAX_EDGES or use Monte Carlo (mc)")
    w = _weights(g, mode)
    ends = [(g.index[e.u], g.index[e.v]) for e in g.edges]
    fixed = {e: bool(edge.p >= 1) for e, edge in enumerate(g.edges) if e not in free}
    c = min(m, CHUNK_BITS)
    size = 1 << c
    idx = np.arange(size, dtype=np.int64)
    low_bits = free[:c]
    high_bits = free[c:]
    low_states = {e: ((idx >> i) & 1).astype(bool) for i, e in enumerate(low_bits)}
    per_eval = [[] for _ in evaluators]
    for h in range(1 << (m - c)):
        high = {e: bool((h >> i) & 1) for i, e in enumerate(high_bits)}
        states = [low_states[e] if e in low_states else high.get(e, fixed.get(e))
                  for e in range(g.m)]
        blk = _Block(g.n, g.directed, ends, states, size)
        for j, fn in enumerate(evaluators):
            vals = np.broadcast_to(np.asarray(fn(blk)), (size,))
            if w.exact:
                vals = vals.astype(np.int64)
                vmax = int(np.abs(vals).max()) if vals.size else 0
            else:
                vals = vals.astype(float)
                vmax = 1
            folded, _ = _fold(vals, low_bits, w, keep, max(vmax, 1))
            per_eval[j].append(folded)
    results = []
    for parts in per_eval:
        if w.exact:
            # high-bit folds grow without a cheap bound; finish in Python ints
            arr = np.array([np.asarray(p, dtype=object) for p in parts], dtype=object)
        else:
            arr = np.array(parts, dtype=float)
        total, _ = _fold(arr, high_bits, w, keep, 1)
        results.append(_normalise(total, w, keep))
    return results


def _normalise(total, w: _Weights, keep):
    if isinstance(total, np.ndarray) and total.ndim == 0:
        total = total.item()
    if not w.exact:
        if keep is None:
            return float(total)
        return float(total[0]), float(total[1])
    den = 1
    for e, d in enumerate(w.den):
        if e != keep:
            den *= d
    if keep is None:
        return Fraction(int(total), den)
    return Fraction(int(total[0]), den), Fraction(int(total[1]), den)


# --------------------------------------------------------------------------
# public surface


def probabilities(g: WeightedGraph, events: Sequence[Event], *, max_edges=None,
                  mode=None) -> list[Prob]:
    """Probabilities of several events from one enumeration pass."""
    _check_kinds(g, events)
    fns = [lambda blk, ev=ev: _evaluate(ev, blk, g) for ev in events]
    return _run(g, fns, max_edges=max_edges, mode=mode)


def event_probability(g: WeightedGraph, ev: Event, *, max_edges=None, mode=None) -> Prob:
    return probabilities(g, [ev], max_edges=max_edges, mode=mode)[0]


def expectations(g: WeightedGraph, fs: Sequence[NumExpr], *, max_edges=None, mode=None):
    _check_kinds(g, fs)
    fns = [lambda blk, f=f: _evaluate_num(f, blk, g) for f in fs]
    return _run(g, fns, max_edges=max_edges, mode=mode)


def expectation(g: WeightedGraph, f: NumExpr, *, max_edges=None, mode=None) -> Prob:
    """Exact expectation of a cluster-size / indicator product."""
    return expectations(g, [f], max_edges=max_edges, mode=mode)[0]


def conditional_probability(g: WeightedGraph, ev: Event, given: Event, **kw) -> Prob:
    joint, base = probabilities(g, [And((ev, given)), given], **kw)
    if base == 0:
        raise ZeroConditioning("conditioning event has probability zero")
    return joint / base


def pivotal_probability(g: WeightedGraph, pair: tuple[str, str], inner: Event, **kw) -> Prob:
    return event_probability(g, Pivotal(pair, inner), **kw)


@dataclass(frozen=True)
class EdgePolynomial:
    """Event probability as an affine function q -> c0 + c1*q of one edge's probability."""
    e: int
    c0: Prob
    c1: Prob

    def __call__(self, q):
        return self.c0 + self.c1 * q


def edge_polynomials(g: WeightedGraph, e: int, events: Sequence[Event], **kw) -> list[EdgePolynomial]:
    if not 0 <= e < g.m:
        raise EventError(f"edge index {e} out of range")
    _check_kinds(g, events)
    fns = [lambda blk, ev=ev: _evaluate(ev, blk, g) for ev in events]
    pairs = _run(g, fns, keep=e, **kw)
    return [EdgePolynomial(e, s0, s1 - s0) for s0, s1 in pairs]


def edge_polynomial(g: WeightedGraph, e: int, ev: Event, **kw) -> EdgePolynomial:
    return edge_polynomials(g, e, [ev], **kw)[0]


def subsets(items: Sequence) -> list[tuple]:
    return [c for r in range(len(items) + 1) for c in itertools.combinations(items, r)]


def pattern_table(g: WeightedGraph, t: TerminalSpec, **kw) -> dict[frozenset, Prob]:
    """P(b is joined to exactly the members S of A), for every S in the power set of A."""
    A = list(t.A)
    table_keys, events = [], []
    for S in subsets(A):
        inside = [link(g.directed, t.b, a) for a in S]
        outside = [Not(link(g.directed, t.b, a)) for a in A if a not in S]
        table_keys.append(frozenset(S))
        events.append(And(inside + outside))
    return dict(zip(table_keys, probabilities(g, events, **kw)))


def phi_table(g: WeightedGraph, t: TerminalSpec, **kw) -> dict[frozenset, Prob | None]:
    """P(0 joined to A(X) | A(X) not joined to the rest of A) for nonempty X.

    Entries whose conditioning event has probability zero are None.
    """
    A = list(t.A)
    keys, events = [], []
    for X in subsets(A):
        if not X:
            continue
        rest = [a for a in A if a not in X]
        sep = Not(link(g.directed, X, rest)) if rest else And(())
        keys.append(frozenset(X))
        events.extend([And((link(g.directed, t.zero, X), sep)), sep])
    probs = probabilities(g, events, **kw)
    out = {}
    for i, X in enumerate(keys):
        joint, base = probs[2 * i], probs[2 * i + 1]
        out[X] = None if base == 0 else joint / base
    return out


# helpers for coordinate ascent: indicator tables are fixed by the topology,
# only the folding weights change with the probabilities


def indicator_table(g: WeightedGraph, events: Sequence, *, max_edges=16) -> np.ndarray:
    """(len(events), 2^m) integer array of per-configuration values.

    Entries are event indicators, or the value of a NumExpr.
    """
    if g.m > max_edges:
        raise EdgeLimitExceeded(f"{g.m} edges exceed the indicator-table limit {max_edges}")
    _check_kinds(g, events)
    size = 1 << g.m
    idx = np.arange(size, dtype=np.int64)
    states = [((idx >> e) & 1).astype(bool) for e in range(g.m)]
    ends = [(g.index[e.u], g.index[e.v]) for e in g.edges]
    blk = _Block(g.n, g.directed, ends, states, size)
    rows = [_evaluate_num(x, blk, g) if isinstance(x, NumExpr) else _evaluate(x, blk, g) for x in events]
    return np.array(rows, dtype=np.int64).reshape(len(events), size)


def fold_table(g: WeightedGraph, table: np.ndarray, keep: int | None = None, mode=None):
    """Probabilities (or edge polynomials when `keep` is given) of tabulated events."""
    w = _weights(g, mode)
    arr = table.T if w.exact else table.T.astype(float)
    bound = max(1, int(np.abs(table).max())) if table.size else 1
    total, _ = _fold(arr, list(range(g.m)), w, keep, bound)
    out = []
    for j in range(table.shape[0]):
        if keep is None:
            out.append(_normalise(total[j], w, None))
        else:
            s0, s1 = _normalise(total[j], w, keep)
            out.append(EdgePolynomial(keep, s0, s1 - s0))
    return out


def cluster_distribution(g: WeightedGraph, v: str, **kw) -> dict[frozenset, Prob]:
    """Law of the cluster C(v) as a map from vertex sets to probabilities."""
    if g.n > 62:
        raise EngineError("cluster_distribution supports at most 62 vertices")
    vi = g.index[v]
    masks_seen: set[int] = set()

    def masks(blk):
        if blk.directed:
            hit = blk.reach(frozenset([vi]))
        else:
            lab = blk.labels()
            hit = lab == lab[vi]
        weights = (np.int64(1) << np.arange(g.n, dtype=np.int64))[:, None]
        return (hit * weights).sum(axis=0)

    # first pass collects the distinct clusters, second pass weighs each one
    def collect(blk):
        masks_seen.update(np.unique(masks(blk)).tolist())
        return blk.full(False)

    _run(g, [collect], **kw)
    order = sorted(masks_seen)
    fns = [lambda blk, mk=mk: masks(blk) == mk for mk in order]
    probs = _run(g, fns, **kw)
    return {
        frozenset(g.vertices[i] for i in range(g.n) if mk >> i & 1): p
        for mk, p in zip(order, probs)
    }
