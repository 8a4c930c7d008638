"""Sampling estimates for graphs past the exact-enumeration limit.

Samples come in fixed-size blocks.  Block j of stream s under seed S draws
from Philox keyed by SeedSequence(S, spawn_key=(s, j)), so every estimate is
a deterministic function of (seed, stream, samples) no matter how blocks are
scheduled across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .checkers import CheckReport, argmin
from .engine import _Block, _check_kinds, _evaluate
from .events import And, Event, link
from .graph import GraphError, TerminalSpec, WeightedGraph

BLOCK = 1 << 14
LEVEL = 0.99
Z = NormalDist().inv_cdf(0.5 + LEVEL / 2)


@dataclass
class McEstimate:
    estimate: float
    se: float
    n: int
    lo: float
    hi: float
    seed: int
    stream: int = 0
    hits: int = 0
    interval: str = "normal"

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "se": self.se, "samples": self.n,
                "ci99": [self.lo, self.hi], "interval": self.interval,
                "seed": self.seed, "stream": self.stream, "mode": "float"}


def interval(hits: int, n: int, z: float = Z) -> tuple[float, float, str]:
    """Normal interval, or Wilson's when the estimate sits within 5/sqrt(n) of 0 or 1."""
    p = hits / n
    if min(p, 1 - p) < 5 / math.sqrt(n):
        den = 1 + z * z / n
        mid = (p + z * z / (2 * n)) / den
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
        # at p in {0, 1} rounding can leave the endpoint a hair short of p
        return max(0.0, min(p, mid - half)), min(1.0, max(p, mid + half)), "wilson"
    half = z * math.sqrt(p * (1 - p) / n)
    return max(0.0, p - half), min(1.0, p + half), "normal"


def _bernoulli(rng, p, size):
    if isinstance(p, Fraction) and p.denominator < (1 << 62):
        return rng.integers(0, p.denominator, size=size) < p.numerator
    return rng.random(size) < float(p)


def _block_hits(g: WeightedGraph, ev: Event, seed: int, stream: int, j: int, size: int) -> int:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, j))))
    states = [_bernoulli(rng, e.p, size) for e in g.edges]
    ends = [(g.index[e.u], g.index[e.v]) for e in g.edges]
    blk = _Block(g.n, g.directed, ends, states, size)
    return int(np.count_nonzero(_evaluate(ev, blk, g)))


def estimate_event(g: WeightedGraph, ev: Event, samples: int, seed: int = 0, *, stream: int = 0,
                   workers: int = 1) -> McEstimate:
    """Fraction of `samples` independent configurations in which `ev` holds."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_kinds(g, [ev])
    sizes = [BLOCK] * (samples // BLOCK)
    if samples % BLOCK:
        sizes.append(samples % BLOCK)
    run = lambda j: _block_hits(g, ev, seed, stream, j, sizes[j])
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(run, range(len(sizes))))
    else:
        hits = sum(run(j) for j in range(len(sizes)))
    p = hits / samples
    lo, hi, kind = interval(hits, samples)
    return McEstimate(p, math.sqrt(p * (1 - p) / samples), samples, lo, hi, seed, stream, hits, kind)


def estimate_check(g: WeightedGraph, t: TerminalSpec, conjecture: str, samples: int,
                   seed: int = 0, *, workers: int = 1) -> CheckReport:
    """Approximate post-FKG / pre-FKG report; each probability gets its own stream.

    The margin's standard error comes from the delta method around the
    estimated minimiser.
    """
    L = lambda S, T: link(g.directed, S, T)
    A = list(t.A)
    to_A = L(t.zero, A)
    if conjecture == "postfkg":
        lhs_ev, factor_ev, per = L(t.zero, t.b), to_A, [L(a, t.b) for a in A]
    elif conjecture == "prefkg":
        lhs_ev, factor_ev, per = L(t.zero, t.b), None, [And((to_A, L(a, t.b))) for a in A]
    elif conjecture == "prefkga":
        lhs_ev, factor_ev, per = And((L(t.zero, t.b), to_A)), None, [And((to_A, L(a, t.b))) for a in A]
    else:
        raise GraphError(f"Monte Carlo checks support postfkg, prefkg and prefkga, not {conjecture!r}")
    est = lambda ev, s: estimate_event(g, ev, samples, seed, stream=s, workers=workers)
    lhs = est(lhs_ev, 0)
    fac = est(factor_ev, 1) if factor_ev is not None else None
    per_a = {a: est(ev, 2 + i) for i, (a, ev) in enumerate(zip(A, per))}
    low, mins = argmin({a: e.estimate for a, e in per_a.items()})
    low_se = per_a[mins[0]].se
    if fac is None:
        rhs = low
        var = lhs.se ** 2 + low_se ** 2
    else:
        rhs = fac.estimate * low
        var = lhs.se ** 2 + (low * fac.se) ** 2 + (fac.estimate * low_se) ** 2
    se = math.sqrt(var)
    aux = {
        "samples": samples, "seed": seed, "margin_se": se,
        "margin_ci99": [lhs.estimate - rhs - Z * se, lhs.estimate - rhs + Z * se],
        "lhs": lhs.to_dict(), "per_a": {a: e.to_dict() for a, e in per_a.items()},
    }
    if fac is not None:
        aux["factor"] = fac.to_dict()
    return CheckReport(conjecture, lhs.estimate, rhs, mins, False, aux,
                       label="directed variant" if g.directed else "monte carlo")
