"""Random instances, coordinate ascent on the margin, and JSONL campaigns."""
from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .checkers import check_gluing_step, check_postfkg, mcp_function, run_check
from .engine import fold_table, indicator_table
from .events import And, link
from .graph import Edge, GraphError, TerminalSpec, WeightedGraph, format_prob
from .io import graph_from_obj, graph_to_obj

LAWS = ("half", "dyadic", "uniform-grid")
ASCENT_CONJECTURES = ("postfkg", "prefkg", "prefkga", "mcp")
# interior optima of the single-edge restriction are rounded to this grid so
# that denominators stay bounded over many passes
ASCENT_GRID = 1 << 12
RECORD_VERSION = 1


# --------------------------------------------------------------------------
# generators


def parse_law(law: str, k: int = 3) -> tuple[str, int]:
    """'dyadic-5' -> ('dyadic', 5); other names pass through with `k`."""
    name, _, digits = law.partition("-")
    if name == "dyadic" and digits:
        try:
            return name, int(digits)
        except ValueError:
            raise ValueError(f"bad dyadic law {law!r}") from None
    if law not in LAWS:
        raise ValueError(f"unknown probability law {law!r}; choose from half, dyadic-K, uniform-grid")
    return law, k


def _draw_p(rng, law: str, k: int):
    if law == "half":
        return Fraction(1, 2)
    if law == "dyadic":
        return Fraction(int(rng.integers(1, 1 << k)), 1 << k)
    if law == "uniform-grid":
        return Fraction(int(rng.integers(1, 10)), 10)
    raise ValueError(f"unknown probability law {law!r}; choose from {LAWS}")


def random_instance(n: int, m: int, seed: int, directed: bool = False, law: str = "half",
                    k: int = 3, a_size: int | None = None) -> tuple[WeightedGraph, TerminalSpec]:
    """Uniform simple graph on vertices "0".."n-1" with m edges.

    The zero terminal is "0" (the labelling is exchangeable, so this loses
    nothing) and b is uniform among the others.  A is a uniform nonempty
    subset of the vertices other than b, with b added with probability 1/2;
    with `a_size` given, A is instead a uniform a_size-subset of the
    vertices other than 0.
    """
    if n < 2:
        raise GraphError("random_instance needs n >= 2")
    law, k = parse_law(law, k)
    rng = np.random.default_rng(seed)
    names = [str(i) for i in range(n)]
    pairs = list(itertools.permutations(names, 2) if directed else itertools.combinations(names, 2))
    if not 0 <= m <= len(pairs):
        raise GraphError(f"{m} edges do not fit a simple graph on {n} vertices (max {len(pairs)})")
    chosen = sorted(rng.choice(len(pairs), size=m, replace=False).tolist()) if m else []
    edges = [Edge(*pairs[i], _draw_p(rng, law, k)) for i in chosen]
    b = names[int(rng.integers(1, n))]
    if a_size is None:
        pool = [v for v in names if v != b]
        while True:
            mask = rng.integers(0, 2, size=len(pool))
            if mask.any():
                break
        A = [v for v, bit in zip(pool, mask) if bit]
        if rng.integers(2):
            A.append(b)
    else:
        pool = names[1:]
        if not 1 <= a_size <= len(pool):
            raise GraphError(f"|A| = {a_size} impossible with {n} vertices")
        A = [pool[i] for i in sorted(rng.choice(len(pool), size=a_size, replace=False).tolist())]
    A.sort(key=lambda v: int(v))
    return WeightedGraph(names, edges, directed), TerminalSpec("0", b, tuple(A))


# --------------------------------------------------------------------------
# coordinate ascent


def _objective(conjecture, g, t, family="cluster-size", k=None):
    """(items, has_factor): margin = v[0] - (v[1] if has_factor else 1) * min(v[rest])."""
    L = lambda S, T: link(g.directed, S, T)
    A = list(t.A)
    if conjecture == "postfkg":
        return [L(t.zero, t.b), L(t.zero, A)] + [L(a, t.b) for a in A], True
    to_A = L(t.zero, A)
    if conjecture == "prefkg":
        return [L(t.zero, t.b)] + [And((to_A, L(a, t.b))) for a in A], False
    if conjecture == "prefkga":
        return [And((L(t.zero, t.b), to_A))] + [And((to_A, L(a, t.b))) for a in A], False
    if conjecture == "mcp":
        if g.directed:
            raise GraphError("mcp is stated for undirected graphs only")
        return [mcp_function(family, x, t, k) for x in [t.zero] + A], False
    raise ValueError(f"coordinate ascent supports {ASCENT_CONJECTURES}, not {conjecture!r}")


def _margin(vals, factor):
    rest = vals[2:] if factor else vals[1:]
    return vals[0] - (vals[1] if factor else 1) * min(rest)


def _restricted_min(polys, factor, current):
    """Minimise the margin over q in [0,1] when one edge probability varies.

    Every constituent is affine in q, so the restriction is a minimum of
    quadratics; its minimiser is an endpoint, a crossing point of two
    per-a lines, or a vertex of one of the quadratics.
    """
    head = polys[0]
    fac = polys[1] if factor else None
    per_a = polys[2:] if factor else polys[1:]
    cands = {Fraction(0), Fraction(1), current}
    for p, r in itertools.combinations(per_a, 2):
        if p.c1 != r.c1:
            cands.add(Fraction(r.c0 - p.c0) / (p.c1 - r.c1))
    if fac is not None:
        for p in per_a:
            quad = fac.c1 * p.c1
            if quad != 0:
                lin = head.c1 - fac.c0 * p.c1 - fac.c1 * p.c0
                cands.add(Fraction(lin) / (2 * quad))
    grid = []
    for q in cands:
        if 0 <= q <= 1:
            grid.append(q if q.denominator <= ASCENT_GRID else q.limit_denominator(ASCENT_GRID))

    def value(q):
        low = min(p(q) for p in per_a)
        return head(q) - (fac(q) if fac is not None else 1) * low

    best_q, best = current, value(current)
    for q in sorted(set(grid)):
        v = value(q)
        if v < best:
            best_q, best = q, v
    return best_q, best


@dataclass
class SearchRecord:
    graph: WeightedGraph
    terminals: TerminalSpec
    conjecture: str
    margin: object
    initial_margin: object
    trace: list = field(default_factory=list)
    seed: int | None = None
    exact: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def trace_length(self) -> int:
        return len(self.trace)

    def to_dict(self, timestamp=True) -> dict:
        out = {
            "v": RECORD_VERSION,
            "seed": self.seed,
            "conjecture": self.conjecture,
            "instance": graph_to_obj(self.graph, self.terminals),
            "margin": _fmt(self.margin),
            "initial_margin": _fmt(self.initial_margin),
            "trace_length": self.trace_length,
            "exact": self.exact,
            "violation": self.margin < 0,
        }
        out.update(self.extra)
        if timestamp:
            out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return out


def _fmt(x):
    return format_prob(x) if isinstance(x, Fraction) else x


def ascend(g: WeightedGraph, t: TerminalSpec, conjecture: str = "postfkg", iterations: int = 20,
           *, family="cluster-size", k=None, mode=None, seed=None, max_edges=16,
           pair_moves=True) -> SearchRecord:
    """Round-robin coordinate descent of the margin over edge probabilities.

    `iterations` caps the number of full passes over the edges.  A pass with
    no strict improvement ends the search, unless `pair_moves` finds a joint
    two-edge move that helps.  The margin never increases.
    """
    items, factor = _objective(conjecture, g, t, family, k)
    table = indicator_table(g, items, max_edges=max_edges)
    exact = mode != "float"
    if exact and not g.exact:
        g = WeightedGraph(g.vertices, [e._replace(p=Fraction(e.p)) for e in g.edges], g.directed)
    elif not exact:
        g = g.to_float()
    fmode = "exact" if exact else "float"
    current = _margin(fold_table(g, table, mode=fmode), factor)
    start = current
    trace = []
    for _ in range(iterations):
        improved = False
        for e in range(g.m):
            polys = fold_table(g, table, keep=e, mode=fmode)
            if exact:
                q, value = _restricted_min(polys, factor, Fraction(g.edges[e].p))
            else:
                q, value = _restricted_min_float(polys, factor, g.edges[e].p)
            if value < current:
                g = g.with_probability(e, q)
                current = value
                trace.append({"edge": e, "p": _fmt(q), "margin": _fmt(value)})
                improved = True
        if not improved and pair_moves:
            g, current, improved = _pair_pass(g, table, factor, fmode, current, trace)
        if not improved:
            break
    return SearchRecord(g, t, conjecture, current, start, trace, seed, exact)


def _pair_pass(g, table, factor, fmode, current, trace):
    """Best joint move of two edges to endpoint values {0, current, 1}.

    The margin is a maximum over a of smooth functions, so single-edge
    descent stalls where two of them tie; moving two edges at once can
    break such ties.
    """
    one, zero = (Fraction(1), Fraction(0)) if fmode == "exact" else (1.0, 0.0)
    best = None
    for e, f in itertools.combinations(range(g.m), 2):
        for qe in (zero, one, g.edges[e].p):
            for qf in (zero, one, g.edges[f].p):
                if qe == g.edges[e].p or qf == g.edges[f].p:
                    continue
                h = g.with_probability(e, qe).with_probability(f, qf)
                value = _margin(fold_table(h, table, mode=fmode), factor)
                if value < current and (best is None or value < best[0]):
                    best = (value, e, qe, f, qf)
    if best is None:
        return g, current, False
    value, e, qe, f, qf = best
    g = g.with_probability(e, qe).with_probability(f, qf)
    trace.append({"edges": [e, f], "p": [_fmt(qe), _fmt(qf)], "margin": _fmt(value)})
    return g, value, True


def _restricted_min_float(polys, factor, current):
    qs = np.linspace(0.0, 1.0, 257)
    head = polys[0]
    fac = polys[1] if factor else None
    per_a = polys[2:] if factor else polys[1:]
    low = np.min([p.c0 + p.c1 * qs for p in per_a], axis=0)
    vals = head.c0 + head.c1 * qs - ((fac.c0 + fac.c1 * qs) if fac is not None else 1.0) * low
    i = int(np.argmin(vals))
    now = head(current) - (fac(current) if fac is not None else 1.0) * min(p(current) for p in per_a)
    return (float(qs[i]), float(vals[i])) if vals[i] < now else (current, now)


def exact_recheck(g: WeightedGraph, t: TerminalSpec, conjecture: str, **kw):
    """Margin recomputed in exact arithmetic; float probabilities are converted losslessly."""
    gx = WeightedGraph(g.vertices, [e._replace(p=Fraction(e.p)) for e in g.edges], g.directed)
    return run_check(conjecture, gx, t, **kw).margin


# --------------------------------------------------------------------------
# campaigns


@dataclass
class CampaignParams:
    conjecture: str = "postfkg"
    n: int = 5
    m: tuple[int, int] = (4, 8)
    directed: bool = False
    law: str = "dyadic"
    k: int = 3
    a_size: int | None = None
    budget: int = 100
    seed: int = 0
    start: int = 0
    iters: int = 10
    pair_moves: bool = True
    mode: str | None = None
    family: str = "cluster-size"
    threshold: int | None = None
    workers: int = 1
    max_edges: int = 16

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _instance(params: CampaignParams, index: int):
    seed = params.seed + index
    lo, hi = params.m
    rng = np.random.default_rng([seed, 1])
    cap = params.n * (params.n - 1) // (1 if params.directed else 2)
    m = min(int(rng.integers(lo, hi + 1)), cap)
    g, t = random_instance(params.n, m, seed, params.directed, params.law, params.k, params.a_size)
    return seed, g, t


def _gluing_record(params, seed, g, t) -> dict:
    """Worst naive-strengthening margin over all edges of the instance."""
    worst = None
    for e in g.edges:
        if e.u == e.v:
            continue
        rep = check_gluing_step(g, t, (e.u, e.v))
        mg = rep.auxiliary["naive_margin"]
        if mg is not None and (worst is None or mg < worst[0]):
            worst = (mg, rep)
    out = {
        "v": RECORD_VERSION, "seed": seed, "conjecture": "gluing-step",
        "instance": graph_to_obj(g, t), "exact": True,
    }
    if worst is None:
        out.update(margin=None, violation=False, pair=None, premise_met=False)
        return out
    mg, rep = worst
    bad = [r["a"] for r in rep.auxiliary["naive"] if r["premise"] and r["margin"] < 0]
    out.update(
        margin=format_prob(mg), violation=mg < 0, pair=rep.auxiliary["pair"],
        premise_met=True, naive_witness_a=bad, conclusion_margin=format_prob(rep.margin),
        conjecture_premise_met=rep.premise_met,
    )
    return out


def _run_one(args) -> dict:
    params, index = args
    seed, g, t = _instance(params, index)
    if params.conjecture == "gluing-step":
        rec = _gluing_record(params, seed, g, t)
        rec["index"] = index
        return rec
    if params.conjecture in ASCENT_CONJECTURES and params.iters > 0:
        r = ascend(g, t, params.conjecture, params.iters, family=params.family,
                   k=params.threshold, mode=params.mode, seed=seed, max_edges=params.max_edges,
                   pair_moves=params.pair_moves)
        rec = r.to_dict(timestamp=False)
        margin = r.margin
        g_final = r.graph
    else:
        rep = run_check(params.conjecture, g, t, family=params.family, k=params.threshold,
                        mode=params.mode, max_edges=params.max_edges)
        rec = {"v": RECORD_VERSION, "seed": seed, "conjecture": params.conjecture,
               "instance": graph_to_obj(g, t), "margin": _fmt(rep.margin),
               "initial_margin": _fmt(rep.margin), "trace_length": 0, "exact": rep.exact,
               "violation": rep.violated}
        margin = rep.margin if rep.exact else rep.margin + rep.tolerance
        g_final = g
    if isinstance(margin, float) and margin < 0:
        # a float-mode violation only counts once confirmed exactly
        exact_margin = exact_recheck(g_final, t, params.conjecture, family=params.family,
                                     k=params.threshold)
        rec["exact_margin"] = format_prob(exact_margin)
        rec["violation"] = exact_margin < 0
    if params.conjecture == "mcp":
        rec["family"] = params.family
        rec["k"] = params.threshold
    if params.conjecture == "postfkg":
        post = check_postfkg(g_final, t, mode=params.mode)
        rec["frontier"] = {key: _fmt(post.auxiliary[key]) for key in ("p_zero_A", "min_p_a_b", "p_zero_b")}
    rec["index"] = index
    return rec


def _parse_margin(x):
    if x is None:
        return None
    if isinstance(x, str):
        return Fraction(x)
    return x


def campaign(params: CampaignParams, out_path=None, *, timestamp=True) -> dict:
    """Run `params.budget` instances, streaming one JSON record per line.

    Instance i uses seed params.seed + params.start + i, so a campaign can
    be resumed or sharded by moving `start`.  Records are written in index
    order whatever the worker count.
    """
    indices = range(params.start, params.start + params.budget)
    jobs = [(params, i) for i in indices]
    out = open(out_path, "w") if out_path is not None else None
    summary = {"params": params.to_dict(), "instances": 0, "violations": 0,
               "min_margin": None, "min_margin_index": None, "violation_indices": [],
               "frontier": []}
    t0 = time.perf_counter()
    try:
        if params.workers > 1:
            with ProcessPoolExecutor(params.workers) as pool:
                results = pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * params.workers)))
                for rec in results:
                    _consume(rec, summary, out, timestamp)
        else:
            for job in jobs:
                _consume(_run_one(job), summary, out, timestamp)
    finally:
        if out is not None:
            out.close()
    summary["seconds"] = round(time.perf_counter() - t0, 3)
    if summary["min_margin"] is not None:
        summary["min_margin"] = _fmt(summary["min_margin"])
    return summary


def _consume(rec, summary, out, timestamp):
    summary["instances"] += 1
    mg = _parse_margin(rec.get("exact_margin", rec.get("margin")))
    if mg is not None and (summary["min_margin"] is None or mg < summary["min_margin"]):
        summary["min_margin"] = mg
        summary["min_margin_index"] = rec["index"]
    if rec.get("violation"):
        summary["violations"] += 1
        summary["violation_indices"].append(rec["index"])
    if "frontier" in rec:
        summary["frontier"].append(rec["frontier"])
    if out is not None:
        if timestamp:
            rec = dict(rec, timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
        out.write(json.dumps(rec) + "\n")


def load_records(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def recheck_record(rec: dict):
    """Recompute a persisted record's margin from its stored instance (exact)."""
    g, t = graph_from_obj(rec["instance"])
    if rec["conjecture"] == "gluing-step":
        if rec.get("pair") is None:
            return None
        rep = check_gluing_step(g, t, tuple(rec["pair"]))
        return rep.auxiliary["naive_margin"]
    return run_check(rec["conjecture"], g, t, family=rec.get("family", "cluster-size"),
                     k=rec.get("k")).margin


def frontier_points(summary_or_records) -> list[dict]:
    """Frontier inputs (as exact values) from a campaign summary or record list."""
    rows = summary_or_records["frontier"] if isinstance(summary_or_records, dict) else [
        r["frontier"] for r in summary_or_records if "frontier" in r]
    return [{k: _parse_margin(v) for k, v in row.items()} for row in rows]
