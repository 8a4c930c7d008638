"""Evaluation of the conjectured and proved inequalities on one instance.

Every check returns a CheckReport holding both sides of the inequality
``lhs >= rhs`` as exact rationals (floats only in float mode and in the
influence bound, whose square root is irrational in general).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .engine import cluster_distribution, edge_polynomials, expectations, probabilities
from .events import And, ClusterAtLeast, Conn, Not, NumExpr, link
from .graph import GraphError, Prob, TerminalSpec, WeightedGraph, format_prob, glue

CONJECTURES = (
    "postfkg", "prefkg", "prefkga", "mcp", "good-quadruple", "gluing-step",
    "influence-bound", "epsdel-frontier",
)
MCP_FAMILIES = ("cluster-size", "threshold", "indicator-of-b")
INFLUENCE_TOL = 1e-9
PSD_FLOAT_FLOOR = -1e-9


@dataclass
class CheckReport:
    """One evaluation of ``lhs >= rhs``; a negative margin is a violation.

    `premise_met` is False for conditional statements whose hypothesis fails
    on the instance; such a report never counts as a violation.
    """
    conjecture: str
    lhs: Prob
    rhs: Prob
    minimizers: list[str] = field(default_factory=list)
    exact: bool = True
    auxiliary: dict = field(default_factory=dict)
    label: str | None = None
    premise_met: bool = True
    tolerance: float = 0.0

    @property
    def margin(self) -> Prob:
        return self.lhs - self.rhs

    @property
    def violated(self) -> bool:
        return self.premise_met and self.margin < -self.tolerance

    def to_dict(self) -> dict:
        out = {
            "conjecture": self.conjecture,
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "margin": _jsonable(self.margin),
            "minimizers": list(self.minimizers),
            "exact": self.exact,
            "premise_met": self.premise_met,
            "violated": self.violated,
            "auxiliary": _jsonable(self.auxiliary),
        }
        if self.label:
            out["label"] = self.label
        if not self.exact:
            out["mode"] = "float"
            out["tolerance"] = self.tolerance
        return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_prob(x)
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return float(x) if isinstance(x, (float, np.floating)) else int(x)
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, frozenset) else ",".join(sorted(k)): _jsonable(v)
                for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, frozenset):
        return sorted(x)
    return str(x)


def argmin(values: dict) -> tuple[Prob, list]:
    """Minimum value and every key attaining it."""
    low = min(values.values())
    return low, [k for k, v in values.items() if v == low]


def _exact(g: WeightedGraph, mode) -> bool:
    return mode == "exact" or (mode is None and g.exact)


def _undirected_only(g: WeightedGraph, what: str):
    if g.directed:
        raise GraphError(f"{what} is stated for undirected graphs only")


def _directed_label(g):
    return "directed variant" if g.directed else None


# --------------------------------------------------------------------------
# post-FKG and pre-FKG


def check_postfkg(g: WeightedGraph, t: TerminalSpec, **kw) -> CheckReport:
    """P(0~b) >= P(0~A) min_a P(a~b); reachability replaces connection on directed graphs."""
    L = lambda S, T: link(g.directed, S, T)
    A = list(t.A)
    probs = probabilities(g, [L(t.zero, t.b), L(t.zero, A)] + [L(a, t.b) for a in A], **kw)
    p0b, p0A = probs[0], probs[1]
    per_a = dict(zip(A, probs[2:]))
    low, mins = argmin(per_a)
    return CheckReport(
        "postfkg", p0b, p0A * low, mins, _exact(g, kw.get("mode")),
        {"p_zero_b": p0b, "p_zero_A": p0A, "p_a_b": per_a, "min_p_a_b": low},
        label=_directed_label(g),
    )


def _pre_fkg(g, t, strong: bool, **kw) -> CheckReport:
    L = lambda S, T: link(g.directed, S, T)
    A = list(t.A)
    to_A = L(t.zero, A)
    lhs_ev = And((L(t.zero, t.b), to_A)) if strong else L(t.zero, t.b)
    events = [lhs_ev] + [And((to_A, L(a, t.b))) for a in A]
    probs = probabilities(g, events, **kw)
    per_a = dict(zip(A, probs[1:]))
    low, mins = argmin(per_a)
    aux = {"p_zero_A_a_b": per_a}
    return CheckReport("prefkga" if strong else "prefkg", probs[0], low, mins,
                       _exact(g, kw.get("mode")), aux, label=_directed_label(g))


def check_prefkg(g: WeightedGraph, t: TerminalSpec, **kw) -> CheckReport:
    """P(0~b) >= min_a P(0~A, a~b)."""
    return _pre_fkg(g, t, False, **kw)


def check_prefkga(g: WeightedGraph, t: TerminalSpec, *, candidates: bool = True, **kw) -> CheckReport:
    """P(0~b, 0~A) >= min_a P(0~A, a~b).

    With `candidates`, also records for three alternative choices of a (the
    minimiser of P(a~b), of P(a~b, 0 not~ A), and of P(a~b) once the edges at
    0 are removed) whether the inequality holds with that a on the right.
    """
    rep = _pre_fkg(g, t, True, **kw)
    if candidates:
        rep.auxiliary["candidates"] = _candidate_flags(g, t, rep, **kw)
    return rep


def _candidate_flags(g, t, rep, **kw):
    L = lambda S, T: link(g.directed, S, T)
    A = list(t.A)
    to_A = L(t.zero, A)
    probs = probabilities(g, [L(a, t.b) for a in A] + [And((L(a, t.b), Not(to_A))) for a in A], **kw)
    plain = dict(zip(A, probs[: len(A)]))
    missed = dict(zip(A, probs[len(A):]))
    h = WeightedGraph(g.vertices, [e for e in g.edges if t.zero not in (e.u, e.v)], g.directed)
    cut = dict(zip(A, probabilities(h, [L(a, t.b) for a in A], **kw)))
    out = {}
    for name, table in (("min-p-a-b", plain), ("min-p-a-b-off-A", missed), ("min-without-zero-edges", cut)):
        _, mins = argmin(table)
        out[name] = {a: rep.lhs >= rep.auxiliary["p_zero_A_a_b"][a] for a in mins}
    return out


# --------------------------------------------------------------------------
# monotone cluster properties


def mcp_function(family: str, v: str, t: TerminalSpec, k: int | None = None, directed=False) -> NumExpr:
    """f(v) for one of the supported monotone cluster properties, times 1{0~A}."""
    to_A = link(directed, t.zero, t.A)
    if family == "cluster-size":
        return NumExpr(v, [to_A])
    if family == "threshold":
        if k is None:
            raise ValueError("threshold family needs k")
        return NumExpr(None, [ClusterAtLeast(v, k), to_A])
    if family == "indicator-of-b":
        return NumExpr(None, [link(directed, v, t.b), to_A])
    raise ValueError(f"unknown monotone cluster property {family!r}; choose from {MCP_FAMILIES}")


def check_mcp(g: WeightedGraph, t: TerminalSpec, family: str = "cluster-size",
              k: int | None = None, **kw) -> CheckReport:
    """E(f(0) 1{0~A}) >= min_a E(f(a) 1{0~A})."""
    _undirected_only(g, "mcp")
    A = list(t.A)
    fs = [mcp_function(family, x, t, k) for x in [t.zero] + A]
    vals = expectations(g, fs, **kw)
    per_a = dict(zip(A, vals[1:]))
    low, mins = argmin(per_a)
    aux = {"family": family, "per_a": per_a}
    if k is not None:
        aux["k"] = k
    return CheckReport("mcp", vals[0], low, mins, _exact(g, kw.get("mode")), aux)


# --------------------------------------------------------------------------
# good quadruples


def separated(g: WeightedGraph, t: TerminalSpec) -> bool:
    """0 and b lie in different components of G minus A (both outside A)."""
    if t.zero in t.A or t.b in t.A:
        return False
    for comp in g.components(ignore=t.A):
        if t.zero in comp:
            return t.b not in comp
    return False


def check_good_quadruple(g: WeightedGraph, t: TerminalSpec, **kw) -> CheckReport:
    """P(0~b) >= min_a P(a~b) - sum_W P(C(0)=W) min_a P_{G-W}(a~b), W ranging over A-free clusters."""
    _undirected_only(g, "good-quadruple")
    if not separated(g, t):
        raise GraphError("good-quadruple check needs 0 and b in different components of G minus A")
    A = list(t.A)
    probs = probabilities(g, [Conn(t.zero, t.b)] + [Conn(a, t.b) for a in A], **kw)
    low, mins = argmin(dict(zip(A, probs[1:])))
    correction = 0
    terms = []
    for W, pw in sorted(cluster_distribution(g, t.zero, **kw).items(), key=lambda x: sorted(x[0])):
        if W & set(A) or pw == 0:
            continue
        h = g.remove_vertices(W)
        inner = min(probabilities(h, [Conn(a, t.b) for a in A], **kw))
        correction += pw * inner
        terms.append({"W": sorted(W), "p": pw, "min_p_a_b": inner})
    return CheckReport("good-quadruple", probs[0], low - correction, mins,
                       _exact(g, kw.get("mode")),
                       {"min_p_a_b": low, "correction": correction, "clusters": terms})


# --------------------------------------------------------------------------
# coefficient system


@dataclass
class CoefficientSolution:
    A: list[str]
    gram: list[list]
    target: list
    coefficients: dict | None
    solvable: bool
    exact: bool = True
    psd_certificate: dict = field(default_factory=dict)
    claims: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable({
            "A": self.A, "gram": self.gram, "target": self.target,
            "coefficients": self.coefficients, "solvable": self.solvable,
            "exact": self.exact, "psd_certificate": self.psd_certificate,
            "claims": self.claims,
        })


def solve_exact(M: Sequence[Sequence], y: Sequence) -> list | None:
    """Gauss-Jordan elimination over the rationals; None when M is singular."""
    n = len(M)
    rows = [[Fraction(x) for x in M[i]] + [Fraction(y[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        pv = rows[col][col]
        rows[col] = [x / pv for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * z for x, z in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def solve_coefficients(g: WeightedGraph, t: TerminalSpec, **kw) -> CoefficientSolution:
    """Solve sum_a c_a P(0~A, a~a') = P(0~a') for all a' in A."""
    _undirected_only(g, "coefficient system")
    A = list(t.A)
    if len(A) < 2:
        raise GraphError("coefficient system needs |A| >= 2")
    to_A = Conn(t.zero, A)
    pairs = [(i, j) for i in range(len(A)) for j in range(i, len(A))]
    events = [And((to_A, Conn(A[i], A[j]))) for i, j in pairs] + [Conn(t.zero, a) for a in A]
    probs = probabilities(g, events, **kw)
    gram = [[None] * len(A) for _ in A]
    for (i, j), p in zip(pairs, probs):
        gram[i][j] = gram[j][i] = p
    target = probs[len(pairs):]
    exact = _exact(g, kw.get("mode"))
    if exact:
        sol = solve_exact(gram, target)
    else:
        M = np.array(gram, dtype=float)
        if abs(np.linalg.det(M)) < 1e-12:
            sol = None
        else:
            sol = list(np.linalg.solve(M, np.array(target, dtype=float)))
    res = CoefficientSolution(A, gram, target, None if sol is None else dict(zip(A, sol)),
                              sol is not None, exact)
    res.psd_certificate = gram_psd_check(res)
    if sol is not None:
        res.claims = {"nonnegative": all(c >= 0 for c in sol), "sum": sum(sol),
                      "sum_at_least_one": sum(sol) >= 1}
    return res


def gram_psd_check(solution) -> dict:
    """Nonnegative-definiteness of a symmetric matrix.

    Exact mode runs a symmetric elimination with diagonal pivoting and zero
    tolerance; float mode compares the smallest eigenvalue with -1e-9.
    Accepts a CoefficientSolution or a bare square matrix.
    """
    M = solution.gram if isinstance(solution, CoefficientSolution) else solution
    exact = all(isinstance(x, (Fraction, int)) for row in M for x in row)
    if not exact:
        eig = np.linalg.eigvalsh(np.array(M, dtype=float))
        low = float(eig.min()) if eig.size else 0.0
        return {"psd": low >= PSD_FLOAT_FLOOR, "method": "eigenvalues", "min_eigenvalue": low}
    S = [[Fraction(x) for x in row] for row in M]
    pivots = []
    active = list(range(len(S)))
    while active:
        diag = {i: S[i][i] for i in active}
        if any(d < 0 for d in diag.values()):
            return {"psd": False, "method": "ldl-exact", "pivots": pivots, "reason": "negative diagonal"}
        k = max(active, key=lambda i: diag[i])
        if diag[k] == 0:
            if any(S[i][j] != 0 for i in active for j in active):
                return {"psd": False, "method": "ldl-exact", "pivots": pivots,
                        "reason": "zero pivot with nonzero off-diagonal"}
            pivots.extend([Fraction(0)] * len(active))
            break
        pivots.append(diag[k])
        active.remove(k)
        for i in active:
            for j in active:
                S[i][j] -= S[i][k] * S[k][j] / S[k][k]
    return {"psd": True, "method": "ldl-exact", "pivots": pivots,
            "rank": sum(1 for p in pivots if p != 0)}


# --------------------------------------------------------------------------
# gluing induction and concavity


def _post_side(g, v, t, a, **kw):
    """(P(v~b), P(v~A), P(a~b))."""
    return probabilities(g, [Conn(v, t.b), Conn(v, list(t.A)), Conn(a, t.b)], **kw)


def check_gluing_step(g: WeightedGraph, t: TerminalSpec, pair: tuple[str, str], **kw) -> CheckReport:
    """Premise on both ends of `pair` in G, conclusion on G with the pair glued.

    The report's sides are the conclusion's.  `auxiliary["naive"]` evaluates
    the tempting strengthening: for every a in A with
    P(v~b) >= P(v~A) P(a~b), does the glued graph satisfy the same with a?
    """
    _undirected_only(g, "gluing-step")
    v, w = pair
    A = list(t.A)
    base = probabilities(g, [Conn(x, t.b) for x in (v, w)] + [Conn(x, A) for x in (v, w)]
                         + [Conn(a, t.b) for a in A], **kw)
    xb = dict(zip((v, w), base[:2]))
    xA = dict(zip((v, w), base[2:4]))
    ab = dict(zip(A, base[4:]))
    low, mins = argmin(ab)
    h = glue(g, pair)
    th = t.rename(w, v)
    ren = lambda x: v if x == w else x
    glued = probabilities(h, [Conn(v, th.b), Conn(v, list(th.A))] + [Conn(ren(a), th.b) for a in A], **kw)
    hvb, hvA = glued[0], glued[1]
    hab = dict(zip(A, glued[2:]))
    per_min = []
    for a in mins:
        premise = all(xb[x] >= xA[x] * ab[a] for x in (v, w))
        per_min.append((a, premise, hvb, hvA * hab[a]))
    met = [r for r in per_min if r[1]]
    a, premise, lhs, rhs = min(met, key=lambda r: r[2] - r[3]) if met else per_min[0]
    naive = []
    for x in A:
        pre = xb[v] >= xA[v] * ab[x]
        naive.append({"a": x, "premise": pre, "lhs": hvb, "rhs": hvA * hab[x],
                      "margin": hvb - hvA * hab[x]})
    naive_margins = [r["margin"] for r in naive if r["premise"]]
    aux = {
        "pair": [v, w], "a": a, "premise_met": premise,
        "premise": {x: {"p_x_b": xb[x], "p_x_A": xA[x]} for x in (v, w)},
        "p_a_b": ab, "naive": naive,
        "naive_margin": min(naive_margins) if naive_margins else None,
        "naive_violated": any(mg < 0 for mg in naive_margins),
    }
    return CheckReport("gluing-step", lhs, rhs, mins, _exact(g, kw.get("mode")), aux,
                       label=None if premise else "premise unmet", premise_met=premise)


def concavity_probe(g: WeightedGraph, t: TerminalSpec, e: int, v: str | None = None, **kw) -> dict:
    """f(q) = P(v~b) - P(v~A) P(a~b) as a quadratic in the probability q of edge e.

    a minimises P(a~b) with edge e closed.  The quadratic coefficient is
    -c1[P(v~A)] * c1[P(a~b)], never positive for increasing events.
    """
    _undirected_only(g, "concavity probe")
    v = t.zero if v is None else v
    A = list(t.A)
    closed = g.with_probability(e, 0)
    low, mins = argmin(dict(zip(A, probabilities(closed, [Conn(a, t.b) for a in A], **kw))))
    a = mins[0]
    vb, vA, ab = edge_polynomials(g, e, [Conn(v, t.b), Conn(v, A), Conn(a, t.b)], **kw)
    f0 = vb.c0 - vA.c0 * ab.c0
    f1 = vb.c1 - (vA.c0 * ab.c1 + vA.c1 * ab.c0)
    f2 = -vA.c1 * ab.c1
    f = lambda q: f0 + f1 * q + f2 * q * q
    grid = [Fraction(i, 10) for i in range(11)]
    out = {
        "edge": e, "v": v, "a": a, "coefficients": [f0, f1, f2],
        "quadratic": f2, "concave": f2 <= 0, "f0": f(0), "f1": f(1),
        "vertex": None if f2 == 0 else -f1 / (2 * f2),
    }
    if f(0) >= 0 and f(1) >= 0:
        out["grid_nonnegative"] = all(f(q) >= 0 for q in grid)
    return out


# --------------------------------------------------------------------------
# influence bound


def influence_bound_check(g: WeightedGraph, t: TerminalSpec, **kw) -> CheckReport:
    """P(0~b) >= P(0~A) min_a P(a~b) - (sum_{e in E} p_e/(1-p_e))^(-1/2).

    E holds the edges whose gluing yields a graph satisfying the post-FKG
    inequality; edges that are already certain are left out.
    """
    _undirected_only(g, "influence bound")
    base = check_postfkg(g, t, **kw)
    members = []
    weight = Fraction(0)
    for i, e in enumerate(g.edges):
        if e.p >= 1:
            continue
        if check_postfkg(g.with_probability(i, 1), t, **kw).margin >= 0:
            members.append(i)
            weight += Fraction(e.p) / (1 - Fraction(e.p))
    aux = {"E": members, "weight": weight, "post_margin": base.margin}
    if weight == 0:
        aux["vacuous"] = True
        return CheckReport("influence-bound", float(base.lhs), -math.inf, base.minimizers,
                           False, aux, tolerance=INFLUENCE_TOL)
    subtrahend = 1 / math.sqrt(weight)
    aux["subtrahend"] = subtrahend
    return CheckReport("influence-bound", float(base.lhs), float(base.rhs) - subtrahend,
                       base.minimizers, False, aux, tolerance=INFLUENCE_TOL)


# --------------------------------------------------------------------------
# the delta-epsilon frontier


def epsdel_frontier(items) -> list[dict]:
    """(delta, eps) per instance with its running upper envelope, sorted by delta.

    delta = 1 - min(P(0~A), min_a P(a~b)) and eps = 1 - P(0~b).  Items are
    post-FKG reports or mappings with keys p_zero_A, min_p_a_b, p_zero_b.
    """
    pts = []
    for it in items:
        aux = it.auxiliary if isinstance(it, CheckReport) else it
        delta = 1 - min(aux["p_zero_A"], aux["min_p_a_b"])
        eps = 1 - aux["p_zero_b"]
        pts.append((delta, eps))
    pts.sort(key=lambda x: (x[0], x[1]))
    rows, top = [], None
    for delta, eps in pts:
        top = eps if top is None else max(top, eps)
        rows.append({"delta": delta, "eps": eps, "envelope": top})
    return rows


def run_check(conjecture: str, g: WeightedGraph, t: TerminalSpec, *, family="cluster-size",
              k=None, pair=None, **kw) -> CheckReport:
    """Dispatch by conjecture id."""
    if conjecture == "postfkg":
        return check_postfkg(g, t, **kw)
    if conjecture == "prefkg":
        return check_prefkg(g, t, **kw)
    if conjecture == "prefkga":
        return check_prefkga(g, t, **kw)
    if conjecture == "mcp":
        return check_mcp(g, t, family, k, **kw)
    if conjecture == "good-quadruple":
        return check_good_quadruple(g, t, **kw)
    if conjecture == "gluing-step":
        if pair is None:
            raise ValueError("gluing-step needs a vertex pair")
        return check_gluing_step(g, t, pair, **kw)
    if conjecture == "influence-bound":
        return influence_bound_check(g, t, **kw)
    raise ValueError(f"unknown conjecture id {conjecture!r}")
