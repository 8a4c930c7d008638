"""Command-line entry point.

Exit status: 0 completed without violation, 1 some checked inequality has a
negative margin, 2 usage or input error, 3 resource limit reached.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .checkers import CONJECTURES, MCP_FAMILIES, _jsonable, epsdel_frontier, run_check, solve_coefficients
from .engine import EdgeLimitExceeded, EngineError, ZeroConditioning, probabilities
from .events import EVENT_SYNTAX, EventError, load_event, parse_event
from .graph import (
    GraphError, TerminalSpec, degree3_reduce, format_prob, glue, half_edge_gadget,
    half_edge_reduce, parse_prob, pendant_inflate,
)
from .io import graph_to_obj, load_graph, serialize_graph
from .reliability import MemoBudgetExceeded

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _graph(args, need_terminals=True):
    if not args.graph:
        raise UsageError("--graph is required")
    g, t = load_graph(args.graph)
    if need_terminals and t is None:
        raise UsageError(f"{args.graph} has no 'terminals' block")
    return g, t


def _engine_kw(args) -> dict:
    kw = {"mode": args.mode}
    if args.max_edges is not None:
        kw["max_edges"] = args.max_edges
    return kw


def _event(args):
    if args.event and args.event_file:
        raise UsageError("give either --event or --event-file, not both")
    if args.event:
        return parse_event(args.event)
    if args.event_file:
        with open(args.event_file) as fh:
            return load_event(fh.read())
    raise UsageError("--event or --event-file is required")


def _pair(text):
    parts = text.split(",") if text else []
    if len(parts) != 2:
        raise UsageError("--pair expects two comma-separated vertex ids, e.g. --pair a1,a2")
    return tuple(parts)


# --------------------------------------------------------------------------
# subcommands


def cmd_prob(args) -> int:
    g, _ = _graph(args, need_terminals=False)
    ev = _event(args)
    (p,) = probabilities(g, [ev], **_engine_kw(args))
    out = {"probability": _jsonable(p)}
    if args.event:
        out["event"] = args.event
    if isinstance(p, float):
        out["mode"] = "float"
    _emit(out, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.conjecture:
        raise UsageError("--conjecture is required")
    g, t = _graph(args)
    pair = _pair(args.pair) if args.conjecture == "gluing-step" else None
    rep = run_check(args.conjecture, g, t, family=args.family, k=args.k, pair=pair, **_engine_kw(args))
    _emit(rep.to_dict(), args.out)
    return EXIT_VIOLATION if rep.violated else EXIT_OK


def cmd_lemmas(args) -> int:
    from .lemmas import lemma_suite

    g, t = _graph(args)
    res = lemma_suite(g, t, args.seed, draws=args.draws, **_engine_kw(args))
    _emit({
        "draws": res.draws, "reports": [r.to_dict() for r in res.reports],
        "skipped_zero_probability": res.skipped_zero,
        "skipped_structural": res.skipped_structural,
        "violations": len(res.violations),
    }, args.out)
    return EXIT_VIOLATION if res.violations else EXIT_OK


def cmd_coeffs(args) -> int:
    g, t = _graph(args)
    sol = solve_coefficients(g, t, **_engine_kw(args))
    _emit(sol.to_dict(), args.out)
    bad = not sol.psd_certificate.get("psd", True)
    if sol.solvable and len(sol.A) <= 3:
        bad = bad or not (sol.claims["nonnegative"] and sol.claims["sum_at_least_one"])
    return EXIT_VIOLATION if bad else EXIT_OK


def _m_range(text):
    lo, sep, hi = text.partition("-")
    try:
        return (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise UsageError(f"--m expects an edge count or a range like 4-9, got {text!r}") from None


def cmd_search(args) -> int:
    from .search import CampaignParams, campaign, parse_law

    if not args.conjecture:
        raise UsageError("--conjecture is required")
    try:
        law, k = parse_law(args.law)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = CampaignParams(
        conjecture=args.conjecture, n=args.n, m=_m_range(args.m), directed=args.directed,
        law=law, k=k, a_size=args.a_size, budget=args.budget, seed=args.seed, start=args.start,
        iters=args.iters, mode=args.mode, family=args.family, threshold=args.k,
        workers=args.threads, max_edges=args.max_edges or 16, pair_moves=not args.no_pair_moves,
    )
    summary = campaign(params, args.out)
    if args.out:
        summary["records"] = args.out
    print(json.dumps(_jsonable(summary), indent=2))
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


def cmd_mc(args) -> int:
    from .montecarlo import estimate_check, estimate_event

    g, t = _graph(args, need_terminals=bool(args.conjecture))
    if args.conjecture:
        rep = estimate_check(g, t, args.conjecture, args.samples, args.seed, workers=args.threads)
        _emit(rep.to_dict(), args.out)
        return EXIT_VIOLATION if rep.violated else EXIT_OK
    est = estimate_event(g, _event(args), args.samples, args.seed, workers=args.threads)
    _emit(est.to_dict(), args.out)
    return EXIT_OK


def cmd_reduce(args) -> int:
    kind = args.kind
    if kind == "gadget":
        if args.p is None:
            raise UsageError("reduce gadget needs --p")
        g, ends = half_edge_gadget(parse_prob(args.p), parse_prob(args.eps))
        obj = graph_to_obj(g)
        obj["terminals"] = {"zero": ends[0], "b": ends[1], "A": [ends[1]]}
        _emit(obj, args.out)
        return EXIT_OK
    g, t = _graph(args, need_terminals=False)
    if kind == "half-edges":
        h = half_edge_reduce(g, parse_prob(args.eps))
    elif kind == "degree3":
        h = degree3_reduce(g)
    elif kind == "pendant":
        if t is None and args.vertex is None:
            raise UsageError("reduce pendant needs --vertex or a terminals block")
        h = pendant_inflate(g, args.vertex or t.b, args.k or 0)
    elif kind == "glue":
        h = glue(g, _pair(args.pair))
        if t is not None:
            t = t.rename(*reversed(_pair(args.pair)))
    else:
        raise UsageError(f"unknown reduction {kind!r}")
    text = serialize_graph(h, t, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_frontier(args) -> int:
    from .search import frontier_points, load_records

    if not args.records:
        raise UsageError("frontier needs a campaign JSONL file")
    rows = epsdel_frontier(frontier_points(load_records(args.records)))
    lines = ["delta\teps\tenvelope"] + [
        "\t".join(format_prob(r[k]) if isinstance(r[k], Fraction) else repr(r[k])
                  for k in ("delta", "eps", "envelope")) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph JSON file")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--mode", choices=["exact", "float"], default=None,
                        help="arithmetic; default exact unless the file has decimal probabilities")
    common.add_argument("--max-edges", type=int, default=None,
                        help="exact-enumeration edge limit (overrides PERC_MAX_EDGES)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap")

    p = argparse.ArgumentParser(prog="perccheck", description="Exact percolation inequality checks.",
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prob", parents=[common], help="probability of an event",
                       epilog=EVENT_SYNTAX, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--event", help="event in the prefix mini-language")
    s.add_argument("--event-file", help="event as a JSON tree")
    s.set_defaults(fn=cmd_prob)

    s = sub.add_parser("check", parents=[common], help="evaluate one inequality")
    s.add_argument("--conjecture", choices=[c for c in CONJECTURES if c != "epsdel-frontier"])
    s.add_argument("--family", choices=MCP_FAMILIES, default="cluster-size", help="mcp function family")
    s.add_argument("--k", type=int, help="mcp threshold")
    s.add_argument("--pair", help="gluing-step vertex pair, e.g. v,w")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("lemmas", parents=[common], help="random instances of the auxiliary lemmas")
    s.add_argument("--draws", type=int, default=1, help="instances per lemma")
    s.set_defaults(fn=cmd_lemmas)

    s = sub.add_parser("coeffs", parents=[common], help="solve the coefficient system")
    s.set_defaults(fn=cmd_coeffs)

    s = sub.add_parser("search", parents=[common], help="random-instance campaign with coordinate ascent")
    s.add_argument("--conjecture", choices=["postfkg", "prefkg", "prefkga", "mcp", "good-quadruple",
                                            "gluing-step", "influence-bound"])
    s.add_argument("--n", type=int, default=5, help="vertices per instance")
    s.add_argument("--m", default="4-8", help="edge count or range lo-hi")
    s.add_argument("--directed", action="store_true")
    s.add_argument("--law", default="dyadic-3", help="half, dyadic-K or uniform-grid")
    s.add_argument("--a-size", type=int, default=None, help="fix |A|")
    s.add_argument("--budget", type=int, default=100, help="number of instances")
    s.add_argument("--start", type=int, default=0, help="first instance index (resume/shard)")
    s.add_argument("--iters", type=int, default=10, help="ascent passes per instance")
    s.add_argument("--no-pair-moves", action="store_true", help="single-edge ascent only")
    s.add_argument("--family", choices=MCP_FAMILIES, default="cluster-size")
    s.add_argument("--k", type=int, help="mcp threshold")
    s.set_defaults(fn=cmd_search)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate",
                       epilog=EVENT_SYNTAX, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--event")
    s.add_argument("--event-file")
    s.add_argument("--conjecture", choices=["postfkg", "prefkg", "prefkga"])
    s.add_argument("--samples", type=int, default=100_000)
    s.set_defaults(fn=cmd_mc)

    s = sub.add_parser("reduce", parents=[common], help="graph reductions")
    s.add_argument("kind", choices=["half-edges", "degree3", "pendant", "glue", "gadget"])
    s.add_argument("--eps", default="1/1024", help="gadget accuracy")
    s.add_argument("--p", help="target probability for 'gadget'")
    s.add_argument("--k", type=int, help="number of pendant leaves")
    s.add_argument("--vertex", help="pendant attachment vertex (default b)")
    s.add_argument("--pair", help="vertices to glue, e.g. v,w")
    s.set_defaults(fn=cmd_reduce)

    s = sub.add_parser("frontier", parents=[common], help="delta/eps table from campaign records")
    s.add_argument("records", nargs="?", help="campaign JSONL file")
    s.set_defaults(fn=cmd_frontier)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "samples", 1) < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (EdgeLimitExceeded, MemoBudgetExceeded) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (UsageError, GraphError, EventError, ZeroConditioning, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
