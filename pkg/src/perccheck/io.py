"""JSON graph files.

    {"directed": false,
     "vertices": ["0", "a", "b"],
     "edges": [{"u": "0", "v": "a", "p": "1/2"}, ...],
     "terminals": {"zero": "0", "b": "b", "A": ["a"]}}

Probabilities are "num/den" strings (exact) or decimal literals (float).
Unknown keys anywhere are rejected.  `terminals` may be omitted.
"""
from __future__ import annotations

import json
from pathlib import Path

from .graph import Edge, GraphError, TerminalSpec, WeightedGraph, canonicalize, format_prob, parse_prob, validate

TOP_KEYS = {"directed", "vertices", "edges", "terminals"}
EDGE_KEYS = {"u", "v", "p"}
TERMINAL_KEYS = {"zero", "b", "A"}


def _keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise GraphError(f"{where}: expected a JSON object")
    extra = set(obj) - allowed
    if extra:
        raise GraphError(f"{where}: unknown key(s) {sorted(extra)}")
    missing = required - set(obj)
    if missing:
        raise GraphError(f"{where}: missing key(s) {sorted(missing)}")


def graph_from_obj(obj) -> tuple[WeightedGraph, TerminalSpec | None]:
    _keys(obj, TOP_KEYS, {"vertices", "edges"}, "graph")
    directed = obj.get("directed", False)
    if not isinstance(directed, bool):
        raise GraphError("graph: 'directed' must be true or false")
    verts = obj["vertices"]
    if not isinstance(verts, list) or not all(isinstance(v, str) for v in verts):
        raise GraphError("graph: 'vertices' must be a list of strings")
    if not isinstance(obj["edges"], list):
        raise GraphError("graph: 'edges' must be a list")
    edges = []
    for i, e in enumerate(obj["edges"]):
        _keys(e, EDGE_KEYS, EDGE_KEYS, f"edge {i}")
        if not isinstance(e["p"], str):
            raise GraphError(f"edge {i}: probability must be a string such as \"1/2\" or \"0.5\"")
        edges.append(Edge(str(e["u"]), str(e["v"]), parse_prob(e["p"])))
    g = WeightedGraph(verts, edges, directed)
    t = None
    if obj.get("terminals") is not None:
        tt = obj["terminals"]
        _keys(tt, TERMINAL_KEYS, TERMINAL_KEYS, "terminals")
        if not isinstance(tt["A"], list):
            raise GraphError("terminals: 'A' must be a list")
        t = TerminalSpec(str(tt["zero"]), str(tt["b"]), tuple(str(a) for a in tt["A"]))
    problems = validate(g, t)
    if problems:
        raise GraphError("; ".join(problems))
    return g, t


def parse_graph(text) -> tuple[WeightedGraph, TerminalSpec | None]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed JSON: {exc}") from None
    return graph_from_obj(obj)


def graph_to_obj(g: WeightedGraph, t: TerminalSpec | None = None) -> dict:
    obj = {
        "directed": g.directed,
        "vertices": list(g.vertices),
        "edges": [{"u": e.u, "v": e.v, "p": format_prob(e.p)} for e in g.edges],
    }
    if t is not None:
        obj["terminals"] = {"zero": t.zero, "b": t.b, "A": list(t.A)}
    return obj


def serialize_graph(g: WeightedGraph, t: TerminalSpec | None = None, *, canonical=False,
                    indent=None) -> str:
    """JSON text; edge order is preserved unless `canonical` is set."""
    if canonical:
        g = canonicalize(g)
        if t is not None:
            t = TerminalSpec(t.zero, t.b, tuple(sorted(t.A)))
    return json.dumps(graph_to_obj(g, t), indent=indent)


def load_graph(path) -> tuple[WeightedGraph, TerminalSpec | None]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc.strerror}") from None
    return parse_graph(data)
