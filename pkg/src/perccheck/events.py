"""Configuration events and numeric observables.

Events are small immutable trees.  Atoms name vertices by id and edges by
index; they are bound to a graph only when evaluated.  ``&``, ``|`` and ``~``
build conjunctions, disjunctions and negations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Union


class EventError(ValueError):
    """Ill-formed event or event text."""


def _vset(x) -> frozenset[str]:
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


class Event:
    def __and__(self, other: "Event") -> "Event":
        return And((self, other))

    def __or__(self, other: "Event") -> "Event":
        return Or((self, other))

    def __invert__(self) -> "Event":
        return Not(self)


@dataclass(frozen=True)
class Conn(Event):
    """Some vertex of S is joined to some vertex of T by open undirected edges."""
    S: frozenset[str]
    T: frozenset[str]

    def __init__(self, S, T):
        object.__setattr__(self, "S", _vset(S))
        object.__setattr__(self, "T", _vset(T))


@dataclass(frozen=True)
class Reach(Event):
    """Some vertex of T is reachable from S along open edges, respecting direction."""
    S: frozenset[str]
    T: frozenset[str]

    def __init__(self, S, T):
        object.__setattr__(self, "S", _vset(S))
        object.__setattr__(self, "T", _vset(T))


@dataclass(frozen=True)
class ClusterAtLeast(Event):
    v: str
    k: int


@dataclass(frozen=True)
class EdgeOpen(Event):
    e: int


@dataclass(frozen=True)
class Pivotal(Event):
    """An extra open edge on `pair` would change `inner`.

    Edges already joining the pair are treated as closed, so the event never
    depends on their status.
    """
    pair: tuple[str, str]
    inner: Event

    def __init__(self, pair, inner):
        object.__setattr__(self, "pair", tuple(pair))
        object.__setattr__(self, "inner", inner)


@dataclass(frozen=True)
class Not(Event):
    x: Event


@dataclass(frozen=True)
class And(Event):
    args: tuple[Event, ...]

    def __init__(self, args: Iterable[Event] = ()):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or(Event):
    args: tuple[Event, ...]

    def __init__(self, args: Iterable[Event] = ()):
        object.__setattr__(self, "args", tuple(args))


TRUE = And(())
FALSE = Or(())


@dataclass(frozen=True)
class NumExpr:
    """Product of an optional cluster-size factor |C(v)| and event indicators."""
    cluster_of: str | None = None
    events: tuple[Event, ...] = ()

    def __init__(self, cluster_of: str | None = None, events: Iterable[Event] = ()):
        object.__setattr__(self, "cluster_of", cluster_of)
        object.__setattr__(self, "events", tuple(events))


def cluster_size(v: str) -> NumExpr:
    return NumExpr(v)


def indicator(*events: Event) -> NumExpr:
    return NumExpr(None, events)


def link(directed: bool, S, T) -> Event:
    """Connection atom appropriate for the graph's orientation."""
    return Reach(S, T) if directed else Conn(S, T)


def atoms(ev: Event):
    """Yield every atom of an event tree (Pivotal counts as an atom and is descended)."""
    stack = [ev]
    while stack:
        x = stack.pop()
        if isinstance(x, (And, Or)):
            stack.extend(x.args)
        elif isinstance(x, Not):
            stack.append(x.x)
        elif isinstance(x, Pivotal):
            yield x
            stack.append(x.inner)
        else:
            yield x


# --------------------------------------------------------------------------
# text form: whitespace-separated prefix terms
#
#   conn S T | reach S T | cluster>= v k | edge i | pivotal u v EV
#   not EV | and EV EV | or EV EV | true | false
#
# S and T are comma-separated vertex ids.

EVENT_SYNTAX = """\
Events are prefix terms separated by whitespace:
  conn S T        some vertex of S connected to some vertex of T (undirected)
  reach S T       some vertex of T reachable from S (directed)
  cluster>= v k   |C(v)| >= k
  edge i          edge number i is open
  pivotal u v E   adding an open edge u-v changes E
  not E | and E1 E2 | or E1 E2 | true | false
S and T are comma-separated vertex ids, e.g.  and conn 0 a1,a2 not edge 3"""


def parse_event(text: str) -> Event:
    tokens = text.split()
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise EventError(f"unexpected end of event text {text!r}")
        pos += 1
        return tokens[pos - 1]

    def integer(tok):
        try:
            return int(tok)
        except ValueError:
            raise EventError(f"expected an integer, got {tok!r}") from None

    def term() -> Event:
        head = take()
        key = head.lower()
        if key == "conn":
            return Conn(take().split(","), take().split(","))
        if key == "reach":
            return Reach(take().split(","), take().split(","))
        if key in ("cluster>=", "cluster≥", "cluster"):
            return ClusterAtLeast(take(), integer(take()))
        if key == "edge":
            return EdgeOpen(integer(take()))
        if key == "pivotal":
            u, v = take(), take()
            return Pivotal((u, v), term())
        if key == "not":
            return Not(term())
        if key == "and":
            return And((term(), term()))
        if key == "or":
            return Or((term(), term()))
        if key == "true":
            return TRUE
        if key == "false":
            return FALSE
        raise EventError(f"unknown event term {head!r}")

    ev = term()
    if pos != len(tokens):
        raise EventError(f"trailing tokens in event text: {' '.join(tokens[pos:])!r}")
    return ev


def event_to_json(ev: Event) -> dict:
    if isinstance(ev, (Conn, Reach)):
        return {"op": type(ev).__name__.lower(), "S": sorted(ev.S), "T": sorted(ev.T)}
    if isinstance(ev, ClusterAtLeast):
        return {"op": "cluster_at_least", "v": ev.v, "k": ev.k}
    if isinstance(ev, EdgeOpen):
        return {"op": "edge", "e": ev.e}
    if isinstance(ev, Pivotal):
        return {"op": "pivotal", "pair": list(ev.pair), "inner": event_to_json(ev.inner)}
    if isinstance(ev, Not):
        return {"op": "not", "arg": event_to_json(ev.x)}
    if isinstance(ev, (And, Or)):
        return {"op": type(ev).__name__.lower(), "args": [event_to_json(a) for a in ev.args]}
    raise EventError(f"not an event: {ev!r}")


def event_from_json(obj) -> Event:
    if not isinstance(obj, dict) or "op" not in obj:
        raise EventError(f"event object needs an 'op' key: {obj!r}")
    op = obj["op"]
    try:
        if op in ("conn", "reach"):
            cls = Conn if op == "conn" else Reach
            return cls(obj["S"], obj["T"])
        if op == "cluster_at_least":
            return ClusterAtLeast(str(obj["v"]), int(obj["k"]))
        if op == "edge":
            return EdgeOpen(int(obj["e"]))
        if op == "pivotal":
            return Pivotal(tuple(obj["pair"]), event_from_json(obj["inner"]))
        if op == "not":
            return Not(event_from_json(obj["arg"]))
        if op in ("and", "or"):
            cls = And if op == "and" else Or
            return cls(event_from_json(a) for a in obj["args"])
    except KeyError as exc:
        raise EventError(f"event {op!r} missing field {exc}") from None
    raise EventError(f"unknown event op {op!r}")


def load_event(source: Union[str, bytes]) -> Event:
    return event_from_json(json.loads(source))
