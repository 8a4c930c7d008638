import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import H, graphs, path, random_multigraph, single_edge, triangle
from perccheck.engine import event_probability, expectation
from perccheck.events import Conn, NumExpr
from perccheck.graph import (
    Edge, GraphError, TerminalSpec, WeightedGraph, as_prob, canonicalize, degree3_reduce,
    delete_edge, directed_counterexample, format_prob, glue, half_edge_gadget, half_edge_reduce,
    parse_prob, pendant_inflate, validate,
)
from perccheck.reliability import connection_probability_dc


def test_parse_and_format_probabilities():
    assert parse_prob("3/6") == Fraction(1, 2)
    assert parse_prob("1") == Fraction(1)
    assert isinstance(parse_prob("0.25"), float)
    assert format_prob(Fraction(2, 4)) == "1/2"
    assert format_prob(0.5) == "0.5"
    for bad in ("1/0", "abc", "nan", "1/x"):
        with pytest.raises(GraphError):
            parse_prob(bad)
    assert as_prob(1) == Fraction(1)


def test_validate_reports_every_problem():
    g = WeightedGraph(["0", "b"], [("0", "b", Fraction(3, 2)), ("0", "z", H)])
    problems = validate(g, TerminalSpec("0", "q", ()))
    assert "edge 0: probability out of range" in problems
    assert any("unknown endpoint 'z'" in p for p in problems)
    assert "A empty" in problems
    assert any("unknown vertex 'q'" in p for p in problems)
    assert validate(triangle(), TerminalSpec("a", "b", ("c",))) == []


def test_validate_allows_zero_and_b_in_A():
    g = path("0", "a", "b")
    assert validate(g, TerminalSpec("0", "b", ("0", "b"))) == []


def test_glue_path_merges_into_two_vertices():
    g = glue(path("0", "a", "b"), ("0", "a"))
    assert set(g.vertices) == {"0", "b"}
    assert g.m == 2  # the former 0-a edge is an inert self-loop
    assert event_probability(g, Conn("0", "b")) == H


def test_glue_single_edge_gives_certain_connection():
    g = glue(single_edge(), ("0", "b"))
    assert g.vertices == ("0",)
    assert g.m == 1 and g.edges[0].u == g.edges[0].v
    assert event_probability(g, Conn("0", "0")) == 1


def test_glue_triangle():
    g = glue(triangle(), ("a", "b"))
    assert g.n == 2 and g.m == 3
    assert event_probability(g, Conn("a", "c")) == Fraction(3, 4)


def test_glue_same_vertex_is_identity_and_unknown_vertex_errors():
    g = triangle()
    assert glue(g, ("a", "a")) == g
    with pytest.raises(GraphError):
        glue(g, ("a", "zz"))


def test_glue_equals_setting_probability_one(rng):
    for _ in range(60):
        g = random_multigraph(rng, 5, 7, loops=False)
        if not g.m:
            continue
        i = rng.randrange(g.m)
        e = g.edges[i]
        glued = glue(g, (e.u, e.v))
        ren = lambda x: e.u if x == e.v else x
        for x in g.vertices:
            for y in g.vertices:
                assert event_probability(glued, Conn(ren(x), ren(y))) == \
                    event_probability(g.with_probability(i, 1), Conn(x, y))


def test_delete_edge():
    g = delete_edge(triangle(), 0)
    assert [(e.u, e.v) for e in g.edges] == [("b", "c"), ("a", "c")]
    g = delete_edge(single_edge(), 0)
    assert g.m == 0 and event_probability(g, Conn("0", "b")) == 0
    par = WeightedGraph(["0", "b"], [("0", "b", H), ("0", "b", H)])
    assert delete_edge(par, 1).m == 1
    with pytest.raises(GraphError):
        delete_edge(par, 5)


def test_pendant_inflate_examples():
    g = single_edge()
    assert pendant_inflate(g, "b", 0) == g
    h = pendant_inflate(g, "b", 3)
    assert h.n == 5 and all(e.p == 1 for e in h.edges[1:])
    assert expectation(h, NumExpr("0")) == 3
    iso = WeightedGraph(["0", "b"], [])
    assert expectation(pendant_inflate(iso, "b", 1), NumExpr("b")) == 2
    with pytest.raises(GraphError):
        pendant_inflate(directed_counterexample()[0], "b", 1)


def _gadget_value(p, eps):
    g, (s, t) = half_edge_gadget(p, eps)
    assert all(e.p == H for e in g.edges)
    return g, event_probability(g, Conn(s, t))


def test_half_edge_gadget_examples():
    g, val = _gadget_value(H, Fraction(1, 8))
    assert g.m == 1 and val == H
    g, val = _gadget_value(Fraction(3, 4), 0)
    assert g.m == 2 and val == Fraction(3, 4)
    eps = Fraction(1, 64)
    g, val = _gadget_value(Fraction(1, 3), eps)
    assert g.m <= 7 and abs(val - Fraction(1, 3)) <= eps
    for bad in (0, 1):
        with pytest.raises(GraphError):
            half_edge_gadget(bad, eps)
    with pytest.raises(GraphError):
        half_edge_gadget(Fraction(1, 3), 0)


def test_half_edge_gadget_matches_series_parallel_dc(rng):
    for _ in range(30):
        p = Fraction(rng.randint(1, 999), 1000)
        g, (s, t) = half_edge_gadget(p, Fraction(1, 256))
        assert connection_probability_dc(g, s, t) == event_probability(g, Conn(s, t))


def test_half_edge_reduce_keeps_probabilities_close():
    g = WeightedGraph(["0", "a", "b"], [("0", "a", Fraction(1, 3)), ("a", "b", Fraction(3, 4)),
                                         ("0", "b", Fraction(1))])
    eps = Fraction(1, 1 << 10)
    h = half_edge_reduce(g, eps)
    assert all(e.p in (H, 1) for e in h.edges)
    assert abs(event_probability(h, Conn("0", "a")) - event_probability(g, Conn("0", "a"))) < 4 * eps


def test_degree3_claw_and_star():
    claw = WeightedGraph(["c", "x", "y", "z"], [("c", "x", H), ("c", "y", H), ("c", "z", H)])
    h = degree3_reduce(claw)
    assert all(h.degree(v) == 3 for v in h.vertices)
    assert h.degree("c") == 3 and all(e.p == 1 for e in h.edges[3:])
    assert event_probability(h, Conn("x", "y")) == event_probability(claw, Conn("x", "y"))
    star = WeightedGraph(list("cwxyz"), [("c", v, H) for v in "wxyz"])
    h = degree3_reduce(star)
    spine = [e for e in h.edges if {e.u, e.v} == {"c", "c#0"}]
    assert len(spine) == 1 and spine[0].p == 1
    for u in "wxyz":
        for v in "wxyz":
            assert event_probability(h, Conn(u, v)) == event_probability(star, Conn(u, v))


def test_degree3_cubic_graph_is_fixed_point():
    k4 = WeightedGraph(list("abcd"), [(u, v, H) for u, v in
                                      [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]])
    assert degree3_reduce(k4) == k4


@settings(max_examples=40, deadline=None)
@given(graphs(n_max=5, m_max=6))
def test_degree3_preserves_connections_and_degrees(g):
    h = degree3_reduce(g)
    assert validate(h) == []
    assert all(h.degree(v) == 3 for v in h.vertices)
    for u in g.vertices:
        for v in g.vertices:
            assert event_probability(h, Conn(u, v)) == event_probability(g, Conn(u, v))


@settings(max_examples=40, deadline=None)
@given(graphs(n_max=5, m_max=6))
def test_transformations_preserve_validity(g):
    assert validate(g) == []
    for h in (pendant_inflate(g, g.vertices[0], 2), canonicalize(g), half_edge_reduce(g, Fraction(1, 16))):
        assert validate(h) == []
    if g.m:
        e = g.edges[0]
        assert validate(glue(g, (e.u, e.v))) == []
        assert validate(delete_edge(g, 0)) == []


def test_canonicalize_sorts():
    g = WeightedGraph(["b", "a"], [("b", "a", H), ("a", "a", Fraction(1, 3))])
    c = canonicalize(g)
    assert c.vertices == ("a", "b")
    assert [(e.u, e.v) for e in c.edges] == [("a", "a"), ("a", "b")]


def test_gadget_size_bound_formula():
    for eps in (Fraction(1, 16), Fraction(1, 256)):
        bound = math.ceil(math.log2(1 / eps)) + 1
        for p in (Fraction(1, 7), Fraction(5, 9), Fraction(999, 1000)):
            g, (s, t) = half_edge_gadget(p, eps)
            assert g.m <= bound
