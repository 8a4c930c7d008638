import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import H, graphs, path, random_multigraph, triangle
from perccheck.engine import event_probability
from perccheck.events import Conn
from perccheck.graph import GraphError, WeightedGraph, directed_counterexample
from perccheck.reliability import MemoBudgetExceeded, connection_probability_dc


def test_triangle_and_series():
    assert connection_probability_dc(triangle(), "a", "b") == Fraction(5, 8)
    for k in range(1, 8):
        g = path(*[str(i) for i in range(k + 1)])
        assert connection_probability_dc(g, "0", str(k)) == Fraction(1, 2 ** k)


def test_sets_and_overlap():
    g = triangle()
    assert connection_probability_dc(g, ["a", "b"], "b") == 1
    assert connection_probability_dc(g, ["a", "b"], "c") == event_probability(g, Conn(["a", "b"], "c"))


def test_rejects_directed_and_unknown():
    g, _ = directed_counterexample()
    with pytest.raises(GraphError):
        connection_probability_dc(g, "0", "b")
    with pytest.raises(GraphError):
        connection_probability_dc(triangle(), "a", "nope")


def test_memo_budget():
    rng = random.Random(1)
    vs = [str(i) for i in range(8)]
    edges = [(u, v, H) for i, u in enumerate(vs) for v in vs[i + 1:] if rng.random() < 0.8]
    with pytest.raises(MemoBudgetExceeded):
        connection_probability_dc(WeightedGraph(vs, edges), "0", "7", memo_budget=3)


def test_float_graph_gives_float():
    g = WeightedGraph(["a", "b"], [("a", "b", 0.25), ("a", "b", 0.5)])
    val = connection_probability_dc(g, "a", "b")
    assert isinstance(val, float) and val == pytest.approx(1 - 0.75 * 0.5)


def test_random_graphs_match_enumeration():
    rng = random.Random(99)
    for _ in range(200):
        g = random_multigraph(rng, 7, 12, den=8)
        s, t = rng.sample(list(g.vertices), 2)
        assert connection_probability_dc(g, s, t) == event_probability(g, Conn(s, t))


@settings(max_examples=80, deadline=None)
@given(graphs(n_max=6, m_max=10), st.data())
def test_property_matches_enumeration(g, data):
    S = data.draw(st.sets(st.sampled_from(g.vertices), min_size=1, max_size=2))
    T = data.draw(st.sets(st.sampled_from(g.vertices), min_size=1, max_size=2))
    assert connection_probability_dc(g, S, T) == event_probability(g, Conn(S, T))
