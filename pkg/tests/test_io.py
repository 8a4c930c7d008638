import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import instances
from perccheck.graph import GraphError, TerminalSpec, canonicalize, directed_counterexample
from perccheck.io import graph_to_obj, load_graph, parse_graph, serialize_graph


@settings(max_examples=80, deadline=None)
@given(instances(n_max=5, m_max=7))
def test_round_trip_preserves_edge_order(inst):
    g, t = inst
    g2, t2 = parse_graph(serialize_graph(g, t))
    assert g2 == g and t2 == t


@settings(max_examples=50, deadline=None)
@given(instances(n_max=5, m_max=7))
def test_canonical_form_is_a_fixed_point(inst):
    g, t = inst
    text = serialize_graph(g, t, canonical=True)
    g2, t2 = parse_graph(text)
    assert g2 == canonicalize(g)
    assert serialize_graph(g2, t2, canonical=True) == text


def test_float_probabilities_survive():
    g, t = parse_graph('{"vertices": ["0", "b"], "edges": [{"u": "0", "v": "b", "p": "0.25"}]}')
    assert t is None and g.edges[0].p == 0.25 and not g.exact
    assert parse_graph(serialize_graph(g))[0] == g


def test_packaged_counterexample_matches_builder():
    from importlib.resources import files
    data = files("perccheck").joinpath("data/directed_counterexample.json").read_bytes()
    assert parse_graph(data) == directed_counterexample()


@pytest.mark.parametrize("text, msg", [
    ("{", "malformed JSON"),
    ('{"vertices": [], "edges": [], "extra": 1}', "unknown key"),
    ('{"vertices": ["0"]}', "missing key"),
    ('{"vertices": ["0", "b"], "edges": [{"u": "0", "v": "b", "p": 0.5}]}', "must be a string"),
    ('{"vertices": ["0", "b"], "edges": [{"u": "0", "v": "b", "p": "3/2"}]}', "out of range"),
    ('{"vertices": ["0", "b"], "edges": [{"u": "0", "v": "q", "p": "1/2"}]}', "unknown endpoint"),
    ('{"vertices": ["0", "b"], "edges": [], "terminals": {"zero": "0", "b": "b", "A": []}}', "A empty"),
    ('{"vertices": ["0", "b"], "edges": [], "directed": "yes"}', "true or false"),
])
def test_malformed_inputs(text, msg):
    with pytest.raises(GraphError, match=msg):
        parse_graph(text)


def test_load_graph(tmp_path):
    g, t = directed_counterexample()
    f = tmp_path / "g.json"
    f.write_text(serialize_graph(g, t, indent=2))
    assert load_graph(f) == (g, t)
    with pytest.raises(GraphError, match="cannot read"):
        load_graph(tmp_path / "missing.json")


def test_rationals_are_strings():
    g, t = directed_counterexample()
    obj = graph_to_obj(g, t)
    assert all(isinstance(e["p"], str) and "/" in e["p"] for e in obj["edges"])
    json.dumps(obj)
