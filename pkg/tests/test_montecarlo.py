import json
import math
from fractions import Fraction

import pytest

from conftest import H, single_edge, triangle
from perccheck.engine import event_probability
from perccheck.events import Conn, Pivotal, Reach
from perccheck.graph import GraphError, TerminalSpec, WeightedGraph, directed_counterexample
from perccheck.montecarlo import BLOCK, Z, estimate_check, estimate_event, interval


def test_z_is_the_99_percent_quantile():
    assert Z == pytest.approx(2.5758, abs=1e-4)


def test_single_edge_within_four_se():
    est = estimate_event(single_edge(), Conn("0", "b"), 100_000, seed=1)
    assert abs(est.estimate - 0.5) <= 4 * est.se
    assert est.lo <= est.estimate <= est.hi


def test_triangle_within_four_se():
    est = estimate_event(triangle(), Conn("a", "b"), 100_000, seed=2)
    assert abs(est.estimate - 0.625) <= 4 * est.se


def test_one_sample():
    est = estimate_event(triangle(), Conn("a", "b"), 1, seed=3)
    assert est.estimate in (0.0, 1.0)
    assert 0 <= est.lo <= est.hi <= 1


def test_samples_must_be_positive():
    with pytest.raises(ValueError):
        estimate_event(triangle(), Conn("a", "b"), 0)


def test_determinism_and_worker_independence():
    g = triangle()
    a = estimate_event(g, Conn("a", "b"), 3 * BLOCK + 17, seed=9)
    b = estimate_event(g, Conn("a", "b"), 3 * BLOCK + 17, seed=9, workers=4)
    assert a == b
    c = estimate_event(g, Conn("a", "b"), 3 * BLOCK + 17, seed=10)
    assert c.hits != a.hits or c.seed != a.seed


def test_streams_differ():
    g = triangle()
    a = estimate_event(g, Conn("a", "b"), 5000, seed=1, stream=0)
    b = estimate_event(g, Conn("a", "b"), 5000, seed=1, stream=1)
    assert a.hits != b.hits


def test_pivotal_estimate_is_unbiased():
    est = estimate_event(triangle(), Pivotal(("a", "b"), Conn("a", "b")), 50_000, seed=4)
    assert abs(est.estimate - 0.75) <= 4 * est.se


def test_wilson_fallback_and_bounds():
    lo, hi, kind = interval(0, 100)
    assert kind == "wilson" and lo == 0 and 0 < hi < 0.1
    lo, hi, kind = interval(100, 100)
    assert kind == "wilson" and hi == 1 and lo > 0.9
    lo, hi, kind = interval(5000, 10000)
    assert kind == "normal" and lo < 0.5 < hi


def test_deterministic_graph_has_zero_se():
    g = WeightedGraph(["0", "a", "b"], [("0", "a", 1), ("a", "b", 0)])
    rep = estimate_check(g, TerminalSpec("0", "b", ("a",)), "postfkg", 1000, seed=0)
    assert rep.auxiliary["margin_se"] == 0
    assert rep.lhs == 0 and rep.rhs == 0


def test_directed_counterexample_margin():
    g, t = directed_counterexample()
    rep = estimate_check(g, t, "postfkg", 200_000, seed=0)
    assert rep.label == "directed variant" and not rep.exact
    assert abs(rep.margin - (-1 / 32)) <= 4 * rep.auxiliary["margin_se"]
    json.dumps(rep.to_dict())


def test_estimate_check_same_seed_identical():
    g, t = directed_counterexample()
    a = estimate_check(g, t, "prefkga", 20_000, seed=3).to_dict()
    b = estimate_check(g, t, "prefkga", 20_000, seed=3).to_dict()
    assert json.dumps(a) == json.dumps(b)


def test_estimate_check_rejects_other_conjectures():
    with pytest.raises(GraphError):
        estimate_check(triangle(), TerminalSpec("a", "b", ("c",)), "mcp", 10)


def test_exact_bernoulli_draws_for_odd_denominators():
    g = WeightedGraph(["0", "b"], [("0", "b", Fraction(1, 3))])
    est = estimate_event(g, Conn("0", "b"), 60_000, seed=5)
    assert abs(est.estimate - 1 / 3) <= 4 * est.se
