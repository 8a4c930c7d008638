import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import H, random_multigraph, random_terminals, triangle
from perccheck.graph import GraphError, TerminalSpec, WeightedGraph, directed_counterexample
from perccheck.lemmas import LEMMAS, SuiteResult, compare, lemma_suite, phi_superadditive, pivotal_max


def test_suite_runs_every_lemma_without_violations():
    rng = random.Random(31)
    total = SuiteResult()
    for i in range(60):
        g = random_multigraph(rng, 6, 9, den=4, loops=False)
        t = random_terminals(rng, g, a_size=min(3, g.n))
        total.merge(lemma_suite(g, t, seed=i))
    assert total.draws == 60 * len(LEMMAS)
    assert len(total) + total.skipped_zero + total.skipped_structural == total.draws
    assert total.violations == []
    assert {r.conjecture for r in total} == {"lemma:" + n for n in LEMMAS}
    assert all(r.exact for r in total)


def test_suite_is_seed_deterministic():
    g = WeightedGraph(list("0abcd"), [("0", "a", H), ("a", "b", H), ("b", "c", H), ("c", "0", H), ("d", "a", H)])
    t = TerminalSpec("0", "b", ("a", "c", "d"))
    a = [r.to_dict() for r in lemma_suite(g, t, seed=5, draws=3)]
    b = [r.to_dict() for r in lemma_suite(g, t, seed=5, draws=3)]
    assert a == b


def test_phi_superadditive_singletons_on_star():
    star = WeightedGraph(["0", "a1", "a2"], [("0", "a1", H), ("0", "a2", H)])
    t = TerminalSpec("0", "a1", ("a1", "a2"))
    reps = [phi_superadditive(star, t, np.random.default_rng(s)) for s in range(20)]
    split = [r for r in reps if len(r.auxiliary["parts"]) == 2]
    assert split
    for r in split:
        # phi({1}) + phi({2}) = 2/3 <= phi(A) = 3/4
        assert r.rhs == Fraction(2, 3) and r.lhs == Fraction(3, 4)


def test_compare_with_equal_probabilities_has_zero_delta():
    g = WeightedGraph(["x", "y", "b"], [("x", "b", H), ("y", "b", H)])
    t = TerminalSpec("x", "b", ("x",))
    for s in range(10):
        rep = compare(g, t, np.random.default_rng(s), "i")
        assert rep.auxiliary["delta"] == 0 and rep.margin >= 0


def test_pivotal_max_triangle_plus_pendant():
    g = WeightedGraph(["a1", "a2", "a3", "b"],
                      [("a1", "a2", H), ("a2", "a3", H), ("a1", "a3", H), ("a3", "b", H)])
    t = TerminalSpec("a1", "b", ("a1", "a2", "a3"))
    rep = pivotal_max(g, t, np.random.default_rng(0))
    assert rep.margin >= 0 and len(rep.auxiliary["pivotal"]) == 3


def test_directed_rejected():
    g, t = directed_counterexample()
    with pytest.raises(GraphError):
        lemma_suite(g, t)


def test_unknown_lemma():
    with pytest.raises(ValueError):
        lemma_suite(triangle(), TerminalSpec("a", "b", ("c",)), lemmas=["nope"])
