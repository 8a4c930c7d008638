import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from perccheck.graph import Edge, TerminalSpec, WeightedGraph

H = Fraction(1, 2)

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def triangle(p=H):
    return WeightedGraph(["a", "b", "c"], [("a", "b", p), ("b", "c", p), ("a", "c", p)])


def path(*names, p=H):
    return WeightedGraph(list(names), [(u, v, p) for u, v in zip(names, names[1:])])


def single_edge(p=H):
    return WeightedGraph(["0", "b"], [("0", "b", p)])


def random_multigraph(rng: random.Random, n_max=6, m_max=9, den=8, directed=False, loops=True):
    """Random multigraph with probabilities k/den (0 and 1 included)."""
    n = rng.randint(2, n_max)
    vs = [str(i) for i in range(n)]
    edges = []
    for _ in range(rng.randint(0, m_max)):
        u, v = rng.choice(vs), rng.choice(vs)
        if u == v and not loops:
            continue
        edges.append(Edge(u, v, Fraction(rng.randint(0, den), den)))
    return WeightedGraph(vs, edges, directed)


def random_terminals(rng: random.Random, g: WeightedGraph, a_size=None):
    zero = rng.choice(g.vertices)
    b = rng.choice([v for v in g.vertices if v != zero] or [zero])
    k = a_size or rng.randint(1, min(3, g.n))
    A = tuple(rng.sample(list(g.vertices), k))
    return TerminalSpec(zero, b, A)


@st.composite
def graphs(draw, n_max=5, m_max=7, directed=False):
    n = draw(st.integers(2, n_max))
    vs = [str(i) for i in range(n)]
    m = draw(st.integers(0, m_max))
    edges = []
    for _ in range(m):
        u = draw(st.sampled_from(vs))
        v = draw(st.sampled_from(vs))
        p = Fraction(draw(st.integers(0, 4)), 4)
        edges.append(Edge(u, v, p))
    return WeightedGraph(vs, edges, directed)


@st.composite
def instances(draw, n_max=5, m_max=7, directed=False, a_max=3):
    g = draw(graphs(n_max, m_max, directed))
    zero = draw(st.sampled_from(g.vertices))
    b = draw(st.sampled_from(g.vertices))
    A = draw(st.lists(st.sampled_from(g.vertices), min_size=1, max_size=a_max, unique=True))
    return g, TerminalSpec(zero, b, tuple(A))


@pytest.fixture
def rng():
    return random.Random(12345)
