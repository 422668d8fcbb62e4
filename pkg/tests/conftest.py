import pytest
from hypothesis import settings, strategies as st

from fairsel.graph import Dag, Role, random_dag

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

S, A, X, Y = Role.SENSITIVE, Role.ADMISSIBLE, Role.CANDIDATE, Role.TARGET


def make_dag(edges, roles):
    nodes = list(roles)
    return Dag(nodes, edges, roles)


@st.composite
def dags(draw, max_nodes=12, max_edges=25):
    n = draw(st.integers(min_value=3, max_value=max_nodes))
    m = draw(st.integers(min_value=0, max_value=max_edges))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    n_s = draw(st.integers(min_value=1, max_value=2))
    n_a = draw(st.integers(min_value=0, max_value=min(2, n - n_s - 1)))
    return random_dag(n, m, seed, n_sensitive=n_s, n_admissible=n_a)


@st.composite
def dag_queries(draw, max_nodes=12):
    """A DAG plus disjoint (x, y, z) with x and y nonempty."""
    dag = draw(dags(max_nodes=max_nodes))
    nodes = list(dag.nodes)
    labels = draw(st.lists(st.sampled_from("xyzn"), min_size=len(nodes), max_size=len(nodes)))
    if "x" not in labels:
        labels[0] = "x"
    if "y" not in labels:
        labels[-1 if labels[-1] != "x" or labels.count("x") > 1 else 1] = "y"
    x = {v for v, l in zip(nodes, labels) if l == "x"}
    y = {v for v, l in zip(nodes, labels) if l == "y"}
    z = {v for v, l in zip(nodes, labels) if l == "z"}
    return dag, x, y, z


@pytest.fixture
def chain_sax():
    """S -> A -> X1 -> Y."""
    return make_dag([("S", "A"), ("A", "X1"), ("X1", "Y")], {"S": S, "A": A, "X1": X, "Y": Y})


@pytest.fixture
def blind_spot_dag():
    """X1 -> A1 <- S1 with X1 -> Y, A1 -> Y, and the biased S1 -> X2 -> Y."""
    return make_dag(
        [("X1", "A1"), ("S1", "A1"), ("X1", "Y"), ("A1", "Y"), ("S1", "X2"), ("X2", "Y")],
        {"S1": S, "A1": A, "X1": X, "X2": X, "Y": Y},
    )


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
