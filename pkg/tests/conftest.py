import itertools

import numpy as np
import pytest

from treem3n.data_io import prufer_to_edges
from treem3n.graph import EdgeSet, complete_edges
from treem3n.inference import PairwiseModel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_tree(n, rng):
    if n == 1:
        return EdgeSet(1)
    seq = rng.integers(0, n, size=n - 2)
    return EdgeSet(n, prufer_to_edges([int(v) for v in seq], n))


def random_forest(n, rng):
    T = random_tree(n, rng)
    keep = [e for e in T.sorted() if rng.random() < 0.7]
    return EdgeSet(n, keep)


def random_model(n, card, edges, rng, scale=1.0):
    card = [card] * n if np.isscalar(card) else list(card)
    node = [scale * rng.normal(size=k) for k in card]
    pots = {e: scale * rng.normal(size=(card[e[0]], card[e[1]])) for e in edges}
    return PairwiseModel(n, card, node, pots)


def random_cyclic_graph(n, rng):
    """Random edge set on ``n`` vertices that contains at least one cycle."""
    edges = complete_edges(n)
    while True:
        pick = [e for e in edges if rng.random() < 0.6]
        G = EdgeSet(n, pick)
        if len(G) + _components(G) - n > 0:
            return G


def _components(G):
    seen, count = set(), 0
    adj = {v: set() for v in range(G.n)}
    for i, j in G:
        adj[i].add(j)
        adj[j].add(i)
    for s in range(G.n):
        if s in seen:
            continue
        count += 1
        stack = [s]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v] - seen)
    return count


def brute_map(model, support):
    """Maximum score by plain iteration over assignments."""
    from treem3n.inference import score
    best = -np.inf
    for y in itertools.product(*[range(k) for k in model.card]):
        best = max(best, score(model, y, support))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
