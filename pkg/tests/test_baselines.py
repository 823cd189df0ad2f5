import numpy as np
import pytest

from treem3n.baselines import (TRAINERS, train_crank, train_empty, train_full,
                               train_greedy, train_mst, train_project)
from treem3n.data_io import Dataset, synth_generate
from treem3n.graph import EdgeSet, is_spanning_tree
from treem3n.training import TrainConfig, objective, solve_restricted

CFG = TrainConfig(lam=0.05, inner_tol=1e-6, restarts=2)


@pytest.fixture(scope="module")
def train():
    return synth_generate(L=4, d=2, m_train=80, m_test=1, seed=1)[0]


def test_registry():
    assert set(TRAINERS) == {"empty", "full", "greedy", "project", "mst", "crank"}


def test_structures(train):
    e = train_empty(train, cfg=CFG)
    assert e.structure == "empty" and np.all(e.weights.edge_w == 0)
    f = train_full(train, cfg=CFG)
    assert f.structure == "full" and len(f.edges) == 6
    for fn in (train_greedy, train_project, train_mst, train_crank):
        m = fn(train, cfg=CFG)
        assert m.structure == "tree" and is_spanning_tree(m.edges)
        assert np.all(m.weights.edge_w[~m.edges.mask()] == 0)


def test_objective_ordering(train):
    full = train_full(train, cfg=CFG)
    empty = train_empty(train, cfg=CFG)
    of, oe = full.metadata["objective"], empty.metadata["objective"]
    for fn in (train_greedy, train_project, train_mst):
        m = fn(train, cfg=CFG)
        ot = objective(m.weights, train, CFG.lam, m.edges)
        assert of <= ot * (1 + 1e-4)
        assert ot <= oe * (1 + 1e-4)


def test_lambda_override(train):
    m = train_empty(train, lam=0.5, cfg=CFG)
    assert m.config["lam"] == 0.5


def test_empty_equals_per_label_solves(train):
    e = train_empty(train, cfg=CFG)
    total = 0.0
    for l in range(train.L):
        one = Dataset(1, train.d, train.X, train.Y[:, [l]])
        w = solve_restricted(one, EdgeSet(1), CFG.lam, cfg=CFG)
        total += objective(w, one, CFG.lam, EdgeSet(1))
        np.testing.assert_allclose(w.node_w[0], e.weights.node_w[l], atol=1e-2)
    assert e.metadata["objective"] == pytest.approx(total, rel=1e-5)


def test_greedy_two_labels():
    data = synth_generate(L=2, d=2, m_train=40, m_test=1, seed=2)[0]
    m = train_greedy(data, cfg=CFG)
    assert m.edges.sorted() == [(0, 1)]
    assert m.metadata["sequence"] == [(0, 1)]
    assert m.metadata["n_solves"] == 2
    assert m.metadata["gains"][0] >= -1e-12


def test_greedy_records_monotone_objectives(train):
    m = train_greedy(train, cfg=CFG)
    objs = m.metadata["objectives"]
    assert len(objs) == train.L and len(m.metadata["sequence"]) == train.L - 1
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
    # 6 candidates, then 5, then 3 or 4 depending on the component sizes
    assert m.metadata["n_solves"] in (1 + 6 + 5 + 3, 1 + 6 + 5 + 4)


def test_mst_gains_nonnegative(train):
    m = train_mst(train, cfg=CFG)
    gains = m.metadata["gains"]
    assert len(gains) == 6
    assert min(gains.values()) >= -1e-9
