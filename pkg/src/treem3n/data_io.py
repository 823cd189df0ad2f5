"""Datasets, model files, edge lists and the synthetic tree-data generator.

Dataset text format (one instance per line)::

    #labels=3 #features=8
    0,2 1:0.5 7:-1.0
     3:2.0            <- no positive labels

Label indices are 0-based, feature indices 1-based, ``#`` starts a comment.
"""
from __future__ import annotations

import heapq
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._utils import substream, to_jsonable
from .graph import EdgeSet, complete_edges, edge_index
from .model import TrainedModel, WeightVector, predict_batch

__all__ = [
    "Instance", "Dataset", "DatasetFormatError", "ModelFormatError",
    "parse_dataset", "write_dataset", "save_model", "load_model",
    "model_to_json", "model_from_json", "read_graph", "write_graph",
    "prufer_to_edges", "synth_generate", "MODEL_VERSION",
]

MODEL_VERSION = 1
_HEADER = re.compile(r"#\s*labels\s*=\s*(\d+)\s+#\s*features\s*=\s*(\d+)")


class DatasetFormatError(ValueError):
    def __init__(self, path, line, column, reason):
        self.line, self.column, self.reason = line, column, reason
        super().__init__(f"{path}:{line}:{column}: {reason}")


class ModelFormatError(ValueError):
    pass


@dataclass
class Instance:
    features: np.ndarray
    labels: np.ndarray | None = None


@dataclass
class Dataset:
    """``X`` is a dense ``(M, d)`` feature matrix, ``Y`` an ``(M, L)`` 0/1
    label matrix (``None`` for unlabeled data)."""

    L: int
    d: int
    X: np.ndarray
    Y: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, self.d)
        if self.Y is not None:
            self.Y = np.asarray(self.Y, dtype=np.int8).reshape(-1, self.L)
            if self.Y.shape[0] != self.X.shape[0]:
                raise ValueError("X and Y have different numbers of rows")
            if np.any((self.Y != 0) & (self.Y != 1)):
                raise ValueError("labels must be 0/1")

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, m) -> Instance:
        return Instance(self.X[m], None if self.Y is None else self.Y[m])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.L, self.d, self.X[idx],
                       None if self.Y is None else self.Y[idx])

    @property
    def labeled(self) -> bool:
        return self.Y is not None

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.L == other.L
                and self.d == other.d and np.array_equal(self.X, other.X)
                and ((self.Y is None and other.Y is None)
                     or (self.Y is not None and other.Y is not None
                         and np.array_equal(self.Y, other.Y))))


def parse_dataset(path) -> Dataset:
    path = Path(path)
    text = path.read_text()
    L = d = None
    X, Y = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if L is None:
            m = _HEADER.search(raw)
            if m:
                L, d = int(m.group(1)), int(m.group(2))
                continue
            if raw.strip() and not raw.lstrip().startswith("#"):
                raise DatasetFormatError(path, lineno, 1,
                                         "missing '#labels=L #features=d' header")
            continue
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        labels = np.zeros(L, dtype=np.int8)
        feats = np.zeros(d)
        tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if not line[0].isspace() and ":" not in tokens[0][1]:
            col, tok = tokens.pop(0)
            for part in tok.split(","):
                try:
                    k = int(part)
                except ValueError:
                    raise DatasetFormatError(path, lineno, col,
                                             f"bad label {part!r}") from None
                if not 0 <= k < L:
                    raise DatasetFormatError(
                        path, lineno, col, f"label {k} out of range [0, {L})")
                labels[k] = 1
        for col, tok in tokens:
            idx, sep, val = tok.partition(":")
            try:
                k, v = int(idx), float(val)
            except ValueError:
                raise DatasetFormatError(path, lineno, col,
                                         f"bad feature {tok!r}") from None
            if not sep or not math.isfinite(v):
                raise DatasetFormatError(path, lineno, col,
                                         f"bad feature {tok!r}")
            if not 1 <= k <= d:
                raise DatasetFormatError(
                    path, lineno, col, f"feature index {k} out of range [1, {d}]")
            feats[k - 1] = v
        X.append(feats)
        Y.append(labels)
    if L is None:
        raise DatasetFormatError(path, 1, 1, "missing '#labels=L #features=d' header")
    return Dataset(L, d, np.array(X).reshape(-1, d),
                   np.array(Y, dtype=np.int8).reshape(-1, L))


def write_dataset(ds: Dataset, path) -> None:
    lines = [f"#labels={ds.L} #features={ds.d}"]
    for m in range(len(ds)):
        labels = "" if ds.Y is None else ",".join(
            str(k) for k in np.flatnonzero(ds.Y[m]))
        feats = " ".join(f"{k + 1}:{float(ds.X[m, k])!r}"
                         for k in np.flatnonzero(ds.X[m]))
        if not labels and not feats:
            feats = "1:0.0"  # keep the line from reading as blank
        lines.append(f"{labels} {feats}".rstrip() if labels else f" {feats}")
    Path(path).write_text("\n".join(lines) + "\n")


def model_to_json(m: TrainedModel) -> str:
    edges = complete_edges(m.L)
    doc = {
        "version": MODEL_VERSION,
        "L": m.L,
        "d": m.d,
        "structure": {"kind": m.structure,
                      "edges": [list(e) for e in m.edges.sorted()]},
        "node_w": m.weights.node_w.tolist(),
        "edge_w": [{"i": i, "j": j, "w": float(m.weights.edge_w[k])}
                   for k, (i, j) in enumerate(edges)],
        "config": to_jsonable(m.config),
        "metadata": to_jsonable(m.metadata),
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def model_from_json(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"corrupt model file: {err}") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("corrupt model file: no schema version")
    if doc["version"] != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model schema version {doc['version']!r} "
            f"(expected {MODEL_VERSION})")
    try:
        L, d = int(doc["L"]), int(doc["d"])
        node_w = np.array(doc["node_w"], dtype=float).reshape(L, d + 1)
        edge_w = np.zeros(L * (L - 1) // 2)
        for item in doc["edge_w"]:
            edge_w[edge_index(item["i"], item["j"], L)] = float(item["w"])
        kind = doc["structure"]["kind"]
        edges = EdgeSet(L, [tuple(e) for e in doc["structure"]["edges"]])
        return TrainedModel(WeightVector(node_w, edge_w), kind,
                            edges if kind == "tree" else None,
                            doc.get("config", {}), doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"corrupt model file: {err}") from None


def save_model(m: TrainedModel, path) -> None:
    Path(path).write_text(model_to_json(m))


def load_model(path) -> TrainedModel:
    return model_from_json(Path(path).read_text())


def read_graph(path) -> EdgeSet:
    """Edge list with a ``#vertices=n`` header and one ``i j`` pair per line."""
    path = Path(path)
    n = None
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        m = re.search(r"#\s*vertices\s*=\s*(\d+)", raw)
        if m and n is None:
            n = int(m.group(1))
            continue
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 2:
            raise DatasetFormatError(path, lineno, 1, "expected 'i j'")
        try:
            edges.append((int(line[0]), int(line[1])))
        except ValueError:
            raise DatasetFormatError(path, lineno, 1, "non-integer vertex") from None
    if n is None:
        raise DatasetFormatError(path, 1, 1, "missing '#vertices=n' header")
    try:
        return EdgeSet(n, edges)
    except ValueError as err:
        raise DatasetFormatError(path, 1, 1, str(err)) from None


def write_graph(G: EdgeSet, path) -> None:
    lines = [f"#vertices={G.n}"] + [f"{i} {j}" for i, j in G.sorted()]
    Path(path).write_text("\n".join(lines) + "\n")


def prufer_to_edges(seq, n: int) -> list[tuple[int, int]]:
    """Decode a Prüfer sequence of length ``n - 2`` into tree edges."""
    if n == 1:
        return []
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append(tuple(sorted((leaf, int(v)))))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((a, b))
    return sorted(edges)


def synth_generate(L: int = 10, d: int = 4, m_train: int = 100,
                   m_test: int = 1000, seed: int = 0):
    """Sample a random tree model and label Gaussian inputs with it.

    The tree comes from a uniform Prüfer sequence; node weights are standard
    normal, tree-edge weights are ``±Uniform[0.5, 2]`` with random sign.
    Returns ``(train, test, truth)``.
    """
    if m_train < 1:
        raise ValueError("m_train must be at least 1")
    rng = substream(seed, "synth-tree")
    seq = rng.integers(0, L, size=max(L - 2, 0)) if L > 1 else []
    tree = EdgeSet(L, prufer_to_edges([int(v) for v in seq], L))
    rng = substream(seed, "synth-weights")
    node_w = rng.normal(size=(L, d + 1))
    mag = rng.uniform(0.5, 2.0, size=L * (L - 1) // 2)
    sign = np.where(rng.random(L * (L - 1) // 2) < 0.5, -1.0, 1.0)
    edge_w = np.where(tree.mask(), sign * mag, 0.0)
    truth = TrainedModel(
        WeightVector(node_w, edge_w), "tree", tree,
        config={"generator": "synth", "L": L, "d": d, "m_train": m_train,
                "m_test": m_test, "seed": seed})

    def sample(name, m):
        X = substream(seed, name).normal(size=(m, d))
        return Dataset(L, d, X, predict_batch(truth, X))

    return sample("synth-train", m_train), sample("synth-test", m_test), truth


# the hardness-gadget generators live in their own module
from .gadget import (GadgetInstance, GadgetSample, gadget_build,  # noqa: E402
                     gadget_check_tree)

__all__ += ["GadgetInstance", "GadgetSample", "gadget_build",
            "gadget_check_tree"]
