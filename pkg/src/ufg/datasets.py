"""Synthetic graph datasets and citation-data loading.

Everything here is seeded through ``numpy.random.default_rng`` and fully
deterministic given the seed. Citation-scale data is user-supplied in the
plain-text formats documented in ``ufg.io``; only synthetic generators ship.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graphs import Graph, build_graph


@dataclass(frozen=True)
class NodeDataset:
    """Single graph with node features, labels and index-mask splits."""

    graph: Graph
    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    train_mask: np.ndarray = field(repr=False)
    val_mask: np.ndarray = field(repr=False)
    test_mask: np.ndarray = field(repr=False)

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class GraphSample:
    """One labeled graph for graph-level classification."""

    graph: Graph
    features: np.ndarray = field(repr=False)
    label: int


@dataclass(frozen=True)
class GaussianFeatures:
    """Per-class unit-norm Gaussian mean plus isotropic noise."""

    dim: int = 16
    noise_std: float = 1.0


@dataclass(frozen=True)
class BinaryFeatures:
    """0/1 features: class-specific dims fire often, the rest rarely.

    The feature dims are split evenly across classes; an entry is 1 with
    probability ``p_active`` on the node's class dims and ``p_background``
    elsewhere. Needed by perturbation models that flip binary entries.
    """

    dim: int = 48
    p_active: float = 0.5
    p_background: float = 0.05


def random_er_graph(num_nodes: int, avg_degree: float, rng) -> Graph:
    """Erdos-Renyi graph with edge probability ``avg_degree / (n - 1)``.

    Small graphs sample every pair; large ones draw the binomial edge count
    and then that many distinct pairs, which is equivalent in distribution
    up to the pair-rejection and far cheaper than n^2 coin flips.
    """
    rng = np.random.default_rng(rng)
    n = num_nodes
    if n < 2:
        return build_graph(n, [])
    p = min(1.0, avg_degree / (n - 1))
    if n <= 600:
        upper = np.triu(rng.random((n, n)) < p, k=1)
        rows, cols = np.nonzero(upper)
        edges = [(int(u), int(v), 1.0) for u, v in zip(rows, cols)]
        return build_graph(n, edges)
    num_pairs = n * (n - 1) // 2
    m = int(rng.binomial(num_pairs, p))
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < m:
        need = m - len(chosen)
        u = rng.integers(0, n, size=2 * need + 8)
        v = rng.integers(0, n, size=2 * need + 8)
        for a, b in zip(u, v):
            if a == b:
                continue
            pair = (int(a), int(b)) if a < b else (int(b), int(a))
            chosen.add(pair)
            if len(chosen) == m:
                break
    edges = [(u, v, 1.0) for u, v in sorted(chosen)]
    return build_graph(n, edges)


def path_graph(num_nodes: int) -> Graph:
    """Path on ``num_nodes`` nodes with unit weights."""
    return build_graph(num_nodes, [(i, i + 1, 1.0) for i in range(num_nodes - 1)])


def cycle_graph(num_nodes: int) -> Graph:
    edges = [(i, (i + 1) % num_nodes, 1.0) for i in range(num_nodes)]
    return build_graph(num_nodes, edges)


def star_graph(num_nodes: int) -> Graph:
    return build_graph(num_nodes, [(0, i, 1.0) for i in range(1, num_nodes)])


def stratified_split(
    labels: np.ndarray, fractions: tuple[float, float], rng
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class shuffle into train/val/test masks by the given fractions.

    ``fractions = (train, val)``; the remainder is test. Every class
    contributes at least one training node.
    """
    rng = np.random.default_rng(rng)
    labels = np.asarray(labels)
    n = labels.shape[0]
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        n_train = max(1, int(round(fractions[0] * idx.size)))
        n_val = max(1, int(round(fractions[1] * idx.size)))
        train[idx[:n_train]] = True
        val[idx[n_train : n_train + n_val]] = True
        test[idx[n_train + n_val :]] = True
    return train, val, test


def generate_sbm(
    block_sizes: Sequence[int],
    p_in: float,
    p_out: float,
    feature_model: GaussianFeatures | BinaryFeatures = GaussianFeatures(),
    seed: int = 0,
) -> NodeDataset:
    """Stochastic block model with class-informative features.

    Within-block pairs connect with probability ``p_in``, cross-block pairs
    with ``p_out``. Features follow ``feature_model``; labels are the block
    ids; splits are stratified 10/20/70 train/val/test. Deterministic given
    ``seed``.
    """
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    block_sizes = [int(s) for s in block_sizes]
    if not block_sizes or min(block_sizes) <= 0:
        raise ValueError("every block must be nonempty")
    rng = np.random.default_rng(seed)
    labels = np.concatenate(
        [np.full(size, cls, dtype=np.int64) for cls, size in enumerate(block_sizes)]
    )
    n = labels.shape[0]
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    rows, cols = np.nonzero(upper)
    graph = build_graph(n, [(int(u), int(v), 1.0) for u, v in zip(rows, cols)])
    num_classes = len(block_sizes)
    if isinstance(feature_model, GaussianFeatures):
        means = rng.normal(size=(num_classes, feature_model.dim))
        means /= np.linalg.norm(means, axis=1, keepdims=True)
        features = means[labels] + feature_model.noise_std * rng.normal(
            size=(n, feature_model.dim)
        )
    elif isinstance(feature_model, BinaryFeatures):
        dim = feature_model.dim
        chunk = dim // num_classes
        if chunk == 0:
            raise ValueError("feature dim smaller than the number of classes")
        prob_mat = np.full((n, dim), feature_model.p_background)
        for cls in range(num_classes):
            lo = cls * chunk
            hi = dim if cls == num_classes - 1 else (cls + 1) * chunk
            prob_mat[labels == cls, lo:hi] = feature_model.p_active
        features = (rng.random((n, dim)) < prob_mat).astype(np.float64)
    else:
        raise TypeError(f"unknown feature model {type(feature_model).__name__}")
    train, val, test = stratified_split(labels, (0.1, 0.2), rng)
    return NodeDataset(
        graph=graph,
        features=features,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )


def _degree_features(graph: Graph) -> np.ndarray:
    return np.column_stack([np.ones(graph.num_nodes), graph.degrees])


def cycles_and_stars(
    num_per_class: int = 100, size_range: tuple[int, int] = (10, 30), seed: int = 0
) -> list[GraphSample]:
    """Binary graph-classification task: cycles (label 0) vs stars (label 1).

    Node features are (1, degree); sizes are drawn uniformly from
    ``size_range`` inclusive.
    """
    rng = np.random.default_rng(seed)
    samples: list[GraphSample] = []
    for label, maker in ((0, cycle_graph), (1, star_graph)):
        sizes = rng.integers(size_range[0], size_range[1] + 1, size=num_per_class)
        for size in sizes:
            g = maker(int(size))
            samples.append(GraphSample(graph=g, features=_degree_features(g), label=label))
    return samples


def sbm_graph_family(
    num_per_class: int = 50, size_range: tuple[int, int] = (20, 30), seed: int = 0
) -> list[GraphSample]:
    """Two-block SBM graphs (label 0) vs density-matched ER graphs (label 1)."""
    rng = np.random.default_rng(seed)
    p_in, p_out = 0.5, 0.05
    samples: list[GraphSample] = []
    for _ in range(num_per_class):
        size = int(rng.integers(size_range[0], size_range[1] + 1))
        half = size // 2
        ds = generate_sbm(
            [half, size - half],
            p_in,
            p_out,
            GaussianFeatures(dim=2, noise_std=1.0),
            seed=int(rng.integers(0, 2**31)),
        )
        samples.append(
            GraphSample(graph=ds.graph, features=_degree_features(ds.graph), label=0)
        )
        # ER with the SBM's expected average degree
        within = half * (half - 1) // 2 + (size - half) * (size - half - 1) // 2
        cross = half * (size - half)
        expected_edges = within * p_in + cross * p_out
        avg_deg = 2.0 * expected_edges / size
        g = random_er_graph(size, avg_deg, rng)
        samples.append(GraphSample(graph=g, features=_degree_features(g), label=1))
    return samples


def load_citation(directory: str | os.PathLike) -> NodeDataset:
    """Load a citation-style dataset from its documented on-disk layout.

    Expects ``graph.txt`` (graph text format), ``features.csv``,
    ``labels.txt`` (one integer per line), ``splits.json`` (train/val/test
    index lists) and ``manifest.json`` with the expected sizes. Split-size
    mismatches against the manifest warn; structural problems raise.
    """
    from . import io as ufg_io

    directory = os.fspath(directory)
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    graph = ufg_io.read_graph_text(os.path.join(directory, "graph.txt"))
    features = ufg_io.read_features_csv(os.path.join(directory, "features.csv"))
    labels = ufg_io.read_labels_text(os.path.join(directory, "labels.txt"))
    with open(os.path.join(directory, "splits.json"), encoding="utf-8") as fh:
        splits = json.load(fh)
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    n = graph.num_nodes
    if features.shape[0] != n or labels.shape[0] != n:
        raise ValueError("features/labels row count does not match the graph")
    masks = {}
    for name in ("train", "val", "test"):
        idx = np.asarray(splits[name], dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError(f"{name} split indices out of range")
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
        masks[name] = mask
    checks = {
        "num_nodes": n,
        "num_features": features.shape[1],
        "num_classes": int(labels.max()) + 1,
        "train_size": int(masks["train"].sum()),
        "val_size": int(masks["val"].sum()),
        "test_size": int(masks["test"].sum()),
    }
    for key, got in checks.items():
        want = manifest.get(key)
        if want is None:
            continue
        if key.endswith("_size"):
            if want != got:
                warnings.warn(f"{key}: manifest says {want}, data has {got}")
        elif want != got:
            raise ValueError(f"{key}: manifest says {want}, data has {got}")
    return NodeDataset(
        graph=graph,
        features=features,
        labels=labels,
        train_mask=masks["train"],
        val_mask=masks["val"],
        test_mask=masks["test"],
    )
