"""Noise models for robustness experiments.

Three perturbations, each deterministic given its seed: Bernoulli flips of
binary features, additive Gaussian feature noise, and random edge removal or
addition toward a target edge-count ratio.

The Bernoulli "noise ratio" can exceed 1 because it is measured relative to
the nonzero entries: the expected number of flipped entries equals
``ratio * nnz(X)``, so the per-entry flip probability is
``min(1, ratio * nnz / size)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, build_graph

PERTURB_MODELS = ("bernoulli_flip", "gaussian", "edge_ratio")
PERTURB_TARGETS = ("features", "edges")


@dataclass(frozen=True)
class PerturbationSpec:
    """One noise model aimed at either the features or the edge set.

    ``value`` is the model parameter: flip ratio for ``bernoulli_flip``,
    noise std for ``gaussian``, target edge-count ratio for ``edge_ratio``.
    """

    target: str
    model: str
    value: float
    seed: int = 0

    def __post_init__(self):
        if self.target not in PERTURB_TARGETS:
            raise ValueError(f"target must be one of {PERTURB_TARGETS}")
        if self.model not in PERTURB_MODELS:
            raise ValueError(f"model must be one of {PERTURB_MODELS}")
        if self.value < 0:
            raise ValueError("model parameter must be nonnegative")
        expected_target = "edges" if self.model == "edge_ratio" else "features"
        if self.target != expected_target:
            raise ValueError(f"model {self.model!r} targets {expected_target!r}")


def _undirected_pairs(graph: Graph) -> list[tuple[int, int]]:
    csr = graph.adjacency.csr.tocoo()
    return [(int(u), int(v)) for u, v in zip(csr.row, csr.col) if u < v]


def perturb(
    graph: Graph, features: np.ndarray, spec: PerturbationSpec
) -> tuple[Graph, np.ndarray]:
    """Apply one perturbation; the untouched half passes through unchanged.

    ``bernoulli_flip`` requires 0/1 features and flips entries with the
    probability described in the module docstring. ``gaussian`` adds
    N(0, value^2) to every entry. ``edge_ratio`` removes random edges when
    value < 1 and adds random non-edges when value > 1, targeting
    ``round(value * |E|)`` pairs; self loops and weights of surviving edges
    are preserved, added edges get unit weight.
    """
    features = np.asarray(features, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    if spec.model == "bernoulli_flip":
        if spec.value == 0.0:
            return graph, features
        if not np.all(np.isin(features, (0.0, 1.0))):
            raise ValueError("bernoulli_flip requires 0/1 features")
        nnz = int(np.count_nonzero(features))
        p = min(1.0, spec.value * nnz / features.size)
        flip = rng.random(features.shape) < p
        return graph, np.where(flip, 1.0 - features, features)
    if spec.model == "gaussian":
        if spec.value == 0.0:
            return graph, features
        return graph, features + rng.normal(0.0, spec.value, size=features.shape)
    # edge_ratio
    if spec.value == 1.0:
        return graph, features
    pairs = _undirected_pairs(graph)
    m = len(pairs)
    target = int(round(spec.value * m))
    n = graph.num_nodes
    adj = graph.adjacency.csr
    loops = [
        (i, i, float(adj[i, i])) for i in range(n) if adj[i, i] != 0.0
    ]
    if target <= m:
        keep_idx = rng.choice(m, size=target, replace=False) if m else []
        kept = [pairs[i] for i in sorted(keep_idx)]
        edges = [(u, v, float(adj[u, v])) for u, v in kept]
    else:
        existing = set(pairs)
        edges = [(u, v, float(adj[u, v])) for u, v in pairs]
        need = target - m
        if need > n * (n - 1) // 2 - m:
            raise ValueError("target ratio exceeds the number of available pairs")
        added = 0
        while added < need:
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            if u == v:
                continue
            pair = (u, v) if u < v else (v, u)
            if pair in existing:
                continue
            existing.add(pair)
            edges.append((pair[0], pair[1], 1.0))
            added += 1
    return build_graph(n, edges + loops), features
