"""Undirected weighted graphs, their Laplacians and spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg

from .sparse import SparseMatrix

# Dense eigendecomposition is only offered up to this size; beyond it the
# Chebyshev path is the intended route.
EXACT_SPECTRUM_MAX_NODES = 2000

POWER_ITER_MAX_STEPS = 500
POWER_ITER_TOL = 1e-12


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph with a symmetric adjacency matrix."""

    num_nodes: int
    adjacency: SparseMatrix = field(repr=False)

    def __post_init__(self):
        if self.adjacency.shape != (self.num_nodes, self.num_nodes):
            raise ValueError("adjacency shape does not match num_nodes")

    @property
    def degrees(self) -> np.ndarray:
        """Weighted degree of every node (row sums of the adjacency)."""
        return np.asarray(self.adjacency.csr.sum(axis=1)).ravel()

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (self loops count once)."""
        a = self.adjacency.csr
        off_diag = a.nnz - np.count_nonzero(a.diagonal())
        return off_diag // 2 + np.count_nonzero(a.diagonal())


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric matrix.

    ``values`` are ascending; ``vectors`` holds orthonormal eigenvectors as
    columns, so ``vectors @ diag(values) @ vectors.T`` recovers the matrix.
    """

    values: np.ndarray
    vectors: np.ndarray = field(repr=False)

    def matrix_function(self, diag_values: np.ndarray) -> np.ndarray:
        """Dense ``U diag(f(lambda)) U^T`` for per-eigenvalue filter values."""
        fvals = np.asarray(diag_values, dtype=np.float64)
        if fvals.shape != self.values.shape:
            raise ValueError("need one filter value per eigenvalue")
        return (self.vectors * fvals) @ self.vectors.T


def build_graph(
    num_nodes: int,
    edges: Iterable[tuple[int, int, float]],
    add_self_loops: bool = False,
) -> Graph:
    """Assemble an undirected graph from weighted edge triples.

    Each ``(u, v, w)`` contributes ``w`` to both ``A[u, v]`` and ``A[v, u]``;
    duplicate pairs accumulate by summation. Self loops in the input are kept
    once on the diagonal. ``add_self_loops`` adds unit weight to every
    diagonal entry after assembly.

    Parameters
    ----------
    num_nodes : int
        Number of nodes; edge endpoints must lie in ``[0, num_nodes)``.
    edges : iterable of (int, int, float)
        Weighted edge list. Weights must be positive and finite.
    add_self_loops : bool
        If True, add ``1.0`` to each diagonal entry.
    """
    if num_nodes < 0:
        raise ValueError("num_nodes must be nonnegative")
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ValueError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
        if not np.isfinite(w) or w <= 0:
            raise ValueError(f"edge ({u}, {v}) has invalid weight {w}")
        if u == v:
            rows.append(u)
            cols.append(v)
            vals.append(w)
        else:
            rows.extend((u, v))
            cols.extend((v, u))
            vals.extend((w, w))
    if add_self_loops:
        rows.extend(range(num_nodes))
        cols.extend(range(num_nodes))
        vals.extend([1.0] * num_nodes)
    adj = SparseMatrix.from_coo(rows, cols, vals, (num_nodes, num_nodes))
    return Graph(num_nodes=num_nodes, adjacency=adj)


def normalized_laplacian(graph: Graph) -> SparseMatrix:
    """Symmetric normalized Laplacian ``I - D^{-1/2} A D^{-1/2}``.

    Isolated nodes (zero degree) get an identity row: diagonal 1, no
    off-diagonal entries. The result is symmetric with spectrum in [0, 2].
    """
    n = graph.num_nodes
    deg = graph.degrees
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    a = graph.adjacency.csr
    scaled = a.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :])
    lap = SparseMatrix.identity(n).csr - scaled.tocsr()
    # Symmetrize to scrub roundoff from the two-sided scaling.
    lap = (lap + lap.T) * 0.5
    return SparseMatrix.from_scipy(lap)


def combinatorial_laplacian(graph: Graph) -> SparseMatrix:
    """Unnormalized Laplacian ``D - A``."""
    n = graph.num_nodes
    import scipy.sparse as sp

    dmat = sp.diags_array(graph.degrees, format="csr")
    return SparseMatrix.from_scipy(dmat - graph.adjacency.csr)


def lambda_max(lap: SparseMatrix, method: str = "exact") -> float:
    """Largest eigenvalue of a symmetric PSD matrix.

    ``exact`` runs a dense symmetric eigensolve (sizes up to
    ``EXACT_SPECTRUM_MAX_NODES``). ``power_iteration`` runs a deterministic
    power method and returns ``min(1.01 * estimate, gershgorin_bound)``: a
    cheap value guaranteed not to undershoot badly while never exceeding the
    disc bound.
    """
    n = lap.num_rows
    if n == 0:
        return 0.0
    if method == "exact":
        if n > EXACT_SPECTRUM_MAX_NODES:
            raise ValueError(
                f"exact lambda_max limited to {EXACT_SPECTRUM_MAX_NODES} nodes, got {n}"
            )
        vals = scipy.linalg.eigvalsh(lap.to_dense())
        return float(max(vals[-1], 0.0))
    if method == "power_iteration":
        gersh = lap.gershgorin_bound()
        if lap.nnz == 0:
            return 0.0
        # Deterministic start vector with no exact symmetry to get trapped in.
        vec = 1.0 + np.arange(n, dtype=np.float64) / n
        vec /= np.linalg.norm(vec)
        rho = 0.0
        for _ in range(POWER_ITER_MAX_STEPS):
            nxt = lap @ vec
            norm = np.linalg.norm(nxt)
            if norm == 0.0:
                break
            nxt /= norm
            rho_new = float(nxt @ (lap @ nxt))
            if abs(rho_new - rho) <= POWER_ITER_TOL * max(1.0, abs(rho_new)):
                rho = rho_new
                break
            rho, vec = rho_new, nxt
        return float(min(1.01 * max(rho, 0.0), gersh))
    raise ValueError(f"unknown method {method!r}")


def eigendecompose(lap: SparseMatrix) -> Spectrum:
    """Full dense eigendecomposition of a symmetric matrix.

    Refuses matrices larger than ``EXACT_SPECTRUM_MAX_NODES``. Tiny negative
    eigenvalues from roundoff are clamped to zero.
    """
    n = lap.num_rows
    if n > EXACT_SPECTRUM_MAX_NODES:
        raise ValueError(
            f"eigendecompose limited to {EXACT_SPECTRUM_MAX_NODES} nodes, got {n}"
        )
    if n == 0:
        return Spectrum(values=np.zeros(0), vectors=np.zeros((0, 0)))
    vals, vecs = scipy.linalg.eigh(lap.to_dense())
    if vals.size and vals[0] < -1e-8:
        raise ValueError(f"matrix is not PSD: min eigenvalue {vals[0]}")
    return Spectrum(values=np.clip(vals, 0.0, None), vectors=vecs)
