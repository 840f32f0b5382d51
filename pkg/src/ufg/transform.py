"""Undecimated framelet decomposition and reconstruction operators.

The transform is a bank of N x N operators ``W_{r,j}``: for filter bank
``{a; b_1..b_n}``, dilation ``d`` and spectral normalizer ``K``,

    W_{g,1} = g(d^{-K} L)
    W_{g,j} = g(d^{j-1-K} L) a(d^{j-2-K} L) ... a(d^{-K} L),   j >= 2

where ``g`` is a high pass ``b_r`` for the detail blocks and ``a`` for the
single low-pass block, whose chain runs to the top level ``J``. The blocks
are materialized either exactly in the Laplacian eigenbasis or as explicit
sparse Chebyshev matrix polynomials, then stacked: partition of unity of the
bank makes the stacked operator an isometry, so ``reconstruct`` is the plain
transpose and round trips are exact up to the approximation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .filters import (
    ChebyshevApprox,
    DEFAULT_CHEBYSHEV_DEGREE,
    FilterBank,
    apply_matrix_polynomial,
    apply_polynomial_to_signal,
    chebyshev_fit,
)
from .graphs import Spectrum
from .sparse import SparseMatrix, vstack

# Above this many total stacked entries the dense fast path is skipped and
# decompose/reconstruct run block-by-block on the sparse matrices.
DENSE_CACHE_MAX_ENTRIES = 1_500_000


def compute_K(lambda_max: float, d: float) -> int:
    """Smallest integer K with ``lambda_max <= d^K * pi``.

    Normalizes the Laplacian spectrum into the filters' fundamental domain
    ``[0, pi]``. Negative K is legitimate for spectra compressed below pi/d.
    """
    if not (lambda_max > 0):
        raise ValueError("lambda_max must be positive")
    if not (d > 1):
        raise ValueError("dilation must exceed 1")
    k = math.ceil(math.log(lambda_max / math.pi) / math.log(d))
    # Scrub boundary roundoff from the float logarithm.
    while d ** (k - 1) * math.pi >= lambda_max:
        k -= 1
    while d**k * math.pi < lambda_max:
        k += 1
    return k


@dataclass(frozen=True)
class FrameletSystem:
    """Immutable description of a framelet transform for one Laplacian.

    Parameters
    ----------
    bank : FilterBank
        Low-pass / high-pass masks; tightness requires partition of unity.
    dilation : float
        Scale base d > 1.
    levels : int
        Number of scale levels J >= 1.
    K : int
        Spectral normalizer; must satisfy ``d^K * pi >= lam_max``.
    lam_max : float
        Upper bound on the Laplacian spectrum this system targets.
    degree : int
        Chebyshev degree t used by the approximate path.
    mode : str
        ``"exact"`` (eigenbasis) or ``"chebyshev"`` (matrix polynomials).
    """

    bank: FilterBank
    dilation: float = 2.0
    levels: int = 2
    K: int = 0
    lam_max: float = 2.0
    degree: int = DEFAULT_CHEBYSHEV_DEGREE
    mode: str = "exact"

    def __post_init__(self):
        if not (self.dilation > 1):
            raise ValueError("dilation must exceed 1")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.mode not in ("exact", "chebyshev"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lam_max < 0:
            raise ValueError("lam_max must be nonnegative")
        if self.lam_max > 0 and self.dilation**self.K * math.pi < self.lam_max:
            raise ValueError("K too small for lam_max: d^K * pi < lam_max")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    @property
    def num_high(self) -> int:
        return self.bank.num_high

    @property
    def num_blocks(self) -> int:
        return self.num_high * self.levels + 1

    def block_index(self) -> tuple[tuple[int, int], ...]:
        """Canonical block order: low pass (0, J) first, then (r, j) r-major."""
        order: list[tuple[int, int]] = [(0, self.levels)]
        for r in range(1, self.num_high + 1):
            for j in range(1, self.levels + 1):
                order.append((r, j))
        return tuple(order)

    def factor_scale(self, j: int) -> float:
        """Argument scale ``d^{j-1-K}`` of the level-j filter factor."""
        return self.dilation ** (j - 1 - self.K)


def make_system(
    bank: FilterBank,
    lam_max: float,
    dilation: float = 2.0,
    levels: int = 2,
    degree: int = DEFAULT_CHEBYSHEV_DEGREE,
    mode: str = "exact",
) -> FrameletSystem:
    """Build a ``FrameletSystem`` with K derived from the spectral bound.

    ``lam_max == 0`` (edgeless graph, DC-only spectrum) gets K = 0.
    """
    K = compute_K(lam_max, dilation) if lam_max > 0 else 0
    return FrameletSystem(
        bank=bank,
        dilation=dilation,
        levels=levels,
        K=K,
        lam_max=float(lam_max),
        degree=degree,
        mode=mode,
    )


@dataclass(frozen=True)
class DecompositionOperator:
    """Materialized transform blocks in canonical order.

    ``blocks[i]`` is the N x N operator for ``block_index[i]``; index 0 is
    always the low pass ``(0, J)``. ``provenance`` records how the blocks
    were built (mode, degree, K, dilation, levels).
    """

    blocks: tuple[SparseMatrix, ...] = field(repr=False)
    block_index: tuple[tuple[int, int], ...]
    num_nodes: int
    provenance: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.blocks) != len(self.block_index):
            raise ValueError("one index entry per block required")
        if not self.block_index or self.block_index[0][0] != 0:
            raise ValueError("low-pass block must come first")
        for b in self.blocks:
            if b.shape != (self.num_nodes, self.num_nodes):
                raise ValueError("all blocks must be N x N")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def num_rows(self) -> int:
        return self.num_blocks * self.num_nodes

    def block(self, r: int, j: int) -> SparseMatrix:
        return self.blocks[self.block_index.index((r, j))]

    @property
    def _dense_cache_ok(self) -> bool:
        return self.num_rows * self.num_nodes <= DENSE_CACHE_MAX_ENTRIES

    @cached_property
    def _dense_stack(self) -> np.ndarray:
        return np.concatenate([b.to_dense() for b in self.blocks], axis=0)

    @cached_property
    def _transposed_blocks(self) -> tuple[SparseMatrix, ...]:
        return tuple(b.transpose() for b in self.blocks)


@dataclass(frozen=True)
class CoefficientStack:
    """Framelet coefficients as a block-stacked matrix.

    ``data`` has ``(nJ+1) * N`` rows and one column per signal feature;
    block b of ``block_index`` owns rows ``[b*N, (b+1)*N)``, low pass first.
    """

    data: np.ndarray = field(repr=False)
    block_index: tuple[tuple[int, int], ...]
    num_nodes: int

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("coefficient data must be 2-d")
        if self.data.shape[0] != len(self.block_index) * self.num_nodes:
            raise ValueError("row count must be (num blocks) * N")
        if not self.block_index or self.block_index[0][0] != 0:
            raise ValueError("low-pass block must come first")

    @property
    def num_blocks(self) -> int:
        return len(self.block_index)

    @property
    def num_features(self) -> int:
        return self.data.shape[1]

    def row_range(self, r: int, j: int) -> tuple[int, int]:
        b = self.block_index.index((r, j))
        return b * self.num_nodes, (b + 1) * self.num_nodes

    def block(self, r: int, j: int) -> np.ndarray:
        lo, hi = self.row_range(r, j)
        return self.data[lo:hi]

    def low_pass(self) -> np.ndarray:
        return self.data[: self.num_nodes]

    def with_data(self, data: np.ndarray) -> "CoefficientStack":
        return CoefficientStack(
            data=data, block_index=self.block_index, num_nodes=self.num_nodes
        )


def _exact_blocks(
    system: FrameletSystem, spectrum: Spectrum
) -> list[SparseMatrix]:
    lam = spectrum.values
    J, n = system.levels, system.num_high
    # chain[j] = product of low-pass factor values through level j
    chain = [np.ones_like(lam)]
    for j in range(1, J + 1):
        a_vals = system.bank.low_pass(system.factor_scale(j) * lam)
        chain.append(chain[-1] * a_vals)
    blocks = [SparseMatrix.from_dense(spectrum.matrix_function(chain[J]))]
    for r in range(1, n + 1):
        b_filter = system.bank.high_passes[r - 1]
        for j in range(1, J + 1):
            g = b_filter(system.factor_scale(j) * lam) * chain[j - 1]
            blocks.append(SparseMatrix.from_dense(spectrum.matrix_function(g)))
    return blocks


def _factor_fits(
    system: FrameletSystem,
) -> tuple[list[ChebyshevApprox], list[list[ChebyshevApprox]]]:
    """Chebyshev fits of every filter factor: ``low[j-1]`` is the level-j
    low-pass factor, ``high[r-1][j-1]`` the level-j factor of high pass r."""
    if not (system.lam_max > 0):
        raise ValueError("chebyshev mode needs a positive lam_max bound")
    t, lam_max = system.degree, system.lam_max

    def factor(fn, scale) -> ChebyshevApprox:
        return chebyshev_fit(lambda lam: fn(scale * lam), degree=t, lam_max=lam_max)

    low = [
        factor(system.bank.low_pass, system.factor_scale(j))
        for j in range(1, system.levels + 1)
    ]
    high = [
        [factor(b, system.factor_scale(j)) for j in range(1, system.levels + 1)]
        for b in system.bank.high_passes
    ]
    return low, high


def _chebyshev_blocks(system: FrameletSystem, lap: SparseMatrix) -> list[SparseMatrix]:
    J, n = system.levels, system.num_high
    low_fits, high_fits = _factor_fits(system)

    # Partial low-pass chains shared by every block at the same level.
    chain = SparseMatrix.identity(lap.num_rows)
    chains = [chain]
    for j in range(1, J + 1):
        a_mat = apply_matrix_polynomial(low_fits[j - 1], lap)
        chain = a_mat @ chain
        chains.append(chain)
    blocks = [chains[J]]
    for r in range(1, n + 1):
        for j in range(1, J + 1):
            b_mat = apply_matrix_polynomial(high_fits[r - 1][j - 1], lap)
            blocks.append(b_mat @ chains[j - 1])
    return blocks


def build_operators(
    system: FrameletSystem,
    lap: SparseMatrix,
    spectrum: Spectrum | None = None,
) -> DecompositionOperator:
    """Materialize all transform blocks for one Laplacian.

    Exact mode requires ``spectrum`` (its eigendecomposition); Chebyshev mode
    requires ``system.lam_max > 0`` and works matrix-free from ``lap``.
    """
    n = lap.num_rows
    if lap.num_cols != n:
        raise ValueError("Laplacian must be square")
    if system.mode == "exact":
        if spectrum is None:
            raise ValueError("exact mode requires a spectrum")
        if spectrum.values.shape[0] != n:
            raise ValueError("spectrum size does not match Laplacian")
        blocks = _exact_blocks(system, spectrum)
    else:
        blocks = _chebyshev_blocks(system, lap)
    return DecompositionOperator(
        blocks=tuple(blocks),
        block_index=system.block_index(),
        num_nodes=n,
        provenance={
            "mode": system.mode,
            "degree": system.degree,
            "K": system.K,
            "dilation": system.dilation,
            "levels": system.levels,
        },
    )


def stack_operator(op: DecompositionOperator) -> SparseMatrix:
    """Stacked operator: blocks concatenated vertically in canonical order."""
    return vstack(op.blocks)


def decompose(op: DecompositionOperator, X: np.ndarray) -> CoefficientStack:
    """Forward transform: block b of the output is ``W_b @ X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != op.num_nodes:
        raise ValueError(f"X must be 2-d with {op.num_nodes} rows")
    if op._dense_cache_ok:
        data = op._dense_stack @ X
    else:
        data = np.concatenate([blk @ X for blk in op.blocks], axis=0)
    return CoefficientStack(
        data=data, block_index=op.block_index, num_nodes=op.num_nodes
    )


def reconstruct(op: DecompositionOperator, c: CoefficientStack) -> np.ndarray:
    """Inverse transform: ``sum_b W_b^T c_b``, exact by tightness."""
    if c.block_index != op.block_index or c.num_nodes != op.num_nodes:
        raise ValueError("coefficient stack does not match operator")
    if op._dense_cache_ok:
        return op._dense_stack.T @ c.data
    out = np.zeros((op.num_nodes, c.num_features))
    n = op.num_nodes
    for b, blk_t in enumerate(op._transposed_blocks):
        out += blk_t @ c.data[b * n : (b + 1) * n]
    return out


def chebyshev_decompose(
    system: FrameletSystem, lap: SparseMatrix, X: np.ndarray
) -> CoefficientStack:
    """Forward transform applied matrix-free to a signal.

    Runs the per-factor Chebyshev recurrences directly on the signal columns
    with the partial low-pass chain shared across levels, never materializing
    the block operators. Work is ``(n+1) J`` factor applications of ``degree``
    sparse products each, so doubling ``J`` roughly doubles the cost
    regardless of how dense the materialized blocks would have become.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != lap.num_rows:
        raise ValueError(f"X must be 2-d with {lap.num_rows} rows")
    J, n = system.levels, system.num_high
    low_fits, high_fits = _factor_fits(system)
    chains = [X]
    for j in range(1, J + 1):
        chains.append(apply_polynomial_to_signal(low_fits[j - 1], lap, chains[-1]))
    parts = [chains[J]]
    for r in range(1, n + 1):
        for j in range(1, J + 1):
            parts.append(
                apply_polynomial_to_signal(high_fits[r - 1][j - 1], lap, chains[j - 1])
            )
    return CoefficientStack(
        data=np.concatenate(parts, axis=0),
        block_index=system.block_index(),
        num_nodes=lap.num_rows,
    )


def chebyshev_reconstruct(
    system: FrameletSystem, lap: SparseMatrix, c: CoefficientStack
) -> np.ndarray:
    """Adjoint transform applied matrix-free to a coefficient stack.

    Every block is a polynomial in the symmetric Laplacian and hence
    symmetric, so the adjoint applies the same factors in reverse level
    order: accumulate from the top level down, multiplying the running sum
    by the level's low-pass factor and adding the level's filtered high-pass
    coefficients. Mirrors ``chebyshev_decompose`` in cost.
    """
    if c.block_index != system.block_index() or c.num_nodes != lap.num_rows:
        raise ValueError("coefficient stack does not match the system")
    J, n = system.levels, system.num_high
    low_fits, high_fits = _factor_fits(system)

    def level_detail(j: int) -> np.ndarray:
        total = np.zeros((c.num_nodes, c.num_features))
        for r in range(1, n + 1):
            total += apply_polynomial_to_signal(
                high_fits[r - 1][j - 1], lap, c.block(r, j)
            )
        return total

    acc = apply_polynomial_to_signal(low_fits[J - 1], lap, c.low_pass())
    acc += level_detail(J)
    for j in range(J - 1, 0, -1):
        acc = apply_polynomial_to_signal(low_fits[j - 1], lap, acc)
        acc += level_detail(j)
    return acc


def block_energies(c: CoefficientStack) -> dict[tuple[int, int], float]:
    """Squared Frobenius norm of every coefficient block."""
    n = c.num_nodes
    return {
        key: float(np.sum(c.data[b * n : (b + 1) * n] ** 2))
        for b, key in enumerate(c.block_index)
    }
