"""Compressed sparse row matrices used throughout the transform pipeline.

``SparseMatrix`` is a thin immutable wrapper around ``scipy.sparse.csr_array``
that pins the storage contract: canonical CSR layout (strictly increasing
column indices per row, nondecreasing row offsets) and finite values only.
All Laplacians and framelet transform blocks travel through this type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


def _canonical(mat: sp.csr_array) -> sp.csr_array:
    mat = mat.astype(np.float64, copy=False)
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix with validated layout.

    Use the ``from_*`` constructors; the raw constructor expects an already
    canonical ``csr_array``.
    """

    csr: sp.csr_array = field(repr=False)

    def __post_init__(self):
        if not sp.issparse(self.csr) or self.csr.format != "csr":
            raise TypeError("SparseMatrix expects a scipy CSR array")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_scipy(mat) -> "SparseMatrix":
        return SparseMatrix(_canonical(sp.csr_array(mat)))

    @staticmethod
    def from_dense(arr: np.ndarray) -> "SparseMatrix":
        return SparseMatrix.from_scipy(np.asarray(arr, dtype=np.float64))

    @staticmethod
    def from_coo(
        rows: Iterable[int],
        cols: Iterable[int],
        vals: Iterable[float],
        shape: tuple[int, int],
    ) -> "SparseMatrix":
        coo = sp.coo_array(
            (np.asarray(list(vals), dtype=np.float64), (list(rows), list(cols))),
            shape=shape,
        )
        return SparseMatrix(_canonical(coo.tocsr()))

    @staticmethod
    def identity(n: int) -> "SparseMatrix":
        return SparseMatrix(_canonical(sp.eye_array(n, format="csr")))

    # -- layout ------------------------------------------------------------

    @property
    def num_rows(self) -> int:
        return self.csr.shape[0]

    @property
    def num_cols(self) -> int:
        return self.csr.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.csr.shape

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def density(self) -> float:
        total = self.num_rows * self.num_cols
        return self.nnz / total if total else 0.0

    def validate(self) -> None:
        """Raise ``ValueError`` if the CSR layout contract is broken."""
        indptr, indices, data = self.csr.indptr, self.csr.indices, self.csr.data
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        for r in range(self.num_rows):
            row_cols = indices[indptr[r] : indptr[r + 1]]
            if row_cols.size and np.any(np.diff(row_cols) <= 0):
                raise ValueError(f"row {r}: column indices not strictly increasing")
        if data.size and not np.all(np.isfinite(data)):
            raise ValueError("stored values must be finite")

    # -- algebra -----------------------------------------------------------

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return SparseMatrix(_canonical(self.csr @ other.csr))
        out = self.csr @ np.asarray(other, dtype=np.float64)
        return np.asarray(out)

    def rmatmul_dense(self, left: np.ndarray) -> np.ndarray:
        """Dense @ sparse, returned dense."""
        return np.asarray(np.asarray(left, dtype=np.float64) @ self.csr)

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(_canonical(self.csr.T.tocsr()))

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def scale(self, alpha: float) -> "SparseMatrix":
        return SparseMatrix(_canonical(sp.csr_array(self.csr * float(alpha))))

    def add(self, other: "SparseMatrix") -> "SparseMatrix":
        return SparseMatrix(_canonical(sp.csr_array(self.csr + other.csr)))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def max_abs_asymmetry(self) -> float:
        diff = self.csr - self.csr.T
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def gershgorin_bound(self) -> float:
        """Upper bound on the spectral radius via Gershgorin discs."""
        if self.num_rows == 0:
            return 0.0
        diag = self.csr.diagonal()
        abs_row_sums = np.asarray(abs(self.csr).sum(axis=1)).ravel()
        return float(np.max(diag + (abs_row_sums - np.abs(diag))))


def vstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    """Vertically concatenate blocks in order."""
    return SparseMatrix(_canonical(sp.vstack([b.csr for b in blocks], format="csr")))
