"""Framelet filter banks and Chebyshev matrix polynomials.

A filter bank is a low-pass mask ``a`` together with high-pass masks
``b_1..b_n`` satisfying the partition of unity ``a(xi)^2 + sum_r b_r(xi)^2
= 1``, which makes the induced framelet system a tight frame. The Haar-type
bank shipped here has one high pass: ``a(xi) = cos(xi / 2)``,
``b(xi) = sin(xi / 2)``, with scaling functions known in closed form.

Filters are applied to a Laplacian either exactly through its
eigendecomposition or approximately as a Chebyshev polynomial in the matrix,
fitted on ``[0, lam_max]`` by Chebyshev-Gauss quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .sparse import SparseMatrix

PARTITION_TOL = 1e-12
DEFAULT_CHEBYSHEV_DEGREE = 16


@dataclass(frozen=True)
class SpectralFunction:
    """Named scalar function of frequency, vectorized over numpy arrays."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, xi) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(xi, dtype=np.float64)), dtype=np.float64)


@dataclass(frozen=True)
class FilterBank:
    """Low-pass mask plus one or more high-pass masks.

    ``scaling_low`` / ``scaling_high`` optionally carry the associated
    scaling functions (Fourier transforms of the father / mother wavelets)
    when closed forms are known; they are only needed for refinement checks.
    """

    low_pass: SpectralFunction
    high_passes: tuple[SpectralFunction, ...]
    scaling_low: SpectralFunction | None = None
    scaling_high: tuple[SpectralFunction, ...] | None = None

    def __post_init__(self):
        if not self.high_passes:
            raise ValueError("filter bank needs at least one high pass")
        if self.scaling_high is not None and len(self.scaling_high) != len(
            self.high_passes
        ):
            raise ValueError("one scaling function per high pass required")

    @property
    def num_high(self) -> int:
        return len(self.high_passes)

    def partition_residual(self, xi) -> np.ndarray:
        """``a^2 + sum_r b_r^2 - 1`` pointwise; zero for a tight bank."""
        total = self.low_pass(xi) ** 2
        for b in self.high_passes:
            total = total + b(xi) ** 2
        return total - 1.0


def haar_filter_bank() -> FilterBank:
    """Haar-type bank: one high pass, partition of unity exact by trig identity.

    Scaling functions (with removable singularities at zero):
    ``alpha(xi) = sin(xi/2) / (xi/2)`` and ``beta(xi) = sin^2(xi/4) / (xi/4)``.
    """
    low = SpectralFunction("haar_low", lambda xi: np.cos(xi / 2.0))
    high = SpectralFunction("haar_high_1", lambda xi: np.sin(xi / 2.0))
    # sin(x)/x via np.sinc keeps the limit at zero exact.
    alpha = SpectralFunction("haar_scaling_low", lambda xi: np.sinc(xi / (2.0 * np.pi)))
    beta = SpectralFunction(
        "haar_scaling_high_1",
        lambda xi: np.sin(xi / 4.0) * np.sinc(xi / (4.0 * np.pi)),
    )
    return FilterBank(
        low_pass=low,
        high_passes=(high,),
        scaling_low=alpha,
        scaling_high=(beta,),
    )


def verify_refinement(bank: FilterBank, xi_grid: np.ndarray) -> dict[str, float]:
    """Max residuals of the two-scale relations on a frequency grid.

    Checks ``alpha(2 xi) = a(xi) alpha(xi)`` and, per high pass,
    ``beta_r(2 xi) = b_r(xi) alpha(xi)``. Requires the bank to carry its
    scaling functions.
    """
    if bank.scaling_low is None or bank.scaling_high is None:
        raise ValueError("bank has no scaling functions to verify")
    xi = np.asarray(xi_grid, dtype=np.float64)
    alpha = bank.scaling_low
    out = {
        "low": float(
            np.max(np.abs(alpha(2.0 * xi) - bank.low_pass(xi) * alpha(xi)))
        )
    }
    for r, (b, beta) in enumerate(zip(bank.high_passes, bank.scaling_high), start=1):
        out[f"high_{r}"] = float(np.max(np.abs(beta(2.0 * xi) - b(xi) * alpha(xi))))
    return out


@dataclass(frozen=True)
class ChebyshevApprox:
    """Chebyshev expansion of a scalar function on ``[0, lam_max]``.

    ``coeffs[j]`` multiplies ``T_j`` of the affinely mapped argument
    ``x = 2 lam / lam_max - 1``; the constant term is stored already halved
    so evaluation is a plain Chebyshev series sum.
    """

    coeffs: np.ndarray
    lam_max: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        x = 2.0 * lam / self.lam_max - 1.0
        return np.asarray(npcheb.chebval(x, self.coeffs), dtype=np.float64)


def chebyshev_fit(
    fn: Callable[[np.ndarray], np.ndarray],
    degree: int = DEFAULT_CHEBYSHEV_DEGREE,
    lam_max: float = 2.0,
) -> ChebyshevApprox:
    """Fit ``fn`` on ``[0, lam_max]`` by Chebyshev-Gauss quadrature.

    Uses the ``degree + 1`` Chebyshev nodes ``x_k = cos(pi (k + 1/2) /
    (degree + 1))``; the quadrature is exact for polynomials of the fitted
    degree, so smooth filters converge geometrically.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if not (np.isfinite(lam_max) and lam_max > 0):
        raise ValueError("lam_max must be positive and finite")
    t = degree
    k = np.arange(t + 1, dtype=np.float64)
    x = np.cos(np.pi * (k + 0.5) / (t + 1))
    lam = (x + 1.0) * (lam_max / 2.0)
    fvals = np.asarray(fn(lam), dtype=np.float64)
    j = np.arange(t + 1, dtype=np.float64)
    # cos(j * arccos(x_k)) tabulated at the quadrature nodes
    cos_table = np.cos(np.outer(j, np.pi * (k + 0.5) / (t + 1)))
    coeffs = (2.0 / (t + 1)) * (cos_table @ fvals)
    coeffs[0] *= 0.5
    return ChebyshevApprox(coeffs=coeffs, lam_max=float(lam_max))


def apply_matrix_polynomial(approx: ChebyshevApprox, mat: SparseMatrix) -> SparseMatrix:
    """Materialize ``p(M)`` for a Chebyshev expansion ``p`` as a sparse matrix.

    Runs the three-term recurrence ``T_{j+1} = 2 M~ T_j - T_{j-1}`` on the
    rescaled matrix ``M~ = (2 / lam_max) M - I`` and accumulates
    ``sum_j coeffs[j] T_j``. The result is an explicit sparse matrix whose
    sparsity grows with the polynomial degree.
    """
    n = mat.num_rows
    if mat.num_cols != n:
        raise ValueError("matrix polynomial needs a square matrix")
    eye = SparseMatrix.identity(n)
    scaled = mat.scale(2.0 / approx.lam_max).add(eye.scale(-1.0))
    c = approx.coeffs
    acc = eye.scale(float(c[0]))
    if len(c) == 1:
        return acc
    t_prev, t_cur = eye, scaled
    acc = acc.add(t_cur.scale(float(c[1])))
    for j in range(2, len(c)):
        t_next = (scaled @ t_cur).scale(2.0).add(t_prev.scale(-1.0))
        acc = acc.add(t_next.scale(float(c[j])))
        t_prev, t_cur = t_cur, t_next
    return acc


def apply_polynomial_to_signal(
    approx: ChebyshevApprox, mat: SparseMatrix, X: np.ndarray
) -> np.ndarray:
    """Evaluate ``p(M) @ X`` matrix-free by the Chebyshev recurrence.

    Runs the same three-term recurrence as ``apply_matrix_polynomial`` but on
    the signal columns, so the cost is ``degree`` sparse-dense products and
    the polynomial is never materialized. Equivalent to materializing up to
    floating-point associativity.
    """
    n = mat.num_rows
    if mat.num_cols != n:
        raise ValueError("matrix polynomial needs a square matrix")
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != n:
        raise ValueError("signal row count must match the matrix")
    c = approx.coeffs
    alpha = 2.0 / approx.lam_max

    def scaled_mul(v: np.ndarray) -> np.ndarray:
        return alpha * (mat @ v) - v

    acc = float(c[0]) * X
    if len(c) == 1:
        return acc
    t_prev, t_cur = X, scaled_mul(X)
    acc = acc + float(c[1]) * t_cur
    for j in range(2, len(c)):
        t_next = 2.0 * scaled_mul(t_cur) - t_prev
        acc = acc + float(c[j]) * t_next
        t_prev, t_cur = t_cur, t_next
    return acc
