"""Numerical kernels shared by the fitting modules.

Thin SVD, uniform B-spline bases with difference-penalized least squares,
and the standard normal quantile. Everything here is a pure function of
its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

__all__ = [
    "SvdResult",
    "BsplineBasis",
    "svd_thin",
    "bspline_design",
    "difference_matrix",
    "solve_penalized_ls",
    "normal_quantile",
    "normal_cdf",
]


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U @ diag(s) @ V.T`` with descending singular values."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd_thin(A) -> SvdResult:
    """Thin singular value decomposition of a real matrix.

    Backed by LAPACK through numpy; wrapped so callers get input
    validation and a stable result type. Singular values come back
    in descending order, vectors column-orthonormal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise ValueError("svd_thin: matrix must be at least 1x1")
    if not np.all(np.isfinite(A)):
        raise ValueError("svd_thin: matrix contains non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SvdResult(singular_values=s, left_vectors=U, right_vectors=Vt.T)


@dataclass(frozen=True)
class BsplineBasis:
    """B-spline basis over an ascending knot vector.

    The usable domain is ``[knots[degree], knots[num_basis]]``: there the
    basis functions are nonnegative and sum to one. A basis built with
    :meth:`uniform` has equally spaced knots extending ``degree`` steps
    past each end of the domain, so coefficient sequences that are affine
    in the index reproduce affine functions exactly (which keeps them in
    the null space of a second-order difference penalty).
    """

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or len(knots) < self.degree + 2:
            raise ValueError("knot vector too short for the requested degree")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be ascending")
        object.__setattr__(self, "knots", knots)

    @property
    def num_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.degree]), float(self.knots[self.num_basis])

    @classmethod
    def uniform(cls, lo: float, hi: float, num_basis: int, degree: int = 3) -> "BsplineBasis":
        if num_basis <= degree:
            raise ValueError("num_basis must exceed the spline degree")
        if not hi > lo:
            raise ValueError("domain must have positive length")
        step = (hi - lo) / (num_basis - degree)
        knots = lo + step * np.arange(-degree, num_basis + 1)
        return cls(knots=knots, degree=degree)


def _find_span(knots: np.ndarray, degree: int, num_basis: int, x: float) -> int:
    # Spans are half-open [t_i, t_{i+1}); the right end of the domain is
    # folded into the last span so endpoint evaluation works.
    if x >= knots[num_basis]:
        return num_basis - 1
    return int(np.searchsorted(knots, x, side="right") - 1)


def _basis_at(knots: np.ndarray, degree: int, span: int, x: float) -> np.ndarray:
    """Values of the ``degree + 1`` basis functions active on ``span``.

    Cox-de Boor recursion in the triangular form that only touches
    nonzero entries.
    """
    vals = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    vals[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            tmp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        vals[j] = saved
    return vals


def bspline_design(basis: BsplineBasis, xs) -> np.ndarray:
    """Design matrix with row i holding all basis values at ``xs[i]``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    lo, hi = basis.domain
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    if np.any(xs < lo - tol) or np.any(xs > hi + tol):
        bad = xs[(xs < lo - tol) | (xs > hi + tol)][0]
        raise ValueError(f"evaluation point {bad!r} outside basis domain [{lo}, {hi}]")
    xs = np.clip(xs, lo, hi)
    design = np.zeros((len(xs), basis.num_basis))
    for i, x in enumerate(xs):
        span = _find_span(basis.knots, basis.degree, basis.num_basis, x)
        design[i, span - basis.degree : span + 1] = _basis_at(
            basis.knots, basis.degree, span, x
        )
    return design


def difference_matrix(n: int, order: int) -> np.ndarray:
    """Order-d finite difference operator as an ``(n - d) x n`` matrix."""
    if order < 1 or order >= n:
        raise ValueError(f"difference order {order} invalid for {n} coefficients")
    return np.diff(np.eye(n), n=order, axis=0)


def solve_penalized_ls(B, y, w=None, lam: float = 0.0, d: int = 2) -> np.ndarray:
    """Minimize ``(y - B theta)' W (y - B theta) + lam * ||D_d theta||^2``.

    Solved through a dense Cholesky factorization of the normal equations;
    ``D_d`` is the order-d difference operator, so for d=2 the penalty sums
    squared second differences of adjacent coefficients.
    """
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    if B.ndim != 2 or B.shape[0] != len(y):
        raise ValueError("design matrix rows must match observation count")
    n, k = B.shape
    if w is None:
        w = np.ones(n)
    else:
        w = np.asarray(w, dtype=float)
        if len(w) != n:
            raise ValueError("weight vector length must match observation count")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    if d not in (1, 2, 3):
        raise ValueError("difference order must be 1, 2 or 3")
    if lam < 0:
        raise ValueError("penalty weight must be nonnegative")
    BtW = B.T * w
    M = BtW @ B
    if lam > 0:
        D = difference_matrix(k, d)
        M = M + lam * (D.T @ D)
    try:
        factor = cho_factor(M, lower=True)
    except LinAlgError as exc:
        raise ValueError(
            "singular penalized system; increase lambda or use fewer basis functions"
        ) from exc
    return cho_solve(factor, BtW @ y)


# Acklam's rational approximation to the inverse normal CDF, refined by one
# Newton step on Phi. Max error of the raw approximation is ~1.15e-9; the
# refinement takes it to machine precision.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Value z with ``Phi(z) = p`` for p in the open unit interval."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly between 0 and 1, got {p!r}")
    if p > 0.5:
        # 1 - p is exact here (Sterbenz), and the lower-tail path keeps
        # full precision where Phi(z) - p would cancel
        return -normal_quantile(1.0 - p)
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        z = (
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5])
            * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
        )
    # One Newton step on Phi(z) - p.
    err = normal_cdf(z) - p
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if pdf > 0.0:
        z -= err / pdf
    return z
