"""Penalized-spline smoothing of log mortality curves.

Each year's curve ln m_t(x) is smoothed independently with a cubic
B-spline basis and a squared difference penalty on the coefficients,
the penalty weight chosen by generalized cross-validation. Above a
configurable age the smoothed curve is projected onto the increasing
cone by pooling adjacent violators, reflecting that adult mortality
rises with age while infant and accident-hump features below it do not.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .numerics import BsplineBasis, bspline_design, difference_matrix, solve_penalized_ls

__all__ = [
    "SmoothConfig",
    "SmoothedCurve",
    "SmoothedSurface",
    "choose_lambda",
    "smooth_curve",
    "smooth_surface",
    "enforce_monotone",
]

_DEFAULT_LAMBDA_GRID = np.logspace(-4.0, 6.0, 25)


@dataclass(frozen=True)
class SmoothConfig:
    """Knobs for the per-curve smoother.

    ``num_basis=None`` resolves to roughly one basis function per 2.5
    observations, capped at 35; ``lam="auto"`` picks the penalty weight by
    GCV over ``lambda_grid``. ``monotone_from=None`` disables the
    monotone projection entirely.
    """

    num_basis: Optional[int] = None
    degree: int = 3
    difference_order: int = 2
    lam: "float | str" = "auto"
    lambda_grid: np.ndarray = field(default_factory=lambda: _DEFAULT_LAMBDA_GRID.copy())
    monotone_from: Optional[int] = 65
    weights: Optional[np.ndarray] = None

    def resolved_num_basis(self, n_points: int) -> int:
        if self.num_basis is not None:
            k = int(self.num_basis)
        else:
            k = min(int(n_points / 2.5), 35)
        k = max(k, self.degree + 1, self.difference_order + 1)
        if k > n_points:
            raise ValueError(
                f"num_basis {k} exceeds the {n_points} observations available"
            )
        return k


@dataclass(frozen=True)
class SmoothedCurve:
    xs: np.ndarray
    values: np.ndarray
    coefficients: np.ndarray
    basis: BsplineBasis
    lam: float
    gcv: float


@dataclass(frozen=True)
class SmoothedSurface:
    """Smoothed log rates plus the across-year noise variance at each age."""

    ages: np.ndarray
    years: np.ndarray
    log_rates: np.ndarray
    sigma2: np.ndarray  # observational variance by age
    lambdas: np.ndarray  # chosen penalty per year


def _design_and_penalty(xs: np.ndarray, config: SmoothConfig):
    k = config.resolved_num_basis(len(xs))
    basis = BsplineBasis.uniform(float(xs[0]), float(xs[-1]), k, degree=config.degree)
    B = bspline_design(basis, xs)
    D = difference_matrix(k, config.difference_order)
    return basis, B, D


def _gcv_score(B: np.ndarray, y: np.ndarray, w: np.ndarray, P: np.ndarray,
               lam: float) -> tuple[float, np.ndarray]:
    """n * RSS / (n - tr(H))^2 for the penalized hat matrix H."""
    n = len(y)
    BtW = B.T * w
    A = BtW @ B + lam * P
    theta = np.linalg.solve(A, BtW @ y)
    fitted = B @ theta
    rss = float(np.sum(w * (y - fitted) ** 2))
    # tr(H) = tr(B A^{-1} B' W) = sum over entries of (A^{-1} B'W) * B'
    trace = float(np.sum(np.linalg.solve(A, BtW) * B.T))
    denom = n - trace
    if denom <= 0:
        return np.inf, theta
    return n * rss / denom**2, theta


def choose_lambda(
    xs: np.ndarray,
    ys: np.ndarray,
    config: SmoothConfig = SmoothConfig(),
) -> tuple[float, float]:
    """Return (lambda, gcv) minimizing GCV over the configured grid.

    Ties and plateaus resolve to the first grid point attaining the
    minimum, so the choice is deterministic.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    _, B, D = _design_and_penalty(xs, config)
    P = D.T @ D
    w = _resolve_weights(config.weights, len(ys))
    best_lam, best_score = None, np.inf
    for lam in np.asarray(config.lambda_grid, dtype=float):
        score, _ = _gcv_score(B, ys, w, P, float(lam))
        if score < best_score:
            best_lam, best_score = float(lam), score
    if best_lam is None:
        raise ValueError("GCV failed at every grid point; basis too rich for the data")
    return best_lam, best_score


def _resolve_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights shape {w.shape} does not match {n} observations")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    return w


def smooth_curve(
    ys: np.ndarray,
    config: SmoothConfig = SmoothConfig(),
    ages: Optional[np.ndarray] = None,
) -> SmoothedCurve:
    """Smooth one curve of log rates observed at ``ages`` (default 0..n-1)."""
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 1 or len(ys) < 4:
        raise ValueError("need a 1-d curve with at least 4 points")
    if not np.all(np.isfinite(ys)):
        raise ValueError("curve contains non-finite values")
    xs = np.arange(len(ys), dtype=float) if ages is None else np.asarray(ages, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("ages and values must have the same length")

    if config.lam == "auto":
        lam, gcv = choose_lambda(xs, ys, config)
    else:
        lam = float(config.lam)
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        gcv = np.nan
    basis, B, D = _design_and_penalty(xs, config)
    w = _resolve_weights(config.weights, len(ys))
    theta = solve_penalized_ls(B, ys, w=w, lam=lam, d=config.difference_order)
    values = B @ theta
    if config.monotone_from is not None:
        values = enforce_monotone(values, config.monotone_from, ages=xs)
    return SmoothedCurve(xs=xs, values=values, coefficients=theta,
                         basis=basis, lam=lam, gcv=gcv)


def smooth_surface(
    log_rates: np.ndarray,
    ages: np.ndarray,
    years: np.ndarray,
    config: SmoothConfig = SmoothConfig(),
) -> SmoothedSurface:
    """Smooth each year's log-rate curve independently.

    ``sigma2[i]`` is the sample variance across years of the smoothing
    residual at age i, the estimate of observational noise used in the
    forecast variance; zero when there are fewer than two years.
    """
    log_rates = np.asarray(log_rates, dtype=float)
    ages = np.asarray(ages, dtype=float)
    years = np.asarray(years)
    if log_rates.shape != (len(ages), len(years)):
        raise ValueError(
            f"log_rates shape {log_rates.shape} does not match "
            f"{len(ages)} ages x {len(years)} years"
        )
    smoothed = np.empty_like(log_rates)
    lambdas = np.empty(len(years))
    for j in range(len(years)):
        curve = smooth_curve(log_rates[:, j], config, ages=ages)
        smoothed[:, j] = curve.values
        lambdas[j] = curve.lam
    resid = log_rates - smoothed
    if len(years) >= 2:
        sigma2 = resid.var(axis=1, ddof=1)
    else:
        sigma2 = np.zeros(len(ages))
    return SmoothedSurface(ages=ages.astype(int), years=years,
                           log_rates=smoothed, sigma2=sigma2, lambdas=lambdas)


def enforce_monotone(
    values: np.ndarray,
    from_age: "int | float",
    ages: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Project the tail of ``values`` at ages >= from_age onto the
    nondecreasing cone (least-squares, via pooling adjacent violators).

    Entries below ``from_age`` pass through untouched. If no age reaches
    the threshold the input is returned as is.
    """
    values = np.asarray(values, dtype=float)
    xs = np.arange(len(values), dtype=float) if ages is None else np.asarray(ages, dtype=float)
    if xs.shape != values.shape:
        raise ValueError("ages and values must have the same length")
    start = int(np.searchsorted(xs, float(from_age), side="left"))
    if start >= len(values) - 1:
        return values.copy()
    out = values.copy()
    out[start:] = _pava(values[start:])
    return out


def _pava(y: np.ndarray) -> np.ndarray:
    """Nondecreasing least-squares fit by pooling adjacent violators.

    Maintains a stack of blocks (mean, weight); a new point is pushed as
    its own block, then blocks merge while the ordering is violated.
    """
    means: list[float] = []
    weights: list[float] = []
    for value in y:
        cur_mean, cur_w = float(value), 1.0
        while means and means[-1] > cur_mean:
            prev_mean, prev_w = means.pop(), weights.pop()
            cur_mean = (prev_mean * prev_w + cur_mean * cur_w) / (prev_w + cur_w)
            cur_w += prev_w
        means.append(cur_mean)
        weights.append(cur_w)
    out = np.empty_like(y)
    pos = 0
    for mean, w in zip(means, weights):
        n = int(round(w))
        out[pos:pos + n] = mean
        pos += n
    return out
