"""Functional demographic model: smooth curves, decompose, forecast.

The log-rate surface is smoothed year by year, centered on a mean curve
mu(x), and decomposed by SVD into K orthonormal age patterns phi_k with
coefficient time series beta_{t,k}. Forecasting the coefficients and
recombining gives point forecasts; the forecast variance adds four
pieces: mean-curve uncertainty, coefficient forecast variance through
phi_k^2, leftover model error v(x), and observational noise sigma2(x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .numerics import normal_quantile, svd_thin
from .smoothing import SmoothConfig, smooth_surface
from .tsforecast import TsSpec, fit_ts, forecast_ts, simulate_path

__all__ = [
    "FdmModel",
    "ForecastSurface",
    "fit_fdm",
    "forecast_fdm",
    "bootstrap_intervals",
]


@dataclass(frozen=True)
class ForecastSurface:
    """Log-rate forecasts on an age grid for horizons 1..h.

    ``years`` carries the calendar labels of the horizons. Bounds are at
    the stated two-sided ``level`` (a percentage).
    """

    ages: np.ndarray
    years: np.ndarray
    point: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self):
        shape = (len(self.ages), len(self.years))
        for name in ("point", "variance", "lower", "upper"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} shape {arr.shape} does not match {shape}")
            object.__setattr__(self, name, arr)
        if not 50.0 < self.level < 99.9:
            raise ValueError(f"level must be in (50, 99.9), got {self.level}")
        if np.any(self.variance < -1e-10):
            raise ValueError("negative forecast variance")
        object.__setattr__(self, "variance", np.maximum(self.variance, 0.0))
        if np.any(self.lower > self.point + 1e-9) or np.any(self.upper < self.point - 1e-9):
            raise ValueError("interval bounds must bracket the point forecast")

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(1, len(self.years) + 1)


def interval_bounds(point: np.ndarray, variance: np.ndarray,
                    level: float) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric normal-theory bounds at a two-sided percentage level."""
    z = normal_quantile(0.5 + level / 200.0)
    half = z * np.sqrt(np.maximum(variance, 0.0))
    return point - half, point + half


@dataclass(frozen=True)
class FdmModel:
    """Fitted decomposition. ``phi`` is ages-by-K with orthonormal
    columns; ``beta_series`` is years-by-K. ``model_errors`` is what the
    K components leave unexplained of the smoothed surface, and
    ``smoothed_log`` the smoothed surface itself."""

    ages: np.ndarray
    years: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    beta_series: np.ndarray
    v: np.ndarray
    sigma2: np.ndarray
    explained_shares: np.ndarray
    K: int
    model_errors: np.ndarray
    smoothed_log: np.ndarray

    @property
    def sigma2_mu(self) -> np.ndarray:
        """Variance of the estimated mean curve: v(x) over the number of
        years averaged, the variance of a mean of n curve errors."""
        return self.v / len(self.years)

    def reconstruct(self) -> np.ndarray:
        return self.mu[:, None] + self.phi @ self.beta_series.T + self.model_errors


def fit_fdm(
    surface,
    smooth_config: SmoothConfig = SmoothConfig(),
    K: int = 4,
) -> FdmModel:
    """Smooth the surface and extract the top K components by SVD.

    Sign convention: each phi_k is flipped so it sums positive (falling
    back to a positive dominant element when the sum is near zero), so
    repeated fits agree and the first component reads as the common
    mortality-decline shape.
    """
    K = int(K)
    n_ages, n_years = surface.n_ages, surface.n_years
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > min(n_ages, n_years) - 1:
        raise ValueError(
            f"K={K} too large for a {n_ages} x {n_years} surface; "
            f"maximum is {min(n_ages, n_years) - 1}"
        )
    smoothed = smooth_surface(surface.log_rates, surface.ages, surface.years,
                              smooth_config)
    F = smoothed.log_rates
    mu = F.mean(axis=1)
    C = F - mu[:, None]
    svd = svd_thin(C)
    s = svd.singular_values
    total = float(np.sum(s**2))

    phi = np.empty((n_ages, K))
    beta = np.empty((n_years, K))
    for k in range(K):
        u_k = svd.left_vectors[:, k]
        b_k = s[k] * svd.right_vectors[:, k]
        column_sum = float(u_k.sum())
        if abs(column_sum) > 1e-10:
            flip = column_sum < 0
        else:
            flip = u_k[int(np.argmax(np.abs(u_k)))] < 0
        if flip:
            u_k, b_k = -u_k, -b_k
        phi[:, k] = u_k
        beta[:, k] = b_k

    # absorb any float-level residual mean of each beta into mu so the
    # centering constraint holds tightly
    beta_means = beta.mean(axis=0)
    mu = mu + phi @ beta_means
    beta = beta - beta_means

    if s[0] <= 1e-12 * max(1.0, float(np.linalg.norm(F))):
        # no year-to-year variation beyond float noise: report the whole
        # (empty) variation as the first component instead of dividing
        # noise by noise
        beta = np.zeros_like(beta)
        shares = np.zeros(K)
        shares[0] = 1.0
    else:
        shares = s[:K] ** 2 / total

    fitted = mu[:, None] + phi @ beta.T
    model_errors = F - fitted
    v = (model_errors**2).mean(axis=1)

    return FdmModel(
        ages=surface.ages,
        years=surface.years,
        mu=mu,
        phi=phi,
        beta_series=beta,
        v=v,
        sigma2=smoothed.sigma2,
        explained_shares=shares,
        K=K,
        model_errors=model_errors,
        smoothed_log=F,
    )


def _coefficient_fits(model: FdmModel, ts_spec: TsSpec):
    return [fit_ts(model.beta_series[:, k], ts_spec) for k in range(model.K)]


def forecast_fdm(
    model: FdmModel,
    ts_spec: TsSpec = TsSpec(),
    horizon: int = 20,
    level: float = 95.0,
) -> ForecastSurface:
    """Forecast each coefficient series, recombine, and attach
    normal-theory intervals from the summed variance."""
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    beta_points = np.empty((model.K, horizon))
    beta_vars = np.empty((model.K, horizon))
    for k, fit in enumerate(_coefficient_fits(model, ts_spec)):
        beta_points[k], beta_vars[k] = forecast_ts(fit, horizon)
    point = model.mu[:, None] + model.phi @ beta_points
    variance = (
        model.sigma2_mu[:, None]
        + (model.phi**2) @ beta_vars
        + model.v[:, None]
        + model.sigma2[:, None]
    )
    lower, upper = interval_bounds(point, variance, level)
    years = model.years[-1] + np.arange(1, horizon + 1)
    return ForecastSurface(ages=model.ages, years=years, point=point,
                           variance=variance, lower=lower, upper=upper,
                           level=level)


def bootstrap_intervals(
    model: FdmModel,
    ts_spec: TsSpec = TsSpec(),
    horizon: int = 20,
    level: float = 95.0,
    B: int = 1000,
    seed: int = 0,
) -> ForecastSurface:
    """Empirical intervals from B simulated futures.

    Each replicate resamples coefficient-model innovation residuals to
    regenerate the beta paths, adds a whole resampled model-error curve
    per horizon (keeping the across-age error correlation), and Gaussian
    observational noise. Replicates draw from substreams spawned from the
    seed, so results are reproducible and order-independent.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if B < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {B}")
    analytic = forecast_fdm(model, ts_spec, horizon, level)
    fits = _coefficient_fits(model, ts_spec)
    n_ages = len(model.ages)
    n_years = len(model.years)
    sigma = np.sqrt(np.maximum(model.sigma2, 0.0))

    streams = np.random.SeedSequence(seed).spawn(B)
    samples = np.empty((B, n_ages, horizon))
    for b in range(B):
        rng = np.random.default_rng(streams[b])
        curves = np.empty((model.K, horizon))
        for k, fit in enumerate(fits):
            innov = rng.choice(fit.residuals, size=horizon, replace=True)
            curves[k] = simulate_path(fit, horizon, innov)
        replicate = model.mu[:, None] + model.phi @ curves
        error_cols = rng.integers(0, n_years, size=horizon)
        replicate = replicate + model.model_errors[:, error_cols]
        replicate = replicate + rng.standard_normal((n_ages, horizon)) * sigma[:, None]
        samples[b] = replicate

    alpha = 1.0 - level / 100.0
    lower = np.quantile(samples, alpha / 2.0, axis=0)
    upper = np.quantile(samples, 1.0 - alpha / 2.0, axis=0)
    # the analytic point forecast is the reported center; widen the
    # empirical bounds minimally if sampling noise left it outside
    lower = np.minimum(lower, analytic.point)
    upper = np.maximum(upper, analytic.point)
    return ForecastSurface(ages=model.ages, years=analytic.years,
                           point=analytic.point, variance=analytic.variance,
                           lower=lower, upper=upper, level=level)
