"""Functional decomposition fit, forecast variance, and bootstrap.

Recovery fixtures keep every year's curve affine in age so the
penalized smoother is an exact pass-through and the component
extraction sees the constructed surface unchanged.
"""

import dataclasses

import numpy as np
import pytest

from mortforecast.fdm import bootstrap_intervals, fit_fdm, forecast_fdm
from mortforecast.smoothing import SmoothConfig
from mortforecast.tsforecast import TsSpec, fit_ts, forecast_ts

from conftest import make_surface

NO_MONOTONE = SmoothConfig(monotone_from=None)


def _two_component_surface(n_ages=20, n_years=12):
    """mu affine, phi1 constant, phi2 linear, betas centered and
    mutually orthogonal. Exact SVD by construction."""
    x = np.arange(n_ages, dtype=float)
    t = np.arange(n_years, dtype=float)
    mu = -5.0 + 0.02 * x
    phi1 = np.full(n_ages, 1.0 / np.sqrt(n_ages))
    ctr = x - x.mean()
    phi2 = ctr / np.linalg.norm(ctr)
    b1 = 3.0 * (t - t.mean())
    q = (t - t.mean()) ** 2
    q = q - q.mean()  # centered; orthogonal to b1 because t is symmetric
    b2 = 0.3 * q
    log_m = mu[:, None] + np.outer(phi1, b1) + np.outer(phi2, b2)
    surface = make_surface(log_m)
    return surface, mu, (phi1, phi2), (b1, b2)


def _assert_same_up_to_sign(got_phi, got_beta, want_phi, want_beta, atol):
    direct = max(np.abs(got_phi - want_phi).max(), np.abs(got_beta - want_beta).max())
    flipped = max(np.abs(got_phi + want_phi).max(), np.abs(got_beta + want_beta).max())
    assert min(direct, flipped) < atol


def test_two_component_recovery():
    surface, mu, (phi1, phi2), (b1, b2) = _two_component_surface()
    model = fit_fdm(surface, NO_MONOTONE, K=2)
    np.testing.assert_allclose(model.mu, mu, atol=1e-8)
    _assert_same_up_to_sign(model.phi[:, 0], model.beta_series[:, 0], phi1, b1, 1e-8)
    _assert_same_up_to_sign(model.phi[:, 1], model.beta_series[:, 1], phi2, b2, 1e-8)
    np.testing.assert_allclose(model.model_errors, 0.0, atol=1e-8)

    want_shares = np.array([b1 @ b1, b2 @ b2])
    want_shares = want_shares / want_shares.sum()
    np.testing.assert_allclose(model.explained_shares, want_shares, atol=1e-8)
    assert model.explained_shares[0] > model.explained_shares[1]


def test_first_component_sums_positive():
    surface, _, _, _ = _two_component_surface()
    model = fit_fdm(surface, NO_MONOTONE, K=2)
    assert model.phi[:, 0].sum() > 0.0


def test_phi_orthonormal():
    rng = np.random.default_rng(42)
    log_m = rng.standard_normal((15, 20)) - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=3)
    gram = model.phi.T @ model.phi
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-10)


def test_beta_columns_centered():
    rng = np.random.default_rng(8)
    log_m = rng.standard_normal((12, 18)) - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=4)
    assert np.abs(model.beta_series.mean(axis=0)).max() < 1e-10


def test_reconstruction_identity():
    rng = np.random.default_rng(3)
    log_m = rng.standard_normal((10, 14)) - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    np.testing.assert_allclose(model.reconstruct(), model.smoothed_log, atol=1e-12)
    by_hand = model.mu[:, None] + model.phi @ model.beta_series.T + model.model_errors
    np.testing.assert_allclose(by_hand, model.smoothed_log, atol=1e-12)


def test_v_is_mean_squared_model_error():
    rng = np.random.default_rng(5)
    log_m = rng.standard_normal((9, 11)) - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=1)
    np.testing.assert_allclose(model.v, (model.model_errors**2).mean(axis=1),
                               atol=1e-14)
    np.testing.assert_allclose(model.sigma2_mu, model.v / 11, atol=1e-14)


def test_leading_share_stable_in_K():
    rng = np.random.default_rng(17)
    log_m = rng.standard_normal((10, 12)) - 4.0
    surface = make_surface(log_m)
    one = fit_fdm(surface, NO_MONOTONE, K=1)
    three = fit_fdm(surface, NO_MONOTONE, K=3)
    assert one.explained_shares[0] == pytest.approx(three.explained_shares[0],
                                                    abs=1e-12)


def test_K_bounds():
    surface = make_surface(np.full((6, 8), -3.0))
    with pytest.raises(ValueError, match="K must be at least 1"):
        fit_fdm(surface, NO_MONOTONE, K=0)
    with pytest.raises(ValueError, match="too large"):
        fit_fdm(surface, NO_MONOTONE, K=6)


def test_constant_years_degenerate():
    x = np.arange(8, dtype=float)
    log_m = np.tile((-4.0 - 0.05 * x)[:, None], (1, 9))
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    np.testing.assert_array_equal(model.beta_series, 0.0)
    np.testing.assert_allclose(model.explained_shares, [1.0, 0.0], atol=1e-12)
    fc = forecast_fdm(model, TsSpec(), horizon=3)
    np.testing.assert_allclose(fc.point, np.tile(model.mu[:, None], (1, 3)),
                               atol=1e-10)


# ---------------------------------------------------------------------------
# forecast variance


def test_forecast_variance_term_sum():
    rng = np.random.default_rng(23)
    log_m = rng.standard_normal((6, 8)) * 0.3 - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    spec = TsSpec()
    horizon = 4
    fc = forecast_fdm(model, spec, horizon=horizon)

    # reassemble the four variance pieces one by one
    coeff_var = np.zeros((len(model.ages), horizon))
    point = np.tile(model.mu[:, None], (1, horizon))
    for k in range(model.K):
        fit = fit_ts(model.beta_series[:, k], spec)
        mean_k, var_k = forecast_ts(fit, horizon)
        coeff_var += np.outer(model.phi[:, k] ** 2, var_k)
        point += np.outer(model.phi[:, k], mean_k)
    expected = (model.v[:, None] / len(model.years)  # mean-curve estimate
                + coeff_var                          # coefficient forecasts
                + model.v[:, None]                   # model error
                + model.sigma2[:, None])             # observational noise
    np.testing.assert_allclose(fc.variance, expected, atol=1e-12)
    np.testing.assert_allclose(fc.point, point, atol=1e-12)


def test_forecast_variance_monotone_in_horizon():
    rng = np.random.default_rng(29)
    log_m = rng.standard_normal((7, 15)) * 0.2 - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    fc = forecast_fdm(model, TsSpec(), horizon=8)
    assert np.all(np.diff(fc.variance, axis=1) >= -1e-15)


def test_forecast_bounds_and_years():
    rng = np.random.default_rng(31)
    log_m = rng.standard_normal((6, 10)) * 0.2 - 4.0
    model = fit_fdm(make_surface(log_m, first_year=1980), NO_MONOTONE, K=1)
    fc = forecast_fdm(model, TsSpec(), horizon=3, level=80.0)
    assert list(fc.years) == [1990, 1991, 1992]
    assert np.all(fc.lower < fc.point) and np.all(fc.point < fc.upper)
    wide = forecast_fdm(model, TsSpec(), horizon=3, level=99.0)
    assert np.all(wide.upper - wide.lower > fc.upper - fc.lower)


def test_forecast_invariant_under_component_sign_flip():
    rng = np.random.default_rng(37)
    log_m = rng.standard_normal((8, 12)) * 0.3 - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    phi = model.phi.copy()
    beta = model.beta_series.copy()
    phi[:, 1] *= -1.0
    beta[:, 1] *= -1.0
    flipped = dataclasses.replace(model, phi=phi, beta_series=beta)
    a = forecast_fdm(model, TsSpec(), horizon=5)
    b = forecast_fdm(flipped, TsSpec(), horizon=5)
    np.testing.assert_allclose(a.point, b.point, atol=1e-12)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-12)


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_same_seed_is_identical():
    rng = np.random.default_rng(41)
    log_m = rng.standard_normal((6, 10)) * 0.3 - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=1)
    a = bootstrap_intervals(model, TsSpec(), horizon=4, B=120, seed=9)
    b = bootstrap_intervals(model, TsSpec(), horizon=4, B=120, seed=9)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)
    c = bootstrap_intervals(model, TsSpec(), horizon=4, B=120, seed=10)
    assert np.any(c.lower != a.lower)


def test_bootstrap_noiseless_collapses():
    # exact one-component surface with a linear coefficient path: no
    # innovation, model, or observation noise anywhere, so every
    # replicate equals the point forecast
    n_ages, n_years = 10, 12
    x = np.arange(n_ages, dtype=float)
    t = np.arange(n_years, dtype=float)
    mu = -4.5 + 0.01 * x
    phi1 = np.full(n_ages, 1.0 / np.sqrt(n_ages))
    b1 = 2.0 * (t - t.mean())
    log_m = mu[:, None] + np.outer(phi1, b1)
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=1)
    fc = bootstrap_intervals(model, TsSpec(), horizon=5, B=150, seed=1)
    assert (fc.upper - fc.lower).max() < 1e-8


def test_bootstrap_width_tracks_analytic():
    rng = np.random.default_rng(53)
    n_ages, n_years = 8, 30
    x = np.arange(n_ages, dtype=float)
    trend = np.linspace(3.0, -3.0, n_years)
    log_m = (-4.0 - 0.02 * x)[:, None] + 0.04 * trend[None, :]
    log_m = log_m + 0.05 * rng.standard_normal((n_ages, n_years))
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=2)
    analytic = forecast_fdm(model, TsSpec(), horizon=5)
    boot = bootstrap_intervals(model, TsSpec(), horizon=5, B=2000, seed=3)
    ratio = (boot.upper - boot.lower).mean() / (analytic.upper - analytic.lower).mean()
    assert 0.8 < ratio < 1.2


def test_bootstrap_rejects_tiny_B():
    rng = np.random.default_rng(59)
    log_m = rng.standard_normal((6, 9)) * 0.2 - 4.0
    model = fit_fdm(make_surface(log_m), NO_MONOTONE, K=1)
    with pytest.raises(ValueError, match="at least 100"):
        bootstrap_intervals(model, TsSpec(), horizon=3, B=50)
