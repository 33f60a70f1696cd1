"""Rate predictions, schedules, slope fitting, and the grid runner."""

import dataclasses
import math

import numpy as np
import pytest

from kpcalab import (
    ConfigError,
    ExperimentConfig,
    OutOfRegime,
    ell_for,
    fit_slope,
    lambda_schedule,
    m_for,
    predicted_exponent,
    run_grid,
    transition_study,
)


def _cfg(**kw):
    base = dict(decay="poly", theta=0.2, n_grid=(64, 128), replications=5,
                atoms=24, rank=8, seed=0, metric="recon_hat", alpha=2.0)
    base.update(kw)
    return ExperimentConfig(**base)


def test_predicted_poly_reconstruction_branches():
    assert predicted_exponent(_cfg(theta=0.2)) == pytest.approx(-0.3)
    assert predicted_exponent(_cfg(theta=0.4)) == pytest.approx(-0.4)
    # the knee alpha/(4 alpha - 1) where both branches agree
    assert predicted_exponent(_cfg(theta=2.0 / 7.0)) == pytest.approx(-3.0 / 7.0)
    assert predicted_exponent(
        _cfg(metric="recon_rf_pop", tau=0.1)) == pytest.approx(-0.1)
    assert predicted_exponent(
        _cfg(metric="recon_rf_pop", tau=0.9)) == pytest.approx(-0.3)
    assert predicted_exponent(
        _cfg(metric="recon_rf_hat", tau=0.5)) == pytest.approx(-0.3)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(metric="recon_rf_hat", tau=0.4))  # tau <= 2 theta
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(theta=0.0))
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(theta=0.5))


def test_predicted_poly_projection_branches():
    # default beta = alpha + 1 = 3, knee = alpha/(2 (2 beta - alpha)) = 1/4
    assert predicted_exponent(_cfg(metric="proj_hat", theta=0.1)) == pytest.approx(-0.2)
    assert predicted_exponent(_cfg(metric="proj_hat", theta=0.3)) == pytest.approx(-0.05)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(metric="proj_hat", theta=0.4))  # theta >= alpha/(2 beta)
    assert predicted_exponent(
        _cfg(metric="proj_rf_pop", theta=0.1, tau=0.5)) == pytest.approx(-0.1)
    assert predicted_exponent(
        _cfg(metric="proj_rf_hat", theta=0.1, tau=0.9)) == pytest.approx(-0.2)
    assert predicted_exponent(
        _cfg(metric="proj_rf_hat", theta=0.1, tau=0.5)) == pytest.approx(-0.1)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(metric="proj_rf_hat", theta=0.1, tau=0.2))
    # explicit beta override
    assert predicted_exponent(
        _cfg(metric="proj_hat", theta=0.3), beta=2.0) == pytest.approx(-0.1)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(metric="proj_hat", theta=0.1), beta=1.5)


def _ecfg(**kw):
    kw.setdefault("decay", "expo")
    kw.setdefault("gamma", 0.5)
    kw.setdefault("alpha", None)
    return _cfg(**kw)


def test_predicted_expo_branches():
    assert predicted_exponent(_ecfg(theta=0.1)) == pytest.approx(-0.2)
    assert predicted_exponent(_ecfg(theta=0.3)) == pytest.approx(-0.5)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_ecfg(theta=0.6))
    assert predicted_exponent(
        _ecfg(metric="recon_rf_pop", theta=0.2, tau=0.3)) == pytest.approx(-0.3)
    assert predicted_exponent(
        _ecfg(metric="recon_rf_hat", theta=0.2, tau=0.5)) == pytest.approx(-0.4)
    assert predicted_exponent(_ecfg(metric="proj_hat", theta=0.0)) == pytest.approx(-0.25)
    assert predicted_exponent(_ecfg(metric="proj_hat", theta=0.2)) == pytest.approx(-0.15)
    assert predicted_exponent(
        _ecfg(metric="proj_rf_pop", theta=0.1, tau=0.5)) == pytest.approx(-0.15)
    assert predicted_exponent(
        _ecfg(metric="proj_rf_hat", theta=0.1, tau=0.7)) == pytest.approx(-0.2)
    assert predicted_exponent(
        _ecfg(metric="proj_rf_hat", theta=0.1, tau=0.3)) == pytest.approx(-0.05)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_ecfg(metric="proj_hat", theta=0.5))


def test_predicted_improved_rates():
    assert predicted_exponent(_ecfg(theta=0.2), improved=True) == pytest.approx(-0.4)
    assert predicted_exponent(_ecfg(theta=0.4), improved=True) == pytest.approx(-0.6)
    with pytest.raises(OutOfRegime):
        predicted_exponent(_cfg(theta=0.2), improved=True)  # poly
    with pytest.raises(OutOfRegime):
        predicted_exponent(_ecfg(metric="proj_hat", theta=0.2), improved=True)
    with pytest.raises(OutOfRegime):
        predicted_exponent(
            _ecfg(metric="recon_rf_pop", theta=0.2, tau=0.5), improved=True)


def test_schedules_round_half_up():
    poly = _cfg(theta=0.25, rank=8)
    assert ell_for(poly, 64) == 2      # 64^(1/8) = 1.68
    assert ell_for(poly, 6561) == 3    # 3^8 exactly
    expo = _ecfg(theta=0.2, gamma=0.5, rank=8)
    assert ell_for(expo, 148) == 2     # 0.4 ln 148 = 1.9989
    assert ell_for(expo, 20) == 1      # 1.198
    assert ell_for(_ecfg(theta=0.01, gamma=0.5), 64) == 1  # clipped up to 1
    assert ell_for(_cfg(theta=0.0, ell_fixed=3), 10**9) == 3
    with pytest.raises(ConfigError):  # schedule exceeds rank - 1
        ell_for(_ecfg(theta=0.2, gamma=0.5, rank=3, atoms=24), 500_000)
    tau_half = _cfg(metric="recon_rf_hat", tau=0.5)
    assert m_for(tau_half, 100) == 10
    assert m_for(tau_half, 10) == 3    # 3.162
    assert m_for(_cfg(metric="recon_rf_hat", tau=0.8), 2048) == 446
    with pytest.raises(ConfigError):
        m_for(_cfg(), 100)


def test_lambda_schedule_families():
    lam = lambda_schedule(_cfg(alpha=2.0, rank=4))
    assert np.allclose(lam, [1.0, 0.25, 1.0 / 9.0, 0.0625], rtol=1e-15)
    lam = lambda_schedule(_ecfg(gamma=0.5, rank=3))
    assert np.allclose(lam, np.exp([-0.5, -1.0, -1.5]), rtol=1e-15)


def test_fit_slope_exact_power_law():
    ns = np.array([16, 32, 64, 128, 256])
    slope, stderr = fit_slope(ns, 5.0 * ns**-0.7)
    assert slope == pytest.approx(-0.7, abs=1e-12)
    assert stderr < 1e-12
    with pytest.raises(ConfigError):
        fit_slope([10, 20, 40], [1.0, 0.5, 0.25])
    with pytest.raises(ConfigError):
        fit_slope([10, 20, 40, 80], [1.0, 0.5, 0.0, 0.25])
    with pytest.raises(ConfigError):
        fit_slope([10, 20, 40, 80], [1.0, 0.5, 0.25])


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(replications=4)
    with pytest.raises(ConfigError):
        _cfg(metric="recon_rf_hat")  # no tau
    with pytest.raises(ConfigError):
        _cfg(metric="florp")
    with pytest.raises(ConfigError):
        _cfg(n_grid=(64, 64))
    with pytest.raises(ConfigError):
        _cfg(gamma=0.5)  # poly takes no gamma
    with pytest.raises(ConfigError):
        _ecfg(gamma=None)
    with pytest.raises(ConfigError):
        _cfg(alpha=1.0)
    with pytest.raises(ConfigError):
        _cfg(ell_fixed=3)  # needs theta = 0
    with pytest.raises(ConfigError):
        _cfg(theta=0.0, ell_fixed=8)  # outside 1..rank-1
    with pytest.raises(ConfigError):
        _cfg(atoms=8, rank=8)
    with pytest.raises(ConfigError):
        _cfg(tau=1.5)
    with pytest.raises(ConfigError):
        _cfg(theta=-0.1)


def test_division_guard_rejects_tiny_retained_eigenvalues():
    # lambda_8 / lambda_1 = e^-21, far below the trusted-division floor
    cfg = _ecfg(theta=0.0, gamma=3.0, ell_fixed=8, rank=10, atoms=16,
                n_grid=(8, 16, 24, 32), metric="proj_hat")
    with pytest.raises(ConfigError):
        run_grid(cfg)


def test_full_support_reproduces_population_bias():
    # training on the whole atom set turns the estimator into the population
    # truth, so every replication must equal the schedule's tail energy
    cfg = _cfg(theta=0.25, n_grid=(64, 128, 256, 512), atoms=20, rank=6)
    report = run_grid(cfg, full_support=True)
    lam = lambda_schedule(cfg)
    for n in cfg.n_grid:
        tail = float(np.sum(lam[ell_for(cfg, n):] ** 2))
        assert report.medians[n] == pytest.approx(tail, rel=1e-10)


def test_run_grid_deterministic_across_threads():
    cfg = _ecfg(theta=0.2, gamma=0.5, metric="recon_rf_hat", tau=0.8,
                n_grid=(32, 48, 64, 96), atoms=24, rank=8)
    first = run_grid(cfg)
    threaded = run_grid(cfg, threads=3)
    again = run_grid(cfg)
    assert first.rows == threaded.rows == again.rows
    assert first.slope == threaded.slope == again.slope
    assert sum(first.invalid.values()) == 0
    assert first.swap_violations == 0
    assert first.swap_min_margin > 0.0
    assert all(math.isfinite(r.value) for r in first.rows)
    assert {r.n for r in first.rows} == set(cfg.n_grid)
    assert first.predicted == pytest.approx(-0.4)


def test_transition_study_smoke():
    base = _ecfg(theta=0.0, gamma=1.0, metric="proj_rf_hat", tau=0.5,
                 ell_fixed=1, n_grid=(32, 48, 64, 96), atoms=24, rank=6,
                 slope_tolerance=5.0)
    report = transition_study(base, (0.3, 0.9))
    assert report.threshold == pytest.approx(0.5)
    assert len(report.reports) == 3
    assert [row.tau for row in report.rows] == [0.3, 0.9]
    assert report.rows[0].regime == "feature_limited"
    assert report.rows[0].expected == pytest.approx(-0.15)
    assert report.rows[1].regime == "sample_limited"
    assert report.rows[1].expected == pytest.approx(report.reference_slope)
    assert all(row.matches for row in report.rows)
    with pytest.raises(ConfigError):
        transition_study(dataclasses.replace(base, metric="proj_hat", tau=None),
                         (0.3, 0.9))
