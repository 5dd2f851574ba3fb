import numpy as np
import pytest

from pla_bench.channel import (
    ReferenceEstimate,
    ScenarioParams,
    alice_estimate_phase2,
    average_estimates,
    bob_estimate_phase1,
    bob_training_set,
    complex_gaussian,
    eve_observations,
    forged_observation,
    reference_estimate,
    sample_channel,
)
from pla_bench.errors import ConfigError
from pla_bench.rng import Rng

N_SAMPLES = 200_000


def _three_se_of_variance(var, n):
    # variance estimator of a complex Gaussian has std ~ var / sqrt(n)
    return 3.0 * var / np.sqrt(n)


def test_complex_gaussian_moments():
    z = complex_gaussian(Rng(0), N_SAMPLES, variance=2.0)
    assert z.shape == (N_SAMPLES,)
    assert abs(z.mean()) < 3.0 * np.sqrt(2.0 / N_SAMPLES)
    assert abs(np.var(z) - 2.0) < _three_se_of_variance(2.0, N_SAMPLES)
    # circular symmetry: each quadrature carries half the power
    assert abs(np.var(z.real) - 1.0) < 3.0 * 1.0 * np.sqrt(2.0 / N_SAMPLES)
    assert abs(np.var(z.imag) - 1.0) < 3.0 * 1.0 * np.sqrt(2.0 / N_SAMPLES)


def test_complex_gaussian_vector_variance():
    z = complex_gaussian(Rng(1), (N_SAMPLES, 2), variance=np.array([1.0, 4.0]))
    v = np.var(z, axis=0)
    assert abs(v[0] - 1.0) < _three_se_of_variance(1.0, N_SAMPLES)
    assert abs(v[1] - 4.0) < _three_se_of_variance(4.0, N_SAMPLES)


def test_sample_channel_uses_power_delay():
    params = ScenarioParams(n_subcarriers=2, power_delay=np.array([2.0, 0.5]))
    h = sample_channel(params, Rng(2), size=N_SAMPLES)
    assert h.shape == (N_SAMPLES, 2)
    v = np.var(h, axis=0)
    assert abs(v[0] - 2.0) < _three_se_of_variance(2.0, N_SAMPLES)
    assert abs(v[1] - 0.5) < _three_se_of_variance(0.5, N_SAMPLES)


def test_bob_estimate_phase1_moments():
    params = ScenarioParams(n_subcarriers=1)
    h = np.array([1.5 - 0.5j])
    est = bob_estimate_phase1(h, params, 0.8, Rng(3), size=N_SAMPLES)
    want_var = (1.0 - 0.8**2) + params.sigma2_I
    assert abs(est.mean() - 0.8 * h[0]) < 3.0 * np.sqrt(want_var / N_SAMPLES)
    assert abs(np.var(est) - want_var) < _three_se_of_variance(want_var, N_SAMPLES)


def test_bob_estimate_phase1_alpha_validation():
    params = ScenarioParams(n_subcarriers=2)
    h = np.array([1.0 + 0j, 1.0 + 0j])
    with pytest.raises(ConfigError):
        bob_estimate_phase1(h, params, 1.2, Rng(0))
    with pytest.raises(ConfigError):
        bob_estimate_phase1(h, params, np.array([0.5, 0.5, 0.5]), Rng(0))


def test_average_estimates_reduces_noise():
    # n_subcarriers doubles as a batch axis here: every component is an
    # independent replica of the same scalar channel
    reps = 50_000
    params = ScenarioParams(n_subcarriers=reps, alpha_I=1.0)
    h = np.full(reps, 2.0 + 1.0j)
    m = 16
    ests = bob_estimate_phase1(h, params, 1.0, Rng(4), size=m)
    ref = average_estimates(list(ests), [1.0] * m)
    # with alpha == 1 the only spread left is the averaged estimation noise
    want_var = params.sigma2_I / m
    assert abs(ref.h_bar.mean() - h[0]) < 3.0 * np.sqrt(want_var / reps)
    assert abs(np.var(ref.h_bar) - want_var) < _three_se_of_variance(want_var, reps)


def test_average_estimates_alpha_bar_exact():
    est = [np.array([1.0 + 0j]), np.array([2.0 + 0j])]
    ref = average_estimates(est, [0.6, 1.0])
    assert ref.alpha_bar_I[0] == pytest.approx(0.8)
    assert ref.h_bar[0] == pytest.approx(1.5 + 0j)


def test_average_estimates_validation():
    with pytest.raises(ConfigError):
        average_estimates([], [])
    with pytest.raises(ConfigError):
        average_estimates([np.array([1 + 0j]), np.array([1 + 0j, 2 + 0j])], [1.0, 1.0])
    with pytest.raises(ConfigError):
        average_estimates([np.array([1 + 0j])], [1.0, 1.0])


def test_reference_estimate_has_full_phase1_variance():
    reps = 50_000
    params = ScenarioParams(n_subcarriers=reps, alpha_I=1.0)
    h = np.full(reps, 1.0 - 2.0j)
    ref = reference_estimate(h, params, Rng(50))
    want_var = params.sigma2_I
    assert abs(np.var(ref.h_bar) - want_var) < _three_se_of_variance(want_var, reps)


def test_reference_estimate_alpha_bar_matches_scenario():
    params = ScenarioParams(n_subcarriers=3, alpha_I=0.9)
    ref = reference_estimate(sample_channel(params, Rng(6)), params, Rng(7))
    assert np.allclose(ref.alpha_bar_I, 0.9)
    assert ref.h_bar.shape == (3,)


def test_bob_training_set_shape():
    params = ScenarioParams(n_subcarriers=2, m_training=100)
    h = sample_channel(params, Rng(8))
    train = bob_training_set(h, params, Rng(9))
    assert train.shape == (100, 2)


def test_alice_estimate_phase2_moments():
    params = ScenarioParams(n_subcarriers=1, alpha_II=0.9)
    h = np.array([0.7 + 1.1j])
    est = alice_estimate_phase2(h, params, Rng(10), size=N_SAMPLES)
    want_var = (1.0 - 0.9**2) + params.sigma2_II
    assert abs(est.mean() - 0.9 * h[0]) < 3.0 * np.sqrt(want_var / N_SAMPLES)
    assert abs(np.var(est) - want_var) < _three_se_of_variance(want_var, N_SAMPLES)


def _corr(a, b):
    return np.mean(a * np.conj(b))


def test_eve_observations_correlations_shared_innovation():
    rho_ae, rho_eb = 0.6, 0.3
    params = ScenarioParams(n_subcarriers=1, rho_AE=rho_ae, rho_EB=rho_eb)
    rng = Rng(11)
    h = sample_channel(params, rng, size=N_SAMPLES)
    h_ae, h_eb = eve_observations(h, params, rng, size=N_SAMPLES)
    tol = 5.0 / np.sqrt(N_SAMPLES)
    assert abs(_corr(h_ae, h) - rho_ae) < tol
    assert abs(_corr(h_eb, h) - rho_eb) < tol
    want_cross = rho_ae * rho_eb + np.sqrt(1 - rho_ae**2) * np.sqrt(1 - rho_eb**2)
    assert abs(_corr(h_ae, h_eb) - want_cross) < tol
    # unit variance is preserved on both of the adversary's links
    assert abs(np.var(h_ae) - 1.0) < _three_se_of_variance(1.0, N_SAMPLES)
    assert abs(np.var(h_eb) - 1.0) < _three_se_of_variance(1.0, N_SAMPLES)


def test_eve_observations_independent_innovations():
    rho_ae, rho_eb = 0.6, 0.3
    params = ScenarioParams(n_subcarriers=1, rho_AE=rho_ae, rho_EB=rho_eb)
    rng = Rng(12)
    h = sample_channel(params, rng, size=N_SAMPLES)
    h_ae, h_eb = eve_observations(h, params, rng, size=N_SAMPLES, independent_r=True)
    tol = 5.0 / np.sqrt(N_SAMPLES)
    assert abs(_corr(h_ae, h_eb) - rho_ae * rho_eb) < tol


def test_eve_observations_estimation_noise_adds_variance():
    params = ScenarioParams(n_subcarriers=1, rho_AE=0.5, rho_EB=0.5,
                            sigma2_AE=0.2, sigma2_EB=0.1)
    rng = Rng(13)
    h = sample_channel(params, rng, size=N_SAMPLES)
    h_ae, h_eb = eve_observations(h, params, rng, size=N_SAMPLES)
    assert abs(np.var(h_ae) - 1.2) < _three_se_of_variance(1.2, N_SAMPLES)
    assert abs(np.var(h_eb) - 1.1) < _three_se_of_variance(1.1, N_SAMPLES)


def test_forged_observation_phases():
    params = ScenarioParams(n_subcarriers=1)
    g = np.array([3.0 + 0j])
    got2 = forged_observation(np.tile(g, (N_SAMPLES, 1)), params, Rng(14), phase="II")
    assert abs(np.var(got2) - params.sigma2_II) < _three_se_of_variance(params.sigma2_II, N_SAMPLES)
    got1 = forged_observation(np.tile(g, (N_SAMPLES, 1)), params, Rng(15), phase="I")
    assert abs(np.var(got1) - params.sigma2_I) < _three_se_of_variance(params.sigma2_I, N_SAMPLES)
    assert abs(got2.mean() - g[0]) < 3.0 * np.sqrt(params.sigma2_II / N_SAMPLES)
    with pytest.raises(ConfigError):
        forged_observation(g, params, Rng(16), phase="III")


def test_scenario_params_validation():
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=0)
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=1, rho_AE=1.5)
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=1, rho_EB=-0.1)
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=1, sigma2_I=-1.0)
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=1, alpha_II=1.1)
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=2, alpha_I=np.array([0.5, 0.5, 0.5]))
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=2, power_delay=np.array([1.0]))
    with pytest.raises(ConfigError):
        ScenarioParams(n_subcarriers=2, power_delay=np.array([1.0, 0.0]))


def test_from_snr_maps_db_to_variance():
    params = ScenarioParams.from_snr(1, 15.0, 20.0)
    assert params.sigma2_I == pytest.approx(10**-1.5)
    assert params.sigma2_II == pytest.approx(10**-2.0)
    assert params.snr_I_db == pytest.approx(15.0)
    assert params.snr_II_db == pytest.approx(20.0)


def test_reference_estimate_validation():
    with pytest.raises(ConfigError):
        ReferenceEstimate(h_bar=np.ones((2, 2), dtype=complex), alpha_bar_I=np.ones((2, 2)))
    with pytest.raises(ConfigError):
        ReferenceEstimate(h_bar=np.array([1 + 0j, np.nan + 0j]), alpha_bar_I=np.array([1.0, 1.0]))
    with pytest.raises(ConfigError):
        ReferenceEstimate(h_bar=np.array([1 + 0j]), alpha_bar_I=np.array([1.0, 1.0]))


def test_channel_functions_deterministic_under_seed():
    params = ScenarioParams(n_subcarriers=3, rho_AE=0.4, rho_EB=0.2)
    h1 = sample_channel(params, Rng(20), size=5)
    h2 = sample_channel(params, Rng(20), size=5)
    assert np.array_equal(h1, h2)
    a1 = eve_observations(h1, params, Rng(21), size=5)
    a2 = eve_observations(h1, params, Rng(21), size=5)
    assert np.array_equal(a1[0], a2[0]) and np.array_equal(a1[1], a2[1])
