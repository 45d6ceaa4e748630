"""OU channel statistics, exactness of the update rule, reproducibility."""

import numpy as np
import pytest

from ionqrm.noise import (
    BETA_CHANNEL,
    XI_CHANNEL,
    AmplitudeNoiseParams,
    OuParams,
    OuStream,
    autocorrelation_estimate,
    generate_trajectory,
    ou_params_from_coherence,
    ou_step,
    stationary_sample,
    stream_generator,
)

TAU = 100e-6
T2 = 3e-3


def test_coherence_formula_reference_values():
    params = ou_params_from_coherence(TAU, T2)
    assert params.diffusion == pytest.approx(6.6667e10, rel=1e-4)
    assert params.noise_power == pytest.approx(3.3333e6, rel=1e-4)
    # rms dephasing rate ~ 2 pi x 290.6 Hz
    assert np.sqrt(params.noise_power) == pytest.approx(1825.7, rel=1e-4)


def test_coherence_formula_noiseless_limit():
    params = ou_params_from_coherence(TAU, np.inf)
    assert params.diffusion == 0.0
    assert params.noise_power == 0.0


def test_coherence_formula_regime_guard():
    with pytest.raises(ValueError):
        ou_params_from_coherence(TAU, 300e-6)


def test_ou_step_zero_dt_keeps_value():
    params = ou_params_from_coherence(TAU, T2)
    rng = stream_generator(1, 0, XI_CHANNEL)
    assert ou_step(1.234, 0.0, params, rng) == 1.234


def test_ou_step_deterministic_decay_when_diffusionless():
    params = OuParams(tau=TAU, diffusion=0.0)
    rng = stream_generator(1, 0, XI_CHANNEL)
    x = ou_step(2.0, 50e-6, params, rng)
    assert x == pytest.approx(2.0 * np.exp(-0.5), rel=1e-12)


def test_ou_step_stationary_variance():
    params = ou_params_from_coherence(TAU, T2)
    rng = stream_generator(42, 0, XI_CHANNEL)
    # independent long-run samples: many relaxation times apart
    vals = np.array([ou_step(0.0, 10 * TAU, params, rng) for _ in range(10_000)])
    assert vals.var() == pytest.approx(params.noise_power, rel=0.05)


def test_stationary_sample_statistics():
    params = ou_params_from_coherence(TAU, T2)
    rng = stream_generator(7, 0, XI_CHANNEL)
    vals = np.array([stationary_sample(params, rng) for _ in range(100_000)])
    sem = np.sqrt(params.noise_power / vals.size)
    assert abs(vals.mean()) < 3 * sem
    assert vals.var() == pytest.approx(params.noise_power, rel=0.03)
    assert stationary_sample(OuParams(TAU, 0.0), rng) == 0.0


def test_half_steps_match_full_step_moments():
    # composing two dt/2 updates has the same first two moments as one dt
    params = ou_params_from_coherence(TAU, T2)
    rng = stream_generator(3, 0, XI_CHANNEL)
    n = 100_000
    x0 = 2000.0
    dt = 80e-6
    full = np.array([ou_step(x0, dt, params, rng) for _ in range(n)])
    halves = np.array([ou_step(ou_step(x0, dt / 2, params, rng), dt / 2, params, rng)
                       for _ in range(n)])
    mean_exact = x0 * np.exp(-dt / TAU)
    var_exact = params.noise_power * (1 - np.exp(-2 * dt / TAU))
    for sample in (full, halves):
        assert abs(sample.mean() - mean_exact) < 3 * np.sqrt(var_exact / n)
        assert sample.var() == pytest.approx(var_exact, rel=0.03)


def test_trajectory_bitwise_reproducible_and_streams_distinct():
    params = ou_params_from_coherence(TAU, T2)
    a = generate_trajectory(params, 1e-6, 5000, master_seed=11, traj_index=3)
    b = generate_trajectory(params, 1e-6, 5000, master_seed=11, traj_index=3)
    assert np.array_equal(a.samples, b.samples)
    c = generate_trajectory(params, 1e-6, 5000, master_seed=11, traj_index=4)
    d = generate_trajectory(params, 1e-6, 5000, master_seed=11, traj_index=3,
                            channel=BETA_CHANNEL)
    assert not np.array_equal(a.samples, c.samples)
    assert not np.array_equal(a.samples, d.samples)


def test_stream_matches_scalar_recursion_bitwise():
    # lfilter-based generation must reproduce the ou_step recursion exactly
    params = ou_params_from_coherence(TAU, T2)
    length = 3000
    traj = generate_trajectory(params, 1e-6, length, master_seed=5, traj_index=0)

    rng = stream_generator(5, 0, XI_CHANNEL)
    x = stationary_sample(params, rng)
    manual = np.empty(length)
    manual[0] = x
    for k in range(1, length):
        x = ou_step(x, 1e-6, params, rng)
        manual[k] = x
    assert np.array_equal(traj.samples, manual)


def test_chunked_stream_matches_one_shot_bitwise():
    params = ou_params_from_coherence(TAU, T2)
    one = generate_trajectory(params, 1e-6, 6000, master_seed=9).samples
    stream = OuStream(params, 1e-6, stream_generator(9, 0, XI_CHANNEL))
    chunks = np.concatenate([stream.next(n) for n in (1, 999, 2500, 2500)])
    assert np.array_equal(one, chunks)


def test_autocorrelation_against_closed_form():
    params = ou_params_from_coherence(TAU, T2)
    dt = 1e-6
    trajs = [generate_trajectory(params, dt, 3001, master_seed=21, traj_index=k)
             for k in range(600)]
    c0 = autocorrelation_estimate(trajs, 0.0)
    c_tau = autocorrelation_estimate(trajs, TAU)
    assert c0 == pytest.approx(params.noise_power, rel=0.05)
    assert c_tau / c0 == pytest.approx(np.exp(-1.0), rel=0.10)


def test_autocorrelation_zero_without_noise():
    params = OuParams(tau=TAU, diffusion=0.0)
    trajs = [generate_trajectory(params, 1e-6, 500, master_seed=2, traj_index=k)
             for k in range(4)]
    assert autocorrelation_estimate(trajs, 0.0) == 0.0
    assert autocorrelation_estimate(trajs, TAU) == 0.0


def test_autocorrelation_rejects_bad_lag():
    params = ou_params_from_coherence(TAU, T2)
    trajs = [generate_trajectory(params, 1e-6, 100, master_seed=2)]
    with pytest.raises(ValueError):
        autocorrelation_estimate(trajs, 1.5e-6)
    with pytest.raises(ValueError):
        autocorrelation_estimate(trajs, 200e-6)


def test_spectral_half_width():
    # Lorentzian PSD half width at half maximum should sit near 1/(2 pi tau)
    params = ou_params_from_coherence(TAU, T2)
    dt = 5e-6
    length = 4096
    spectra = []
    for k in range(300):
        traj = generate_trajectory(params, dt, length, master_seed=33, traj_index=k)
        spectra.append(np.abs(np.fft.rfft(traj.samples)) ** 2)
    psd = np.mean(spectra, axis=0)
    freqs = np.fft.rfftfreq(length, d=dt)
    half = np.interp(0.5 * psd[0], psd[::-1], freqs[::-1])
    assert half == pytest.approx(params.spectral_width, rel=0.20)


def test_amplitude_noise_power_and_beta_process():
    amp = AmplitudeNoiseParams(zeta=5e-4, tau_beta=1e-3, carrier_rabi=2 * np.pi * 200e3)
    assert amp.power == pytest.approx((5e-4 * 2 * np.pi * 200e3) ** 2)
    beta = amp.beta_process()
    assert beta.tau == 1e-3
    # stationary variance of beta(t) is zeta^2
    assert beta.noise_power == pytest.approx(5e-4**2, rel=1e-12)
