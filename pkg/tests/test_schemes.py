"""Tone tables, regime validation, Hamiltonian assembly and frame maps."""

import dataclasses

import numpy as np
import pytest

import ionqrm.schemes as schemes
from ionqrm.hilbert import (
    SIGMA_X,
    SIGMA_Z,
    FockSpace,
    StateVector,
    embed,
    fock_state,
    product_state,
    qubit_state,
)
from ionqrm.ideal_qrm import QrmParams
from ionqrm.noise import AmplitudeNoiseParams, OuParams
from ionqrm.schemes import (
    FrameMap,
    IonSetup,
    LaserTone,
    RegimeError,
    RegimeWarning,
    SchemeConfig,
    build_drive_terms,
    dd_standing_wave_tones,
    dd_traveling_tones,
    derive_target,
    hamiltonian_at,
    ideal_scheme,
    standard_tones,
    to_qrm_frame,
    validate_regime,
)

TWO_PI = 2 * np.pi
NU = TWO_PI * 1.5e6
OMEGA0 = TWO_PI * 1e3
RABI = TWO_PI * 50e3
OMEGA_D = TWO_PI * 200e3
ETA = 0.04
ETA_C = 0.01


@pytest.fixture
def ion():
    return IonSetup(nu=NU, space=FockSpace(30, guard=10))


@pytest.fixture
def target():
    return QrmParams(omega=0.0, omega0=OMEGA0, lam=OMEGA0)


def _dd_sw(target, ion, **kw):
    with pytest.warns(RegimeWarning):
        # |Omega_D +- omega0| << nu holds only with ratio ~7.5 at these
        # parameters, which is flagged but not fatal
        return dd_standing_wave_tones(target, ion, rabi=RABI, eta=ETA,
                                      dd_drive=OMEGA_D, carrier_eta=ETA_C, **kw)


def _dd_tw(target, ion, **kw):
    tw_target = QrmParams(target.omega, target.omega0, ETA * RABI / 4.0)
    with pytest.warns(RegimeWarning):
        return dd_traveling_tones(tw_target, ion, rabi=RABI, eta=ETA,
                                  dd_drive=OMEGA_D, carrier_eta=ETA_C, **kw)


def test_standard_tones_reference_parameters(target, ion):
    config = standard_tones(target, ion, rabi=RABI, eta=ETA)
    # omega = 0, omega0 = 2pi x 1 kHz: delta_r = -omega0, delta_b = +omega0
    assert config.tones[0].detuning == pytest.approx(-NU + OMEGA0)
    assert config.tones[1].detuning == pytest.approx(+NU - OMEGA0)
    assert all(t.phase == pytest.approx(1.5 * np.pi) for t in config.tones)
    assert config.target.lam == pytest.approx(ETA * RABI / 2.0)  # 2pi x 1 kHz


def test_standard_tones_resonant_jc_detunings(ion):
    jc = QrmParams(omega=OMEGA0, omega0=OMEGA0, lam=ETA * RABI / 2.0)
    config = standard_tones(jc, ion, rabi=RABI, eta=ETA)
    # delta_r = omega - omega0 = 0, delta_b = 2 omega0
    assert config.tones[0].detuning == pytest.approx(-NU)
    assert config.tones[1].detuning == pytest.approx(NU - 2 * OMEGA0)


def test_standard_tones_coupling_guard(target, ion):
    with pytest.raises(ValueError, match="inconsistent coupling"):
        standard_tones(target, ion, rabi=RABI, eta=0.05)


def test_dd_standing_wave_tone_table(target, ion):
    config = _dd_sw(target, ion)
    carrier = config.carrier
    assert carrier.rabi == pytest.approx(OMEGA_D)  # Omega_c = Omega_D + omega
    assert carrier.lamb_dicke == ETA_C and carrier.phase == 0.0

    reds = [t for t in config.tones if t.detuning < 0]
    blues = [t for t in config.tones if t.detuning > 0]
    # delta_r = Omega_D - omega0 = 2pi x 199 kHz, delta_b = 2pi x 201 kHz
    for tone in reds:
        assert -(tone.detuning + NU) == pytest.approx(OMEGA_D - OMEGA0)
    for tone in blues:
        assert NU - tone.detuning == pytest.approx(OMEGA_D + OMEGA0)
    # standing-wave structure: eta_2 = -eta_1, phi_2 = phi_1 + pi
    for pair in (reds, blues):
        etas = sorted(t.lamb_dicke for t in pair)
        assert etas == [-ETA, ETA]
        phases = sorted(t.phase for t in pair)
        assert phases[0] == 0.0 and phases[1] == pytest.approx(np.pi)


def test_dd_carrier_threshold_headroom(target, ion):
    config = _dd_sw(target, ion)
    checks = validate_regime(config, ion, OuParams(tau=100e-6, diffusion=0.0))
    carrier_check = [c for c in checks if "1/(2*pi*tau)" in c.name][0]
    assert carrier_check.ratio > 1e2
    assert carrier_check.level == "ok"


def test_dd_traveling_structure(target, ion):
    config = _dd_tw(target, ion)
    assert len(config.tones) == 3
    assert config.target.lam == pytest.approx(ETA * RABI / 4.0)
    sw = _dd_sw(target, ion)
    # same (omega, omega0) detuning algebra as the standing-wave variant
    assert derive_target(config, ion).omega == derive_target(sw, ion).omega
    assert derive_target(config, ion).omega0 == derive_target(sw, ion).omega0


def test_round_trip_all_constructors(target, ion):
    for config in (standard_tones(target, ion, rabi=RABI, eta=ETA),
                   _dd_sw(target, ion), _dd_tw(target, ion)):
        derived = derive_target(config, ion)
        assert derived.omega == pytest.approx(config.target.omega, abs=1e-9)
        assert derived.omega0 == pytest.approx(config.target.omega0, abs=1e-9)
        assert derived.lam == pytest.approx(config.target.lam, abs=1e-9)


def test_validate_regime_reference_parameters(target, ion):
    config = _dd_sw(target, ion)
    checks = validate_regime(config, ion, OuParams(tau=100e-6, diffusion=0.0))
    assert not any(c.level == "error" for c in checks)
    dressing = [c for c in checks if "Omega_D >> eta*Omega" in c.name][0]
    assert dressing.ratio == pytest.approx(100.0)


def test_validate_regime_warning_band(ion):
    # Omega_D = 2pi x 5 kHz against eta*Omega = 2pi x 2 kHz: ratio 2.5
    target = QrmParams(omega=0.0, omega0=TWO_PI * 100.0, lam=TWO_PI * 1e3)
    with pytest.warns(RegimeWarning):
        config = dd_standing_wave_tones(target, ion, rabi=TWO_PI * 50e3, eta=ETA,
                                        dd_drive=TWO_PI * 5e3, carrier_eta=ETA_C)
    checks = validate_regime(config, ion)
    dressing = [c for c in checks if "Omega_D >> eta*Omega" in c.name][0]
    assert dressing.level == "warning"
    assert dressing.ratio == pytest.approx(2.5)


def test_validate_regime_hard_error(target, ion):
    # Omega_D = 2pi x 1 kHz = eta*Omega: ratio 1, below the hard bound
    bad = QrmParams(omega=0.0, omega0=TWO_PI * 100.0, lam=TWO_PI * 1e3)
    with pytest.raises(RegimeError, match="Omega_D >> eta\\*Omega"):
        dd_standing_wave_tones(bad, ion, rabi=TWO_PI * 50e3, eta=ETA,
                               dd_drive=TWO_PI * 1e3, carrier_eta=ETA_C)


def test_carrier_criterion_long_tau(target, ion):
    config = _dd_sw(target, ion)
    checks = validate_regime(config, ion, OuParams(tau=1.0, diffusion=0.0))
    carrier_check = [c for c in checks if "1/(2*pi*tau)" in c.name][0]
    assert carrier_check.level == "ok"


def _single_tone_config(tone: LaserTone, target) -> SchemeConfig:
    # standard-kind shell around one active tone (partner silenced)
    silent = LaserTone(detuning=tone.detuning, rabi=0.0, lamb_dicke=0.0, phase=0.0)
    return SchemeConfig("standard", (tone, silent), target, FrameMap("standard"))


def test_hamiltonian_at_carrier_limit(target, ion):
    tone = LaserTone(detuning=0.0, rabi=RABI, lamb_dicke=0.0, phase=0.0)
    config = _single_tone_config(tone, target)
    h = hamiltonian_at(0.37e-6, config, ion)
    expected = 0.5 * RABI * embed(SIGMA_X, np.eye(ion.space.dim))
    np.testing.assert_allclose(h, expected, atol=1e-9)


def test_hamiltonian_at_pure_dephasing(target, ion):
    tone = LaserTone(detuning=0.0, rabi=0.0, lamb_dicke=0.0, phase=0.0)
    config = _single_tone_config(tone, target)
    h = hamiltonian_at(0.0, config, ion, xi_value=1234.5)
    expected = 0.5 * 1234.5 * embed(SIGMA_Z, np.eye(ion.space.dim))
    np.testing.assert_allclose(h, expected, atol=0.0)


def test_hamiltonian_at_hermitian(target, ion):
    config = _dd_sw(target, ion, amp_noise=AmplitudeNoiseParams(5e-4, 1e-3, OMEGA_D))
    rng = np.random.default_rng(0)
    for _ in range(5):
        t = rng.uniform(0, 6e-3)
        h = hamiltonian_at(t, config, ion, xi_value=rng.normal(0, 2e3),
                           beta_value=rng.normal(0, 5e-4))
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))


def _sideband_pair_hamiltonian(config, ion, t, pair_sign):
    """H restricted to one sideband pair (carrier and other pair muted)."""
    kept = []
    for tone in config.tones:
        if tone.detuning == 0.0 or np.sign(tone.detuning) != pair_sign:
            kept.append(dataclasses.replace(tone, rabi=0.0))
        else:
            kept.append(tone)
    muted = dataclasses.replace(config, tones=tuple(kept))
    return hamiltonian_at(t, muted, ion)


def test_standing_wave_pair_cancels_carrier_component(target, ion):
    config = _dd_sw(target, ion)
    n = ion.space.dim
    for t in (0.0, 1.3e-7, 2.9e-6):
        h = _sideband_pair_hamiltonian(config, ion, t, pair_sign=-1)
        # n-conserving (eta^0, carrier-like) elements vanish ...
        carrier_amp = max(abs(h[n + k, k]) for k in range(n - 1))
        assert carrier_amp < 1e-6 * RABI
        # ... while the order-eta sideband element doubles the single tone
        tw = _dd_tw(target, ion)
        h_single = _sideband_pair_hamiltonian(tw, ion, t, pair_sign=-1)
        pair_element = h[n + 1, 0]
        single_element = h_single[n + 1, 0]
        assert pair_element == pytest.approx(2.0 * single_element, rel=1e-6)


def test_traveling_wave_keeps_carrier_component(target, ion):
    # time-averaged |<g,0|H_pair|e,0>|: ~0 for the standing wave, Omega/2
    # for the travelling wave
    sw = _dd_sw(target, ion)
    tw = _dd_tw(target, ion)
    n = ion.space.dim
    times = np.linspace(0, 2e-6, 40)
    sw_amp = np.mean([abs(_sideband_pair_hamiltonian(sw, ion, t, -1)[n, 0])
                      for t in times])
    tw_amp = np.mean([abs(_sideband_pair_hamiltonian(tw, ion, t, -1)[n, 0])
                      for t in times])
    assert sw_amp < 1e-6 * RABI
    assert tw_amp == pytest.approx(0.5 * RABI, rel=1e-3)


def test_drive_terms_match_dense_assembly(target, ion):
    # the folded kernel form must reproduce hamiltonian_at exactly
    config = _dd_sw(target, ion)
    drive = build_drive_terms(config, ion)
    n = ion.space.dim
    rng = np.random.default_rng(5)
    for _ in range(4):
        t = rng.uniform(0, 1e-3)
        beta = rng.normal(0, 1e-3)
        weights = np.zeros(drive.dmats.shape[0], dtype=complex)
        for j in range(drive.om_half.size):
            amp = drive.om_half[j] * (1 + beta if drive.carrier[j] else 1.0)
            weights[drive.group[j]] += amp * np.exp(-1j * (drive.delta[j] * t + drive.phi[j]))
        msum = np.tensordot(weights, drive.dmats, axes=1)
        p = np.exp(1j * ion.nu * t * np.arange(n))
        block = (p[:, None] * msum) * p.conj()[None, :]
        dense = hamiltonian_at(t, config, ion, beta_value=beta)
        # two summation orders: agreement to rounding on the rad/s scale
        np.testing.assert_allclose(block, dense[n:, :n], atol=1e-12 * RABI, rtol=0.0)


def test_drive_terms_fold_standing_wave_pairs(target, ion):
    sw = build_drive_terms(_dd_sw(target, ion), ion)
    assert sw.dmats.shape[0] == 2       # carrier matrix + shared pair matrix
    assert sw.om_half.size == 3         # carrier + red pair + blue pair
    std = build_drive_terms(standard_tones(target, ion, rabi=RABI, eta=ETA), ion)
    assert std.dmats.shape[0] == 1      # both sidebands share D(i eta)


def test_frame_map_unitary_and_t0(target, ion):
    space = ion.space
    state = product_state(qubit_state("e-g"), fock_state(space, 2))

    std = standard_tones(target, ion, rabi=RABI, eta=ETA)
    out = to_qrm_frame(state, 0.0, std.frame)
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=0.0)

    dd = _dd_sw(target, ion)
    rotated = to_qrm_frame(state, 0.0, dd.frame)
    # R maps the sigma_x eigenstate (|e>-|g>)/sqrt2 to a sigma_z eigenstate
    n = space.dim
    pops_g = np.abs(rotated.amplitudes[:n]) ** 2
    pops_e = np.abs(rotated.amplitudes[n:]) ** 2
    assert pops_g.sum() == pytest.approx(1.0, abs=1e-12)
    assert pops_e.sum() == pytest.approx(0.0, abs=1e-12)

    rng = np.random.default_rng(3)
    for t in rng.uniform(0, 6e-3, 5):
        mapped = dd.frame.apply(state.amplitudes, t)
        assert abs(np.linalg.norm(mapped) - 1.0) < 1e-12
        back = dd.frame.inverse(mapped, t)
        np.testing.assert_allclose(back, state.amplitudes, atol=1e-12)


def test_spin_rotation_cyclic_permutation():
    r = schemes.SPIN_ROTATION
    sigma_y = np.array([[0.0, 1j], [-1j, 0.0]])
    np.testing.assert_allclose(r @ r.conj().T, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(r @ SIGMA_X @ r.conj().T, SIGMA_Z, atol=1e-15)
    np.testing.assert_allclose(r @ sigma_y @ r.conj().T, SIGMA_X, atol=1e-15)


def test_scheme_config_validation(target):
    with pytest.raises(ValueError, match="requires 2 tones"):
        SchemeConfig("standard", (), target, FrameMap("standard"))
    with pytest.raises(ValueError, match="does not match"):
        SchemeConfig("ideal", (), target, FrameMap("standard"))
    config = ideal_scheme(target)
    assert config.tones == () and config.carrier is None


def test_lamb_dicke_sanity_bound(target):
    with pytest.raises(ValueError, match="Lamb-Dicke"):
        LaserTone(detuning=0.0, rabi=1.0, lamb_dicke=0.25, phase=0.0)
