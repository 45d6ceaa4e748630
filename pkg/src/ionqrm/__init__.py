"""Trapped-ion simulation of the quantum Rabi model in the deep strong
coupling regime, with Ornstein-Uhlenbeck magnetic-dephasing and
laser-amplitude noise, comparing the standard two-sideband realization
against continuous dynamical-decoupling drive schemes.
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .hilbert import (
    FockSpace,
    StateVector,
    annihilation,
    creation,
    displacement,
    embed,
    expectation,
    fock_state,
    number_operator,
    product_state,
    qubit_state,
    rotate_displacement,
)
from .ideal_qrm import (
    QrmParams,
    evolve_reference,
    omega_zero_propagate,
    parity_operator,
    qrm_hamiltonian,
    survival_probability,
)
from .noise import (
    AmplitudeNoiseParams,
    NoiseTrajectory,
    OuParams,
    autocorrelation_estimate,
    generate_trajectory,
    ou_params_from_coherence,
    ou_step,
    stationary_sample,
)
from .schemes import (
    FrameMap,
    IonSetup,
    LaserTone,
    RegimeError,
    RegimeWarning,
    SchemeConfig,
    dd_standing_wave_tones,
    dd_traveling_tones,
    hamiltonian_at,
    ideal_scheme,
    standard_tones,
    to_qrm_frame,
    validate_regime,
)
from .dynamics import (
    EnsembleResult,
    IntegratorConfig,
    TrajectoryResult,
    integrator_for,
    propagate,
    run_ensemble,
    run_trajectory,
)
