"""Reference quantum Rabi model: H = (omega/2) sigma_z + omega0 a^dag a
- lambda sigma_x (a + a^dag).

Provides the exact omega = 0 propagator (displaced-oscillator branch
decomposition on the sigma_x eigenspaces) and a spectral reference
evolution used as the fidelity target for the trapped-ion schemes.  In the
deep strong coupling regime (lambda/omega0 >~ 1, omega = 0) the survival
probability collapses and revives with period 2 pi / omega0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    SIGMA_X,
    SIGMA_Z,
    FockSpace,
    StateVector,
    annihilation,
    displacement,
    embed,
    number_operator,
)

__all__ = [
    "QrmParams",
    "qrm_hamiltonian",
    "parity_operator",
    "omega_zero_propagate",
    "evolve_reference",
    "survival_probability",
    "TruncationWarning",
]

TAIL_WARN_POPULATION = 1e-6


class TruncationWarning(UserWarning):
    """Population is reaching the top retained Fock level."""


@dataclass(frozen=True)
class QrmParams:
    """Rabi-model frequencies (rad/s): qubit omega, mode omega0, coupling lam."""

    omega: float
    omega0: float
    lam: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.lam < 0:
            raise ValueError(f"coupling must be >= 0, got {self.lam}")

    @property
    def g(self) -> float:
        """Dimensionless coupling lambda/omega0; DSC regime when g >~ 1."""
        return self.lam / self.omega0

    @property
    def revival_period(self) -> float:
        """2 pi / omega0: survival revivals at integer multiples (omega = 0)."""
        return 2.0 * np.pi / self.omega0


def qrm_hamiltonian(params: QrmParams, space: FockSpace) -> np.ndarray:
    """Dense Rabi Hamiltonian on the composite space."""
    a = annihilation(space)
    eye2 = np.eye(2, dtype=complex)
    eye_m = np.eye(space.dim, dtype=complex)
    h = 0.5 * params.omega * embed(SIGMA_Z, eye_m)
    h += params.omega0 * embed(eye2, number_operator(space))
    h -= params.lam * embed(SIGMA_X, a + a.conj().T)
    return h


def parity_operator(space: FockSpace) -> np.ndarray:
    """Conserved Z2 parity Pi = -sigma_z (-1)^(a^dag a)."""
    mode_parity = np.diag((-1.0) ** np.arange(space.dim)).astype(complex)
    return -embed(SIGMA_Z, mode_parity)


class _BranchPropagator:
    """Exact omega = 0 evolution on the sigma_x = +/-1 branches.

    On each branch H_pm = omega0 a^dag a -/+ lam (a + a^dag) is a displaced
    oscillator, so e^(-i H_pm t) = e^(i lam^2 t / omega0) D(+/-g)
    e^(-i omega0 a^dag a t) D(-/+g).  The displacement matrices are built
    on dim + guard levels and the propagated state projected back to dim.
    """

    def __init__(self, params: QrmParams, space: FockSpace):
        self.params = params
        self.space = space
        self.big = space.dim + space.guard
        padded = FockSpace(self.big, guard=0)
        g = params.g
        self._dp = displacement(+g, padded)
        self._dm = displacement(-g, padded)
        self._narr = np.arange(self.big)

    def propagate(self, psi0: np.ndarray, t: float) -> np.ndarray:
        n = self.space.dim
        plus = np.zeros(self.big, dtype=complex)
        minus = np.zeros(self.big, dtype=complex)
        plus[:n] = (psi0[:n] + psi0[n:]) / np.sqrt(2.0)
        minus[:n] = (psi0[:n] - psi0[n:]) / np.sqrt(2.0)

        phase_mode = np.exp(-1j * self.params.omega0 * t * self._narr)
        phase_branch = np.exp(1j * self.params.lam**2 * t / self.params.omega0)
        plus = phase_branch * (self._dp @ (phase_mode * (self._dm @ plus)))
        minus = phase_branch * (self._dm @ (phase_mode * (self._dp @ minus)))

        out = np.empty(2 * n, dtype=complex)
        out[:n] = (plus[:n] + minus[:n]) / np.sqrt(2.0)
        out[n:] = (plus[:n] - minus[:n]) / np.sqrt(2.0)
        return out


def omega_zero_propagate(params: QrmParams, psi0: StateVector, t: float) -> StateVector:
    """Exact state at time t for omega = 0 (up to Fock truncation)."""
    if params.omega != 0:
        raise ValueError(f"exact branch propagator requires omega = 0, got {params.omega}")
    space = FockSpace(psi0.fock_dim)
    prop = _BranchPropagator(params, space)
    return StateVector(prop.propagate(psi0.amplitudes, t), time=psi0.time + t)


def _check_tail(amps: np.ndarray, n: int) -> np.ndarray:
    tail = abs(amps[n - 1]) ** 2 + abs(amps[2 * n - 1]) ** 2
    if tail > TAIL_WARN_POPULATION:
        warnings.warn(
            f"population {tail:.2e} at the top Fock level; increase the "
            "truncation dimension", TruncationWarning)
    # norm loss is pure truncation leakage; restore the state invariant
    return amps / np.linalg.norm(amps)


def evolve_reference(params: QrmParams, psi0: StateVector, times) -> list[StateVector]:
    """States under the ideal Rabi Hamiltonian at the requested times.

    omega = 0 delegates to the exact branch propagator; otherwise a single
    dense eigendecomposition of the (time-independent) Hamiltonian is used
    and e^(-iHt) applied spectrally.  Either way the evolution is a
    machine-precision oracle, not a step integration.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return []
    if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must increase strictly from 0")

    n = psi0.fock_dim
    out: list[StateVector] = []
    if params.omega == 0:
        prop = _BranchPropagator(params, FockSpace(n))
        for t in times:
            amps = _check_tail(prop.propagate(psi0.amplitudes, t), n)
            out.append(StateVector(amps, time=psi0.time + t))
    else:
        h = qrm_hamiltonian(params, FockSpace(n))
        evals, evecs = np.linalg.eigh(h)
        coeffs = evecs.conj().T @ psi0.amplitudes
        for t in times:
            amps = _check_tail(evecs @ (np.exp(-1j * evals * t) * coeffs), n)
            out.append(StateVector(amps, time=psi0.time + t))
    return out


def survival_probability(psi0: StateVector, psi_t: StateVector) -> float:
    """S(t) = |<psi(0)|psi(t)>|^2."""
    if psi0.amplitudes.size != psi_t.amplitudes.size:
        raise ValueError("states live on different spaces")
    overlap = np.vdot(psi0.amplitudes, psi_t.amplitudes)
    return float(min(abs(overlap) ** 2, 1.0))
