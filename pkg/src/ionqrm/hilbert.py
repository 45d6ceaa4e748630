"""Operators and states on the composite qubit (x) truncated-Fock space.

Conventions
-----------
- Basis ordering: qubit index major, Fock index minor.  A state vector of
  length 2N is ``[g-block (n = 0..N-1), e-block (n = 0..N-1)]``.
- Qubit basis order |g>, |e> with sigma_z |g> = -|g>, sigma_z |e> = +|e>
  and sigma_plus = |e><g|, so the free term (omega/2) sigma_z has the
  transition frequency omega positive.
- All operators are dense complex128 numpy arrays; all frequencies are
  angular (rad/s) and times are seconds.

Everything here is a pure function of its inputs; returned arrays are
fresh and safe to share read-only across trajectory workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

__all__ = [
    "FockSpace",
    "StateVector",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_P",
    "SIGMA_M",
    "annihilation",
    "creation",
    "number_operator",
    "displacement",
    "rotate_displacement",
    "embed",
    "expectation",
    "fock_state",
    "qubit_state",
    "product_state",
]

# Pauli operators in the (|g>, |e>) ordering.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_P = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |e><g|
SIGMA_M = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class FockSpace:
    """Truncated bosonic mode: ``dim`` retained levels plus ``guard`` extra
    levels used internally during operator construction and projected away
    before anything is returned to callers."""

    dim: int
    guard: int = 15

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"Fock dimension must be >= 2, got {self.dim}")
        if self.guard < 0:
            raise ValueError(f"guard must be >= 0, got {self.guard}")

    @property
    def composite_dim(self) -> int:
        """Dimension of the qubit (x) mode space."""
        return 2 * self.dim


@dataclass(frozen=True)
class StateVector:
    """Normalized state on the composite space (layout: g-block, e-block).

    ``time`` is the laboratory time the amplitudes refer to; frame maps
    need it to evaluate their rotating phases.
    """

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size % 2 != 0:
            raise ValueError("amplitudes must be a flat vector of even length")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {nrm!r} deviates from 1 beyond {_NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def fock_dim(self) -> int:
        return self.amplitudes.size // 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def annihilation(space: FockSpace) -> np.ndarray:
    """Truncated annihilation operator: <n-1|a|n> = sqrt(n)."""
    return _annihilation_dim(space.dim)


def _annihilation_dim(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def creation(space: FockSpace) -> np.ndarray:
    """Truncated creation operator, the conjugate transpose of ``annihilation``."""
    return annihilation(space).conj().T


def number_operator(space: FockSpace) -> np.ndarray:
    """diag(0, 1, ..., dim-1)."""
    return np.diag(np.arange(space.dim, dtype=float)).astype(complex)


def _displacement_laguerre(alpha: complex, dim: int) -> np.ndarray:
    """Closed-form matrix elements of D(alpha) on ``dim`` levels.

    For m >= n:
        <m|D(a)|n> = sqrt(n!/m!) a^(m-n) e^(-|a|^2/2) L_n^(m-n)(|a|^2)
    and the m < n entries follow from D(a)^dag = D(-a).  The entries are
    those of the untruncated operator, so no guard levels are needed on
    this route.
    """
    if alpha == 0:
        return np.eye(dim, dtype=complex)
    x = abs(alpha) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(m, n)
    d = np.abs(m - n)
    log_mag = (
        0.5 * (gammaln(lo + 1.0) - gammaln(lo + d + 1.0))
        + d * np.log(abs(alpha))
        - 0.5 * x
    )
    lag = eval_genlaguerre(lo, d, x)
    arg = np.angle(alpha)
    # a^(m-n) for the upper-index side, (-conj(a))^(n-m) for the lower
    phase = np.where(m >= n, d * arg, d * (np.pi - arg))
    return np.exp(log_mag) * lag * np.exp(1j * phase)


def _displacement_expm(alpha: complex, dim: int) -> np.ndarray:
    a = _annihilation_dim(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def displacement(alpha: complex, space: FockSpace, method: str = "laguerre") -> np.ndarray:
    """Displacement operator D(alpha) = exp(alpha a^dag - conj(alpha) a).

    Parameters
    ----------
    alpha : complex
        Displacement amplitude (must be finite).
    space : FockSpace
        Construction happens on dim + guard levels (relevant for the
        matrix-exponential route) and is projected to dim x dim.
    method : {'laguerre', 'expm'}
        'laguerre' evaluates the exact closed-form entries; 'expm' is the
        scaling-and-squaring matrix exponential, kept as an independent
        cross-check of the same operator.
    """
    alpha = complex(alpha)
    if not np.isfinite(alpha.real) or not np.isfinite(alpha.imag):
        raise ValueError(f"displacement amplitude must be finite, got {alpha!r}")
    big = space.dim + space.guard
    if method == "laguerre":
        full = _displacement_laguerre(alpha, big)
    elif method == "expm":
        full = _displacement_expm(alpha, big)
    else:
        raise ValueError(f"unknown displacement method {method!r}")
    return np.ascontiguousarray(full[: space.dim, : space.dim])


def rotate_displacement(d_base: np.ndarray, theta: float, space: FockSpace) -> np.ndarray:
    """D(alpha e^(i theta)) from D(alpha) by diagonal phase conjugation.

    Uses D(alpha e^(i theta)) = e^(i theta n) D(alpha) e^(-i theta n), i.e.
    entry (m, n) picks up e^(i theta (m - n)).  This is what makes the
    time-dependent displacement in the drive Hamiltonian a cheap rescaling
    of one precomputed matrix.
    """
    if d_base.shape != (space.dim, space.dim):
        raise ValueError("base operator does not match the Fock space")
    p = np.exp(1j * theta * np.arange(space.dim))
    return d_base * np.outer(p, p.conj())


def embed(spin_op: np.ndarray, mode_op: np.ndarray) -> np.ndarray:
    """Kronecker product spin_op (x) mode_op in the qubit-major ordering."""
    spin_op = np.asarray(spin_op, dtype=complex)
    mode_op = np.asarray(mode_op, dtype=complex)
    if spin_op.shape != (2, 2):
        raise ValueError(f"spin factor must be 2x2, got {spin_op.shape}")
    if mode_op.ndim != 2 or mode_op.shape[0] != mode_op.shape[1]:
        raise ValueError(f"mode factor must be square, got {mode_op.shape}")
    return np.kron(spin_op, mode_op)


def expectation(state, op: np.ndarray) -> complex:
    """<psi|O|psi>.  Accepts a StateVector or a bare amplitude vector."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if op.shape != (amps.size, amps.size):
        raise ValueError(f"operator shape {op.shape} does not match state dim {amps.size}")
    return complex(np.vdot(amps, op @ amps))


def fock_state(space: FockSpace, n: int) -> np.ndarray:
    """Mode basis vector |n>."""
    if not 0 <= n < space.dim:
        raise ValueError(f"Fock index {n} out of range [0, {space.dim})")
    vec = np.zeros(space.dim, dtype=complex)
    vec[n] = 1.0
    return vec


def qubit_state(label: str) -> np.ndarray:
    """Qubit vector for 'g', 'e' or 'e-g' (the sigma_x eigenstate (|e>-|g>)/sqrt2)."""
    if label == "g":
        return np.array([1.0, 0.0], dtype=complex)
    if label == "e":
        return np.array([0.0, 1.0], dtype=complex)
    if label in ("e-g", "x-"):
        return np.array([-1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    raise ValueError(f"unknown qubit state label {label!r}")


def product_state(qubit: np.ndarray, mode: np.ndarray, time: float = 0.0) -> StateVector:
    """StateVector for (qubit) (x) (mode)."""
    return StateVector(np.kron(np.asarray(qubit, complex), np.asarray(mode, complex)), time)
