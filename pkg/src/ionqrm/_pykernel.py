"""Pure-numpy fallback for the trajectory stepping kernel.

Implements the same entry points as the compiled extension ``_kernel``:
classical 4th-order Runge-Kutta for i dpsi/dt = H(t) psi, with H in block
form on the composite (qubit, Fock) space,

    H = [[ d_g - xi/2 ,  B(t)^dag ],
         [ B(t)       ,  d_e + xi/2 ]],

where the off-diagonal block for a laser-tone Hamiltonian is

    B(t) = P(nu t) [ sum_j w_j(t) D_j ] P(nu t)^dag,
    P(theta) = diag(exp(i theta n)),
    w_j(t) = (Omega_j / 2) (1 + beta carrier_j) exp(-i (Delta_j t + phi_j)).

State layout: psi[:N] is the ground-qubit block, psi[N:] the excited block
(Fock index minor).  Noise values xi[k], beta[k] are held constant over
step k (zero-order hold).

This module is kept deliberately dumb: no caching across calls, no state.
The compiled kernel mirrors the arithmetic; the two backends agree to
rounding (they are not bit-identical).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _deriv_tones(v, msum, p, pc, xi_k, n):
    """-i H v for the tone Hamiltonian; msum is the un-rotated tone sum."""
    vg = v[:n]
    ve = v[n:]
    out = np.empty_like(v)
    # B vg = P (M (P^dag vg))
    w = msum @ (pc * vg)
    out[n:] = -1j * (p * w + (0.5 * xi_k) * ve)
    # B^dag ve = P (M^dag (P^dag ve)); M^dag u = conj(conj(u) @ M)
    u = pc * ve
    w2 = np.conj(np.conj(u) @ msum)
    out[:n] = -1j * (p * w2 - (0.5 * xi_k) * vg)
    return out


def _tone_sum(dmats, om_half, delta, phi, group, carrier, t, beta_k):
    k = dmats.shape[0]
    w = np.zeros(k, dtype=complex)
    for j in range(om_half.shape[0]):
        amp = om_half[j] * (1.0 + beta_k) if carrier[j] else om_half[j]
        w[group[j]] += amp * np.exp(-1j * (delta[j] * t + phi[j]))
    msum = w[0] * dmats[0]
    for kk in range(1, k):
        msum += w[kk] * dmats[kk]
    return msum


def advance_tones(psi, t0, h, nsteps, nu, dmats, om_half, delta, phi,
                  group, carrier, xi, beta):
    """Advance psi in place by nsteps RK4 steps under the tone Hamiltonian."""
    n = dmats.shape[1]
    narr = np.arange(n)
    for k in range(nsteps):
        t = t0 + k * h
        xi_k = xi[k]
        beta_k = beta[k]

        m_a = _tone_sum(dmats, om_half, delta, phi, group, carrier, t, beta_k)
        p_a = np.exp(1j * np.fmod(nu * t, 2.0 * np.pi) * narr)
        k1 = _deriv_tones(psi, m_a, p_a, p_a.conj(), xi_k, n)

        tm = t + 0.5 * h
        m_b = _tone_sum(dmats, om_half, delta, phi, group, carrier, tm, beta_k)
        p_b = np.exp(1j * np.fmod(nu * tm, 2.0 * np.pi) * narr)
        pc_b = p_b.conj()
        k2 = _deriv_tones(psi + (0.5 * h) * k1, m_b, p_b, pc_b, xi_k, n)
        k3 = _deriv_tones(psi + (0.5 * h) * k2, m_b, p_b, pc_b, xi_k, n)

        te = t + h
        m_c = _tone_sum(dmats, om_half, delta, phi, group, carrier, te, beta_k)
        p_c = np.exp(1j * np.fmod(nu * te, 2.0 * np.pi) * narr)
        k4 = _deriv_tones(psi + h * k3, m_c, p_c, p_c.conj(), xi_k, n)

        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _deriv_const(v, bmat, dg, de, xi_k, n):
    vg = v[:n]
    ve = v[n:]
    out = np.empty_like(v)
    out[n:] = -1j * (bmat @ vg + (de + 0.5 * xi_k) * ve)
    out[:n] = -1j * (np.conj(np.conj(ve) @ bmat) + (dg - 0.5 * xi_k) * vg)
    return out


def advance_constant(psi, h, nsteps, dg, de, bmat, xi):
    """Advance psi in place under a time-independent block Hamiltonian.

    dg, de are the real diagonals of the two qubit blocks, bmat the
    excited<-ground coupling block; xi[k] adds the per-step dephasing term.
    """
    n = dg.shape[0]
    for k in range(nsteps):
        xi_k = xi[k]
        k1 = _deriv_const(psi, bmat, dg, de, xi_k, n)
        k2 = _deriv_const(psi + (0.5 * h) * k1, bmat, dg, de, xi_k, n)
        k3 = _deriv_const(psi + (0.5 * h) * k2, bmat, dg, de, xi_k, n)
        k4 = _deriv_const(psi + h * k3, bmat, dg, de, xi_k, n)
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
