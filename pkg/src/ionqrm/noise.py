"""Ornstein-Uhlenbeck noise channels: magnetic dephasing xi(t) and carrier
amplitude fluctuation beta(t).

Model
-----
Zero-mean OU process with relaxation time tau and diffusion constant c:
stationary variance (total noise power) P = c tau / 2, autocorrelation
C(t') = P exp(-|t'|/tau), spectral half width 1/(2 pi tau).  The exact
one-step update for any dt is

    x' = x e^(-dt/tau) + sqrt(P (1 - e^(-2 dt/tau))) n,   n ~ N(0, 1),

which has no discretization error, so the process can be sampled directly
on the integrator grid and held constant within each step.

Reproducibility
---------------
All randomness comes from the counter-based Philox generator seeded
through numpy SeedSequence with ``spawn_key=(trajectory_index, channel)``,
channel 0 for xi and 1 for beta.  Trajectories are therefore independent,
order-free streams: the same (master_seed, index, channel) always yields
the same bits, regardless of how many workers run or in which order.
Array generation uses scipy.signal.lfilter for the linear recursion; this
is bit-identical to iterating ``ou_step`` (covered by a test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "XI_CHANNEL",
    "BETA_CHANNEL",
    "OuParams",
    "AmplitudeNoiseParams",
    "NoiseTrajectory",
    "ou_params_from_coherence",
    "ou_step",
    "stationary_sample",
    "stream_generator",
    "OuStream",
    "generate_trajectory",
    "autocorrelation_estimate",
]

XI_CHANNEL = 0
BETA_CHANNEL = 1


@dataclass(frozen=True)
class OuParams:
    """OU process parameters: relaxation time tau (s), diffusion c (s^-3)."""

    tau: float
    diffusion: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.diffusion < 0:
            raise ValueError(f"diffusion must be >= 0, got {self.diffusion}")

    @property
    def noise_power(self) -> float:
        """Stationary variance c tau / 2 (rad^2/s^2 for the dephasing channel)."""
        return 0.5 * self.diffusion * self.tau

    @property
    def spectral_width(self) -> float:
        """Half width of the Lorentzian spectral density, 1/(2 pi tau)."""
        return 1.0 / (2.0 * np.pi * self.tau)


@dataclass(frozen=True)
class AmplitudeNoiseParams:
    """Relative carrier-amplitude fluctuation: Omega_c -> Omega_c (1 + beta(t)).

    beta(t) is an OU process with stationary variance zeta^2 and relaxation
    time tau_beta, so the total power is P_AF = (zeta Omega_c)^2.
    """

    zeta: float
    tau_beta: float
    carrier_rabi: float

    def __post_init__(self):
        if self.zeta < 0:
            raise ValueError(f"zeta must be >= 0, got {self.zeta}")
        if not self.tau_beta > 0:
            raise ValueError(f"tau_beta must be positive, got {self.tau_beta}")
        if self.carrier_rabi < 0:
            raise ValueError(f"carrier_rabi must be >= 0, got {self.carrier_rabi}")

    @property
    def power(self) -> float:
        """Total noise power (zeta Omega_c)^2 in rad^2/s^2."""
        return (self.zeta * self.carrier_rabi) ** 2

    def beta_process(self) -> OuParams:
        """OU parameters of beta(t): variance zeta^2 -> c = 2 zeta^2 / tau_beta."""
        return OuParams(tau=self.tau_beta, diffusion=2.0 * self.zeta**2 / self.tau_beta)


@dataclass(frozen=True)
class NoiseTrajectory:
    """One realization sampled on a uniform grid: samples[k] at t = k dt."""

    samples: np.ndarray
    dt: float
    seed: int
    params: OuParams


def ou_params_from_coherence(tau: float, t2: float) -> OuParams:
    """OU parameters reproducing a coherence time T2 in the regime T2 >> tau.

    Uses c = 2 / (tau^2 T2), which gives noise power P = 1/(tau T2).  The
    closed form is only valid well inside T2 >> tau; anything below
    T2 >= 5 tau is rejected.  T2 = inf is the noiseless limit (c = 0).
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if math.isinf(t2):
        return OuParams(tau=tau, diffusion=0.0)
    if t2 < 5.0 * tau:
        raise ValueError(
            f"coherence formula requires T2 >> tau; got T2 = {t2} < 5 tau = {5 * tau}"
        )
    return OuParams(tau=tau, diffusion=2.0 / (tau**2 * t2))


def ou_step(x: float, dt: float, params: OuParams, rng: np.random.Generator) -> float:
    """Exact OU update over dt.  Always consumes exactly one normal variate."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    rho = math.exp(-dt / params.tau)
    amp = math.sqrt(params.noise_power * (1.0 - rho * rho))
    return x * rho + amp * rng.standard_normal()


def stationary_sample(params: OuParams, rng: np.random.Generator) -> float:
    """Draw from the stationary distribution N(0, c tau / 2)."""
    return math.sqrt(params.noise_power) * rng.standard_normal()


def stream_generator(master_seed: int, traj_index: int, channel: int) -> np.random.Generator:
    """Philox generator for one (trajectory, channel) noise stream."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(traj_index, channel))
    return np.random.Generator(np.random.Philox(seq))


class OuStream:
    """Chunked exact OU sampling on a fixed grid.

    The first emitted value is the initial condition (stationary draw or
    zero); subsequent values follow the exact update.  Chunk boundaries do
    not affect the emitted sequence.
    """

    def __init__(self, params: OuParams, dt: float, rng: np.random.Generator,
                 stationary_init: bool = True):
        if dt < 0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        self.params = params
        self.dt = dt
        self._rng = rng
        self._rho = math.exp(-dt / params.tau)
        self._amp = math.sqrt(params.noise_power * (1.0 - self._rho**2))
        self._x = stationary_sample(params, rng) if stationary_init else 0.0
        self._started = False

    def next(self, n: int) -> np.ndarray:
        """Next n values of the process."""
        if n <= 0:
            return np.empty(0)
        out = np.empty(n)
        k0 = 0
        if not self._started:
            out[0] = self._x
            self._started = True
            k0 = 1
        if n > k0:
            draws = self._rng.standard_normal(n - k0)
            # y[k] = rho y[k-1] + amp n[k]: same arithmetic as ou_step
            seg, _ = lfilter([self._amp], [1.0, -self._rho], draws,
                             zi=[self._rho * self._x])
            out[k0:] = seg
            self._x = out[-1]
        return out


def generate_trajectory(params: OuParams, dt: float, length: int, master_seed: int,
                        traj_index: int = 0, channel: int = XI_CHANNEL,
                        stationary_init: bool = True) -> NoiseTrajectory:
    """Full reproducible trajectory of ``length`` samples at spacing dt."""
    rng = stream_generator(master_seed, traj_index, channel)
    stream = OuStream(params, dt, rng, stationary_init=stationary_init)
    return NoiseTrajectory(samples=stream.next(length), dt=dt,
                           seed=master_seed, params=params)


def autocorrelation_estimate(trajs: list[NoiseTrajectory], lag: float) -> float:
    """Ensemble-and-time averaged estimate of C(lag) = <x(t) x(t+lag)>."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    dt = trajs[0].dt
    k = int(round(lag / dt)) if dt > 0 else 0
    if abs(k * dt - lag) > 1e-9 * max(dt, 1e-30):
        raise ValueError(f"lag {lag} is not a multiple of dt {dt}")
    acc = 0.0
    count = 0
    for traj in trajs:
        x = traj.samples
        if k >= x.size:
            raise ValueError(f"lag {lag} out of range for trajectory of {x.size} samples")
        seg = x[: x.size - k] * x[k:]
        acc += seg.sum()
        count += seg.size
    return acc / count
