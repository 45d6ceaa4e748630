"""Time-dependent Schrodinger propagation for single noisy trajectories and
reproducible Monte Carlo ensembles.

Integration is classical RK4 at fixed step (at least 100 steps per period
of the fastest angular frequency present; the default resolves the fastest
drive phase with 200 points).  Norm is restored at sample times whenever
the drift exceeds ``renorm_threshold``; accumulated drift is reported.

Each trajectory owns its two noise streams, derived from
(master_seed, trajectory_index, channel), so ensembles are deterministic
and independent of worker count or completion order.  Observables are
evaluated in the ideal-model comparison frame against a reference
trajectory that is computed once per ensemble and shared read-only.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .hilbert import StateVector, annihilation
from .ideal_qrm import evolve_reference
from .noise import (
    BETA_CHANNEL,
    XI_CHANNEL,
    AmplitudeNoiseParams,
    OuParams,
    OuStream,
    stream_generator,
)
from .schemes import DriveTerms, FrameMap, IonSetup, SchemeConfig, build_drive_terms

__all__ = [
    "IntegratorConfig",
    "TrajectoryResult",
    "EnsembleResult",
    "fastest_angular_frequency",
    "integrator_for",
    "propagate",
    "run_trajectory",
    "run_ensemble",
]

STEPS_PER_PERIOD_FLOOR = 100
DEFAULT_STEPS_PER_PERIOD = 200
TAIL_ERROR_POPULATION = 1e-6
OBSERVABLES = ("sigma_z", "phonons", "survival", "fidelity", "parity")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed integration step, sampling stride and renormalization policy."""

    step: float
    sample_every: int
    renorm_threshold: float = 1e-12

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every must be >= 1, got {self.sample_every}")

    @property
    def sample_dt(self) -> float:
        return self.step * self.sample_every


def fastest_angular_frequency(config: SchemeConfig, ion: IonSetup,
                              noise: OuParams | None = None) -> float:
    """Fastest angular frequency present in the integrated Hamiltonian.

    Tone schemes: the fastest drive phase max_j(nu + |Delta_j|) plus a
    bound on the Hamiltonian norm (sum of Omega_j/2 and 3 sigma of the
    dephasing).  Ideal scheme: a norm bound of the Rabi Hamiltonian on the
    truncated space.
    """
    if config.kind == "ideal":
        n = ion.space.dim
        p = config.target
        return abs(p.omega) / 2.0 + p.omega0 * (n - 1) + 2.0 * p.lam * math.sqrt(n)
    phase_rate = max(ion.nu + abs(t.detuning) for t in config.tones)
    norm_bound = sum(0.5 * t.rabi for t in config.tones)
    if noise is not None:
        norm_bound += 3.0 * math.sqrt(noise.noise_power)
    return phase_rate + norm_bound


def _enforce_step_rule(step: float, wfast: float):
    if step * wfast > (2.0 * np.pi / STEPS_PER_PERIOD_FLOOR) * (1.0 + 1e-9):
        need = 2.0 * np.pi / (STEPS_PER_PERIOD_FLOOR * wfast)
        raise ValueError(
            f"step {step:.3e} s resolves the fastest period with fewer than "
            f"{STEPS_PER_PERIOD_FLOOR} points (need <= {need:.3e} s)")


def integrator_for(config: SchemeConfig, ion: IonSetup, *, step: float | None = None,
                   sample_dt: float = 5e-6, renorm_threshold: float = 1e-12,
                   noise: OuParams | None = None) -> IntegratorConfig:
    """Integrator with the default step rule, snapped to the sample grid.

    The default step resolves the fastest drive phase (nu + max |Delta_j|,
    or the Hamiltonian norm for the ideal scheme) with 200 points per
    period; it is then rounded down so that an integer number of steps
    spans ``sample_dt``.  An explicit ``step`` is validated against the
    100-steps-per-period floor.
    """
    if config.kind == "ideal":
        base_rate = fastest_angular_frequency(config, ion)
    else:
        base_rate = max(ion.nu + abs(t.detuning) for t in config.tones)
    step0 = step if step is not None else 2.0 * np.pi / (DEFAULT_STEPS_PER_PERIOD * base_rate)
    sample_every = max(1, math.ceil(sample_dt / step0 - 1e-9))
    actual = sample_dt / sample_every
    _enforce_step_rule(actual, fastest_angular_frequency(config, ion, noise))
    return IntegratorConfig(step=actual, sample_every=sample_every,
                            renorm_threshold=renorm_threshold)


def _renorm(psi: np.ndarray, threshold: float, drift_max: float,
            renorms: int) -> tuple[float, int]:
    nrm = float(np.linalg.norm(psi))
    drift = abs(nrm - 1.0)
    if drift > drift_max:
        drift_max = drift
    if drift > threshold:
        psi /= nrm
        renorms += 1
    return drift_max, renorms


def propagate(h_provider, psi0: StateVector, tcfg: IntegratorConfig,
              t_end: float) -> list[StateVector]:
    """Integrate i dpsi/dt = H(t) psi and return the sampled states.

    ``h_provider`` is either a callable t -> dense Hamiltonian or a
    constant matrix.  Constant Hamiltonians run on the compiled block
    kernel; callables are stepped generically (reference path, meant for
    validation rather than production ensembles).  The step rule is
    checked against the spectral norm of H at t = 0.
    """
    h0 = h_provider if isinstance(h_provider, np.ndarray) else h_provider(0.0)
    h0 = np.asarray(h0, dtype=complex)
    dim = h0.shape[0]
    if h0.shape != (dim, dim) or psi0.amplitudes.size != dim:
        raise ValueError("Hamiltonian and state dimensions do not match")
    _enforce_step_rule(tcfg.step, float(np.linalg.norm(h0, 2)))

    blocks = _block_form(h0) if isinstance(h_provider, np.ndarray) else None
    if blocks is not None:
        dg, de, bmat = blocks
        h = tcfg.step
        total_steps = int(round(t_end / h))
        psi = psi0.amplitudes.copy()
        out = [StateVector(psi.copy(), time=0.0)]
        drift_max, renorms = 0.0, 0
        done = 0
        while done < total_steps:
            chunk = min(tcfg.sample_every, total_steps - done)
            _backend.advance_constant(psi, h, chunk, dg, de, bmat, np.zeros(chunk))
            done += chunk
            drift_max, renorms = _renorm(psi, tcfg.renorm_threshold, drift_max, renorms)
            out.append(StateVector(psi.copy(), time=done * h))
        return out

    if isinstance(h_provider, np.ndarray):
        return _propagate_generic(lambda t: h0, psi0, tcfg, t_end)
    return _propagate_generic(h_provider, psi0, tcfg, t_end)


def _block_form(h0: np.ndarray):
    """(dg, de, B) if H is Hermitian with diagonal qubit blocks, else None."""
    dim = h0.shape[0]
    if dim % 2 != 0:
        return None
    scale = max(float(np.max(np.abs(h0))), 1e-300)
    if np.max(np.abs(h0 - h0.conj().T)) > 1e-12 * scale:
        return None
    n = dim // 2
    diag = np.real(np.diag(h0))
    if (np.max(np.abs(h0[:n, :n] - np.diag(diag[:n]))) > 0.0
            or np.max(np.abs(h0[n:, n:] - np.diag(diag[n:]))) > 0.0):
        return None
    return (np.ascontiguousarray(diag[:n]), np.ascontiguousarray(diag[n:]),
            np.ascontiguousarray(h0[n:, :n]))


def _propagate_generic(h_provider, psi0: StateVector, tcfg: IntegratorConfig,
                       t_end: float) -> list[StateVector]:
    h = tcfg.step
    total_steps = int(round(t_end / h))
    psi = psi0.amplitudes.copy()
    out = [StateVector(psi.copy(), time=0.0)]
    drift_max, renorms = 0.0, 0
    for k in range(total_steps):
        t = k * h
        k1 = -1j * (h_provider(t) @ psi)
        k2 = -1j * (h_provider(t + 0.5 * h) @ (psi + 0.5 * h * k1))
        k3 = -1j * (h_provider(t + 0.5 * h) @ (psi + 0.5 * h * k2))
        k4 = -1j * (h_provider(t + h) @ (psi + h * k3))
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % tcfg.sample_every == 0 or k + 1 == total_steps:
            drift_max, renorms = _renorm(psi, tcfg.renorm_threshold, drift_max, renorms)
            out.append(StateVector(psi.copy(), time=(k + 1) * h))
    return out


@dataclass(frozen=True)
class TrajectoryResult:
    """Observables of one noisy trajectory in the comparison frame."""

    times: np.ndarray
    sigma_z: np.ndarray
    phonons: np.ndarray
    survival: np.ndarray
    fidelity: np.ndarray
    parity: np.ndarray
    norm_drift: float
    renorm_count: int
    tail_max: float
    master_seed: int
    traj_index: int


@dataclass(frozen=True)
class EnsembleResult:
    """Per-time ensemble means and standard errors over trajectories."""

    times: np.ndarray
    means: dict[str, np.ndarray]
    sems: dict[str, np.ndarray]
    n_traj: int
    master_seed: int
    norm_drift_max: float
    renorm_total: int
    tail_max: float
    config_digest: str = ""


@dataclass(frozen=True)
class _RunPlan:
    """Everything one trajectory needs, picklable for worker processes."""

    kind: str
    n: int
    drive: DriveTerms | None
    const_dg: np.ndarray | None
    const_de: np.ndarray | None
    const_b: np.ndarray | None
    frame: FrameMap
    psi_sim0: np.ndarray
    psi0_qrm: np.ndarray
    ref_states: np.ndarray  # (n_samples + 1, 2N)
    times: np.ndarray
    step: float
    sample_every: int
    renorm_threshold: float
    xi_params: OuParams | None
    beta_params: OuParams | None
    stationary_init: bool
    master_seed: int


def _resolve_amp(config: SchemeConfig, amp: AmplitudeNoiseParams | None):
    if amp is not None:
        return amp
    for tone in config.tones:
        if tone.amplitude_noise is not None:
            return tone.amplitude_noise
    return None


def _make_plan(config: SchemeConfig, ion: IonSetup, noise: OuParams,
               amp: AmplitudeNoiseParams | None, psi0_qrm: StateVector,
               tcfg: IntegratorConfig, t_end: float, master_seed: int,
               stationary_init: bool = True) -> _RunPlan:
    n = ion.space.dim
    if psi0_qrm.fock_dim != n:
        raise ValueError(
            f"initial state has {psi0_qrm.fock_dim} Fock levels, ion setup has {n}")
    _enforce_step_rule(tcfg.step, fastest_angular_frequency(config, ion, noise))

    sample_dt = tcfg.sample_dt
    n_samples = int(round(t_end / sample_dt))
    if abs(n_samples * sample_dt - t_end) > 1e-9 * max(t_end, sample_dt):
        raise ValueError(
            f"t_end = {t_end} is not a multiple of the sample interval {sample_dt}")
    times = np.arange(n_samples + 1) * sample_dt

    frame = config.frame
    psi_sim0 = frame.inverse(psi0_qrm.amplitudes, 0.0)

    refs = evolve_reference(config.target, psi0_qrm, times)
    ref_states = np.stack([s.amplitudes for s in refs])

    if config.kind == "ideal":
        drive = None
        p = config.target
        narr = np.arange(n, dtype=float)
        const_dg = np.ascontiguousarray(-0.5 * p.omega + p.omega0 * narr)
        const_de = np.ascontiguousarray(+0.5 * p.omega + p.omega0 * narr)
        a = annihilation(ion.space)
        const_b = np.ascontiguousarray(-p.lam * (a + a.conj().T))
        xi_params = None
        beta_params = None
        if noise.diffusion != 0.0 or amp is not None:
            warnings.warn("the ideal scheme carries no noise channels; "
                          "dephasing/amplitude noise parameters are ignored")
    else:
        drive = build_drive_terms(config, ion)
        const_dg = const_de = const_b = None
        xi_params = noise
        amp_eff = _resolve_amp(config, amp)
        beta_params = amp_eff.beta_process() if amp_eff is not None else None

    return _RunPlan(
        kind=config.kind, n=n, drive=drive,
        const_dg=const_dg, const_de=const_de, const_b=const_b,
        frame=frame, psi_sim0=psi_sim0, psi0_qrm=psi0_qrm.amplitudes.copy(),
        ref_states=ref_states, times=times,
        step=tcfg.step, sample_every=tcfg.sample_every,
        renorm_threshold=tcfg.renorm_threshold,
        xi_params=xi_params, beta_params=beta_params,
        stationary_init=stationary_init, master_seed=master_seed,
    )


def _observe(plan: _RunPlan, chi: np.ndarray, sample: int, out: dict):
    n = plan.n
    pg = np.abs(chi[:n]) ** 2
    pe = np.abs(chi[n:]) ** 2
    signs = (-1.0) ** np.arange(n)
    out["sigma_z"][sample] = np.clip(pe.sum() - pg.sum(), -1.0, 1.0)
    out["phonons"][sample] = max(float(np.arange(n) @ (pg + pe)), 0.0)
    out["survival"][sample] = min(abs(np.vdot(plan.psi0_qrm, chi)) ** 2, 1.0)
    out["fidelity"][sample] = min(abs(np.vdot(plan.ref_states[sample], chi)), 1.0)
    out["parity"][sample] = np.clip(float(signs @ (pg - pe)), -1.0, 1.0)


def _execute_trajectory(plan: _RunPlan, traj_index: int) -> dict:
    n = plan.n
    sample_every = plan.sample_every
    n_samples = plan.times.size - 1
    psi = plan.psi_sim0.copy()

    xi_stream = None
    beta_stream = None
    if plan.xi_params is not None:
        xi_stream = OuStream(plan.xi_params, plan.step,
                             stream_generator(plan.master_seed, traj_index, XI_CHANNEL),
                             stationary_init=plan.stationary_init)
    if plan.beta_params is not None:
        beta_stream = OuStream(plan.beta_params, plan.step,
                               stream_generator(plan.master_seed, traj_index, BETA_CHANNEL),
                               stationary_init=plan.stationary_init)
    zeros = np.zeros(sample_every)

    out = {name: np.empty(n_samples + 1) for name in OBSERVABLES}
    drift_max, renorms, tail_max = 0.0, 0, 0.0

    chi = plan.frame.apply(psi, 0.0)
    _observe(plan, chi, 0, out)

    for s in range(n_samples):
        t0 = s * sample_every * plan.step
        xi = xi_stream.next(sample_every) if xi_stream is not None else zeros
        beta = beta_stream.next(sample_every) if beta_stream is not None else zeros
        if plan.kind == "ideal":
            _backend.advance_constant(psi, plan.step, sample_every,
                                      plan.const_dg, plan.const_de, plan.const_b, xi)
        else:
            d = plan.drive
            _backend.advance_tones(psi, t0, plan.step, sample_every, d.nu,
                                   d.dmats, d.om_half, d.delta, d.phi,
                                   d.group, d.carrier, xi, beta)
        drift_max, renorms = _renorm(psi, plan.renorm_threshold, drift_max, renorms)
        t = plan.times[s + 1]
        tail = (abs(psi[n - 1]) ** 2 + abs(psi[2 * n - 1]) ** 2
                + abs(psi[n - 2]) ** 2 + abs(psi[2 * n - 2]) ** 2)
        tail_max = max(tail_max, float(tail))
        if tail > TAIL_ERROR_POPULATION:
            raise RuntimeError(
                f"population {tail:.2e} in the top two Fock levels at t = {t:.3e} s; "
                "increase fock_dim")
        chi = plan.frame.apply(psi, t)
        _observe(plan, chi, s + 1, out)

    out["norm_drift"] = drift_max
    out["renorm_count"] = renorms
    out["tail_max"] = tail_max
    return out


_WORKER_PLAN: _RunPlan | None = None


def _worker_init(plan: _RunPlan):
    global _WORKER_PLAN
    _WORKER_PLAN = plan


def _worker_run(traj_index: int) -> dict:
    return _execute_trajectory(_WORKER_PLAN, traj_index)


def run_trajectory(config: SchemeConfig, ion: IonSetup, noise: OuParams,
                   amp: AmplitudeNoiseParams | None, psi0_qrm: StateVector,
                   tcfg: IntegratorConfig, t_end: float, seed: int,
                   traj_index: int = 0, stationary_init: bool = True) -> TrajectoryResult:
    """Integrate one noisy trajectory and return frame-mapped observables.

    ``psi0_qrm`` is given in the ideal-model basis and mapped into the
    scheme's simulation frame through the inverse frame map at t = 0.
    Deterministic given (seed, traj_index, config, tcfg).
    """
    plan = _make_plan(config, ion, noise, amp, psi0_qrm, tcfg, t_end, seed,
                      stationary_init)
    raw = _execute_trajectory(plan, traj_index)
    return TrajectoryResult(
        times=plan.times,
        sigma_z=raw["sigma_z"], phonons=raw["phonons"], survival=raw["survival"],
        fidelity=raw["fidelity"], parity=raw["parity"],
        norm_drift=raw["norm_drift"], renorm_count=raw["renorm_count"],
        tail_max=raw["tail_max"], master_seed=seed, traj_index=traj_index,
    )


def run_ensemble(config: SchemeConfig, ion: IonSetup, noise: OuParams,
                 amp: AmplitudeNoiseParams | None, psi0_qrm: StateVector,
                 tcfg: IntegratorConfig, t_end: float, n_traj: int,
                 master_seed: int, threads: int = 1,
                 stationary_init: bool = True, config_digest: str = "") -> EnsembleResult:
    """Monte Carlo ensemble of independent trajectories.

    Trajectory k draws its noise from streams keyed by
    (master_seed, k, channel); aggregation runs in trajectory-index order,
    so the result is bit-identical for any ``threads`` (0 = one worker per
    CPU).
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    plan = _make_plan(config, ion, noise, amp, psi0_qrm, tcfg, t_end, master_seed,
                      stationary_init)

    if threads == 0:
        threads = os.cpu_count() or 1
    threads = min(threads, n_traj)

    if threads > 1:
        import multiprocessing as mp

        # keep BLAS single-threaded in the workers; trajectories are the
        # parallel unit
        os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
        os.environ.setdefault("OMP_NUM_THREADS", "1")
        # fork shares the plan with the workers and does not re-import
        # __main__ the way spawn does
        method = "fork" if "fork" in mp.get_all_start_methods() else "spawn"
        ctx = mp.get_context(method)
        with ctx.Pool(threads, initializer=_worker_init, initargs=(plan,)) as pool:
            raws = pool.map(_worker_run, range(n_traj), chunksize=1)
    else:
        raws = [_execute_trajectory(plan, k) for k in range(n_traj)]

    means: dict[str, np.ndarray] = {}
    sems: dict[str, np.ndarray] = {}
    for name in OBSERVABLES:
        stack = np.stack([raw[name] for raw in raws])
        means[name] = stack.mean(axis=0)
        if n_traj > 1 and np.any(stack != stack[0]):
            sems[name] = stack.std(axis=0, ddof=1) / math.sqrt(n_traj)
        else:
            # single or bitwise-identical trajectories: no spread
            sems[name] = np.zeros_like(means[name])

    return EnsembleResult(
        times=plan.times, means=means, sems=sems, n_traj=n_traj,
        master_seed=master_seed,
        norm_drift_max=max(raw["norm_drift"] for raw in raws),
        renorm_total=sum(raw["renorm_count"] for raw in raws),
        tail_max=max(raw["tail_max"] for raw in raws),
        config_digest=config_digest,
    )
