"""Config-driven experiment runner.

Subcommands: ``run`` (ensemble simulation -> CSV + metadata),
``noise-stats`` (OU channel diagnostics), ``sweep-zeta`` (amplitude-noise
strength sweep) and ``validate`` (config and regime check only).

Configs are flat key=value INI sections; frequencies are entered in Hz
(as quoted in the literature, e.g. nu_hz = 1.5e6 for 2 pi x 1.5 MHz) and
converted to angular units exactly once, at parse time.  Every key has a
default matching the reference trapped-ion parameter set.  ``run`` writes
a metadata JSON next to the CSV containing the fully resolved config;
passing that metadata file back as --config reproduces the CSV
byte-identically.

Flags can also be set through environment variables with the IONQRM_
prefix (IONQRM_CONFIG, IONQRM_OUT, IONQRM_TRAJECTORIES, IONQRM_SEED,
IONQRM_THREADS); explicit flags win.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .dynamics import EnsembleResult, integrator_for, run_ensemble
from .hilbert import FockSpace, fock_state, product_state, qubit_state
from .ideal_qrm import QrmParams
from .noise import (
    AmplitudeNoiseParams,
    OuParams,
    autocorrelation_estimate,
    generate_trajectory,
    ou_params_from_coherence,
)
from .schemes import (
    IonSetup,
    RegimeError,
    dd_standing_wave_tones,
    dd_traveling_tones,
    ideal_scheme,
    standard_tones,
    validate_regime,
)

TWO_PI = 2.0 * math.pi

CSV_COLUMNS = (
    "t_s", "sigma_z_mean", "sigma_z_sem", "n_mean", "n_sem",
    "survival_mean", "survival_sem", "fidelity_mean", "fidelity_sem",
    "parity_mean", "parity_sem",
)

# Defaults follow the reference trapped-ion parameter set: nu = 2pi x 1.5
# MHz, eta = 0.04, Omega = 2pi x 50 kHz, carrier eta_c = 0.01 and Omega_D
# = 2pi x 200 kHz, tau = 100 us, T2 = 3 ms, tau_beta = 1 ms, 100
# trajectories over 6 ms.
DEFAULT_CONFIG: dict[str, dict] = {
    "experiment": {
        "scheme": "standard",
        "t_end_s": 6e-3,
        "sample_dt_s": 5e-6,
        "step_s": 0.0,          # 0 = automatic step rule
        "n_traj": 100,
        "master_seed": 1,
        "threads": 0,           # 0 = one worker per CPU
    },
    "qrm": {
        "omega_hz": 0.0,
        "omega0_hz": 1000.0,
        "lambda_hz": 1000.0,
    },
    "ion": {
        "nu_hz": 1.5e6,
        "fock_dim": 60,
        "fock_guard": 15,
    },
    "tones": {
        "rabi_hz": 50e3,
        "eta": 0.04,
        "omega_d_hz": 200e3,
        "eta_c": 0.01,
    },
    "noise": {
        "tau_s": 100e-6,
        "t2_s": 3e-3,
        "diffusion": 0.0,       # explicit c in s^-3; 0 = derive from t2_s
        "zeta": 5e-4,
        "tau_beta_s": 1e-3,
        "stationary_init": True,
        "stats_trajectories": 2000,
        "stats_dt_s": 1e-6,
        "stats_t_s": 6e-3,
    },
    "initial_state": {
        "qubit": "g",
        "fock": 0,
    },
    "output": {
        "csv": "",
    },
}

_INT_KEYS = {"n_traj", "master_seed", "threads", "fock_dim", "fock_guard",
             "fock", "stats_trajectories"}
_STR_KEYS = {"scheme", "qubit", "csv"}
_BOOL_KEYS = {"stationary_init"}


class ConfigError(ValueError):
    pass


def default_config() -> dict[str, dict]:
    return {sec: dict(vals) for sec, vals in DEFAULT_CONFIG.items()}


def _coerce(section: str, key: str, raw):
    if key in _STR_KEYS:
        return str(raw)
    if key in _BOOL_KEYS:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_KEYS:
            return int(str(raw))
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def load_config(path: str | Path) -> dict[str, dict]:
    """Parse an INI config, or the metadata JSON of a previous run."""
    text = Path(path).read_text()
    cfg = default_config()
    if text.lstrip().startswith("{"):
        meta = json.loads(text)
        incoming = meta.get("config")
        if incoming is None:
            raise ConfigError(f"{path}: metadata file has no 'config' block")
    else:
        parser = configparser.ConfigParser()
        parser.read_string(text, source=str(path))
        incoming = {sec: dict(parser.items(sec)) for sec in parser.sections()}

    for section, values in incoming.items():
        if section not in cfg:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            cfg[section][key] = _coerce(section, key, raw)
    return cfg


def config_digest(cfg: dict[str, dict]) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def build_simulation(cfg: dict[str, dict]):
    """Instantiate the scheme, ion, noise, initial state and integrator."""
    exper = cfg["experiment"]
    qrm = cfg["qrm"]
    ionc = cfg["ion"]
    tones = cfg["tones"]
    noisec = cfg["noise"]
    init = cfg["initial_state"]

    target = QrmParams(omega=TWO_PI * qrm["omega_hz"],
                       omega0=TWO_PI * qrm["omega0_hz"],
                       lam=TWO_PI * qrm["lambda_hz"])
    space = FockSpace(ionc["fock_dim"], ionc["fock_guard"])
    ion = IonSetup(nu=TWO_PI * ionc["nu_hz"], space=space)

    if noisec["diffusion"] > 0.0:
        dephasing = OuParams(tau=noisec["tau_s"], diffusion=noisec["diffusion"])
    else:
        dephasing = ou_params_from_coherence(noisec["tau_s"], noisec["t2_s"])

    kind = exper["scheme"]
    rabi = TWO_PI * tones["rabi_hz"]
    omega_d = TWO_PI * tones["omega_d_hz"]
    carrier_rabi = omega_d + target.omega
    amp = None
    if kind.startswith("dd") and noisec["zeta"] > 0.0:
        amp = AmplitudeNoiseParams(zeta=noisec["zeta"], tau_beta=noisec["tau_beta_s"],
                                   carrier_rabi=carrier_rabi)

    if kind == "standard":
        scheme = standard_tones(target, ion, rabi=rabi, eta=tones["eta"])
    elif kind == "dd_standing_wave":
        scheme = dd_standing_wave_tones(target, ion, rabi=rabi, eta=tones["eta"],
                                        dd_drive=omega_d, carrier_eta=tones["eta_c"],
                                        amp_noise=amp)
    elif kind == "dd_traveling":
        scheme = dd_traveling_tones(target, ion, rabi=rabi, eta=tones["eta"],
                                    dd_drive=omega_d, carrier_eta=tones["eta_c"],
                                    amp_noise=amp)
    elif kind == "ideal":
        scheme = ideal_scheme(target)
    else:
        raise ConfigError(f"unknown scheme {kind!r}")

    psi0 = product_state(qubit_state(init["qubit"]), fock_state(space, init["fock"]))
    step = exper["step_s"] if exper["step_s"] > 0 else None
    tcfg = integrator_for(scheme, ion, step=step, sample_dt=exper["sample_dt_s"],
                          noise=dephasing)
    return scheme, ion, dephasing, amp, psi0, tcfg


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path: Path, result: EnsembleResult):
    rows = [",".join(CSV_COLUMNS)]
    m, s = result.means, result.sems
    for i, t in enumerate(result.times):
        rows.append(",".join(_fmt(v) for v in (
            t, m["sigma_z"][i], s["sigma_z"][i], m["phonons"][i], s["phonons"][i],
            m["survival"][i], s["survival"][i], m["fidelity"][i], s["fidelity"][i],
            m["parity"][i], s["parity"][i])))
    path.write_text("\n".join(rows) + "\n", newline="")


def metadata_path(csv_path: Path) -> Path:
    if csv_path.suffix == ".csv":
        return csv_path.with_suffix(".meta.json")
    return csv_path.with_name(csv_path.name + ".meta.json")


def write_metadata(path: Path, cfg: dict, result: EnsembleResult, checks,
                   wall_time: float):
    meta = {
        "tool": "ionqrm",
        "version": __version__,
        "backend": backend_name(),
        "config": cfg,
        "config_digest": config_digest(cfg),
        "master_seed": result.master_seed,
        "n_traj": result.n_traj,
        "noise_streams": "Philox via SeedSequence(master_seed, "
                         "spawn_key=(trajectory, channel)); channel 0 = xi, 1 = beta",
        "rows": int(result.times.size),
        "norm_drift_max": result.norm_drift_max,
        "renorm_total": result.renorm_total,
        "tail_max": result.tail_max,
        "regime_checks": [c.describe() for c in checks],
        "wall_time_s": wall_time,
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "trajectories", None) is not None:
        cfg["experiment"]["n_traj"] = args.trajectories
    if getattr(args, "seed", None) is not None:
        cfg["experiment"]["master_seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        cfg["experiment"]["threads"] = args.threads
    return cfg


def _run_ensemble_from_config(cfg: dict) -> tuple[EnsembleResult, list]:
    scheme, ion, dephasing, amp, psi0, tcfg = build_simulation(cfg)
    checks = validate_regime(scheme, ion, dephasing)
    hard = [c for c in checks if c.level == "error"]
    if hard:
        raise RegimeError("; ".join(c.describe() for c in hard))
    exper = cfg["experiment"]
    result = run_ensemble(
        scheme, ion, dephasing, amp, psi0, tcfg, exper["t_end_s"],
        n_traj=exper["n_traj"], master_seed=exper["master_seed"],
        threads=exper["threads"],
        stationary_init=cfg["noise"]["stationary_init"],
        config_digest=config_digest(cfg))
    return result, checks


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(args.out or cfg["output"]["csv"] or "")
    if str(out) in ("", "."):
        print("error: no output path (--out or [output] csv)", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    result, checks = _run_ensemble_from_config(cfg)
    wall = time.perf_counter() - t0
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, result)
    write_metadata(metadata_path(out), cfg, result, checks, wall)
    for c in checks:
        if c.level != "ok":
            print(c.describe())
    print(f"wrote {result.times.size} rows to {out} "
          f"({result.n_traj} trajectories, {wall:.1f} s, backend {backend_name()})")
    return 0


def cmd_validate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    scheme, ion, dephasing, _, _, tcfg = build_simulation(cfg)
    checks = validate_regime(scheme, ion, dephasing)
    for c in checks:
        print(c.describe())
    print(f"integrator: step {tcfg.step:.3e} s, {tcfg.sample_every} steps/sample")
    if any(c.level == "error" for c in checks):
        print("validation FAILED", file=sys.stderr)
        return 2
    print("config ok")
    return 0


def cmd_noise_stats(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    noisec = cfg["noise"]
    if noisec["diffusion"] > 0.0:
        params = OuParams(tau=noisec["tau_s"], diffusion=noisec["diffusion"])
    else:
        params = ou_params_from_coherence(noisec["tau_s"], noisec["t2_s"])
    n_traj = noisec["stats_trajectories"]
    dt = noisec["stats_dt_s"]
    length = int(round(noisec["stats_t_s"] / dt)) + 1
    seed = cfg["experiment"]["master_seed"]

    trajs = [generate_trajectory(params, dt, length, seed, traj_index=k)
             for k in range(n_traj)]
    power = params.noise_power
    est = {lag: autocorrelation_estimate(trajs, lag)
           for lag in (0.0, params.tau, 2.0 * params.tau)}
    targets = {0.0: power, params.tau: power * math.exp(-1.0),
               2.0 * params.tau: power * math.exp(-2.0)}

    print(f"OU statistics over {n_traj} trajectories x {length} samples, dt = {dt:g} s")
    print(f"{'lag (s)':>12} {'estimate':>16} {'closed form':>16}")
    for lag in est:
        print(f"{lag:>12g} {est[lag]:>16.6e} {targets[lag]:>16.6e}")

    if power == 0.0:
        ok = all(v == 0.0 for v in est.values())
    else:
        ok = not (n_traj >= 2000 and abs(est[0.0] - power) / power > 0.10)
    if not ok:
        print("variance estimate deviates from c*tau/2 by more than 10%",
              file=sys.stderr)
        return 3
    return 0


def crossover_zeta(cfg: dict) -> float:
    """Analytic amplitude-noise crossover zeta* = 1/(Omega_c sqrt(tau T2))."""
    noisec = cfg["noise"]
    tau = noisec["tau_s"]
    if noisec["diffusion"] > 0.0:
        power = OuParams(tau, noisec["diffusion"]).noise_power
        t2 = 1.0 / (tau * power)
    else:
        t2 = noisec["t2_s"]
    carrier_rabi = TWO_PI * (cfg["tones"]["omega_d_hz"] + cfg["qrm"]["omega_hz"])
    return 1.0 / (carrier_rabi * math.sqrt(tau * t2))


def cmd_sweep_zeta(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if not cfg["experiment"]["scheme"].startswith("dd"):
        print("error: sweep-zeta requires a dd scheme", file=sys.stderr)
        return 1
    zetas = [float(z) for z in args.zetas.split(",") if z.strip()] if args.zetas else []
    outdir = Path(args.out or cfg["output"]["csv"] or "zeta_sweep")
    outdir.mkdir(parents=True, exist_ok=True)

    zeta_star = crossover_zeta(cfg)
    summary = ["label,zeta,fidelity_mean,fidelity_sem"]
    summary.append(f"crossover_zeta_star,{_fmt(zeta_star)},,")
    for zeta in zetas:
        sub = {sec: dict(vals) for sec, vals in cfg.items()}
        sub["noise"]["zeta"] = zeta
        t0 = time.perf_counter()
        result, checks = _run_ensemble_from_config(sub)
        wall = time.perf_counter() - t0
        csv_path = outdir / f"zeta_{zeta:.6g}.csv"
        write_csv(csv_path, result)
        write_metadata(metadata_path(csv_path), sub, result, checks, wall)
        summary.append(f"run,{_fmt(zeta)},{_fmt(result.means['fidelity'][-1])},"
                       f"{_fmt(result.sems['fidelity'][-1])}")
        print(f"zeta = {zeta:g}: fidelity(t_end) = {result.means['fidelity'][-1]:.6f} "
              f"+- {result.sems['fidelity'][-1]:.2e}")

    (outdir / "summary.csv").write_text("\n".join(summary) + "\n", newline="")
    print(f"crossover zeta* = {zeta_star:.6e}")
    return 0


def _env_default(name: str, cast=str):
    value = os.environ.get(f"IONQRM_{name}")
    return cast(value) if value is not None else None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ionqrm",
        description="Trapped-ion quantum Rabi model simulator "
                    "(deep strong coupling, OU dephasing/amplitude noise)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out):
        p.add_argument("--config", default=_env_default("CONFIG"),
                       help="experiment config (INI) or metadata JSON of a prior run")
        if needs_out:
            p.add_argument("--out", default=_env_default("OUT"),
                           help="output CSV path (run) or directory (sweep-zeta)")
        p.add_argument("--trajectories", type=int,
                       default=_env_default("TRAJECTORIES", int),
                       help="override the ensemble size")
        p.add_argument("--seed", type=int, default=_env_default("SEED", int),
                       help="override the master seed")
        p.add_argument("--threads", type=int, default=_env_default("THREADS", int),
                       help="trajectory workers (0 = auto)")

    p_run = sub.add_parser("run", help="run the configured ensemble, write CSV + metadata")
    add_common(p_run, needs_out=True)
    p_run.set_defaults(func=cmd_run)

    p_stats = sub.add_parser("noise-stats", help="OU channel statistics vs closed form")
    add_common(p_stats, needs_out=False)
    p_stats.set_defaults(func=cmd_noise_stats)

    p_sweep = sub.add_parser("sweep-zeta", help="amplitude-noise strength sweep")
    add_common(p_sweep, needs_out=True)
    p_sweep.add_argument("--zetas", default="",
                         help="comma-separated zeta values (may be empty)")
    p_sweep.set_defaults(func=cmd_sweep_zeta)

    p_val = sub.add_parser("validate", help="parse the config and check the regime")
    add_common(p_val, needs_out=False)
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    if args.config is None:
        print("error: --config is required (or set IONQRM_CONFIG)", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except RegimeError as exc:
        print(f"regime validation error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
