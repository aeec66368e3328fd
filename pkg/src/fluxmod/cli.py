"""Command-line front end.

One subcommand per reproducible artifact: device calibration, static band,
harmonics and sweet spots, noise traces and spectra, dephasing sweeps, gate
resonances, gate-fidelity sweeps, and the ideal-Hamiltonian comparison
harness.  Configuration is a single JSON document; flags override file
values; every run echoes its fully-resolved configuration to run.json in
the output directory.  Identical config and seed give byte-identical
output files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dephasing as deph
from . import modulation as modu
from . import noise as noisemod
from . import transmon as trans
from . import twoqubit as twoq
from .errors import ConfigError, ConvergenceError, DomainError, FluxmodError

TWO_PI = 2.0 * math.pi

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4

DEFAULT_CONFIG = {
    "device": {"f_max_hz": 5.1e9, "f_min_hz": 4.1e9, "eta0_hz": 2.0e8},
    "twoqubit": {
        "device": {"f_max_hz": 5.1e9, "f_min_hz": 4.5e9, "eta0_hz": 2.0e8},
        "fixed_f_hz": 4.0e9,
        "fixed_eta_hz": 2.0e8,
        "g_hz": 7.0e6,
        "t1_f_s": 150e-6,
        "t1_t_s": 150e-6,
        "t2star_f_s": 150e-6,
        "tphi_bkgd_s": 300e-6,
        "t_ramp_s": 10e-9,
    },
    "noise": {
        "a_dc_pink_phi0": 3.63e-6,
        "a_ac_pink_phi0": 3.63e-6,
        "a_dc_white_phi0_per_sqrthz": 1.0e-8,
        "a_ac_white_phi0_per_sqrthz": 1.0e-8,
        "alpha": 1.0,
        "f_ir_hz": 1.0,
        "f_uv_hz": 1.0e10,
        "lowpass_cutoff_hz": None,
    },
    "modulation": {
        "phi_dc_phi0": 0.0,
        "phi_ac_phi0": 0.3,
        "f_m_hz": 3.0e8,
        "theta_m_rad": 0.0,
    },
    "mc": {"n_windows": 500},
    "sweep": {"start_phi0": 0.05, "stop_phi0": 0.7, "points": 14},
    "appendix": {
        "t_phi_s": 18e-6,
        "beta": 1.9,
        "f_m_hz": 3.0e8,
        "geff_min_hz": 1.0e6,
        "geff_max_hz": 12.5e6,
        "points": 6,
        "n_traj": 1024,
    },
    "noise_gen": {"dt_s": 5e-8, "n_samples": 2**21, "psd_segments": 16},
    "seed": 20220915,
}


def _deep_update(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_update(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path, overrides: dict) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        # a device section is one of two alternative shapes (band or circuit
        # energies), so a user-provided one replaces the default wholesale
        if isinstance(user.get("device"), dict):
            cfg["device"] = {}
        if isinstance(user.get("twoqubit"), dict) and isinstance(
            user["twoqubit"].get("device"), dict
        ):
            cfg["twoqubit"]["device"] = {}
        cfg = _deep_update(cfg, user)
    return _deep_update(cfg, overrides)


def device_params(section: dict) -> trans.TransmonParams:
    has_band = "f_max_hz" in section
    has_energies = "e_c_hz" in section
    if has_band == has_energies:
        raise ConfigError(
            "device must specify exactly one of a band (f_max_hz, f_min_hz, eta0_hz)"
            " or energies (e_c_hz, e_j1_hz, e_j2_hz)"
        )
    try:
        if has_energies:
            return trans.TransmonParams(
                TWO_PI * section["e_c_hz"], TWO_PI * section["e_j1_hz"], TWO_PI * section["e_j2_hz"]
            )
        band = trans.QubitBand(section["f_max_hz"], section["f_min_hz"], section["eta0_hz"])
    except (DomainError, KeyError) as exc:  # malformed device section is a config problem
        raise ConfigError(f"bad device section: {exc}") from exc
    return trans.calibrate(band)


def noise_spec(section: dict) -> noisemod.NoiseSpec:
    try:
        return noisemod.NoiseSpec(
            a_dc_pink=section["a_dc_pink_phi0"],
            a_ac_pink=section["a_ac_pink_phi0"],
            a_dc_white=section["a_dc_white_phi0_per_sqrthz"],
            a_ac_white=section["a_ac_white_phi0_per_sqrthz"],
            alpha=section["alpha"],
            f_ir=section["f_ir_hz"],
            f_uv=section["f_uv_hz"],
            lowpass_cutoff=section["lowpass_cutoff_hz"],
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def two_qubit_system(section: dict) -> twoq.TwoQubitSystem:
    params = device_params(section["device"])
    t1f, t1t = section["t1_f_s"], section["t1_t_s"]
    gphi_f = 1.0 / section["t2star_f_s"] - 0.5 / t1f
    if gphi_f < 0:
        raise ConfigError("t2star_f_s longer than the 2 t1_f_s limit")
    return twoq.TwoQubitSystem(
        fixed_f=TWO_PI * section["fixed_f_hz"],
        fixed_eta=TWO_PI * section["fixed_eta_hz"],
        tunable=params,
        g=TWO_PI * section["g_hz"],
        gamma1_f=1.0 / t1f,
        gamma1_t=1.0 / t1t,
        gammaphi_f=gphi_f,
        gammaphi_bkgd=1.0 / section["tphi_bkgd_s"],
    )


def _sweep_grid(section: dict) -> np.ndarray:
    return np.linspace(section["start_phi0"], section["stop_phi0"], int(section["points"]))


def _write_run_json(out_dir: Path, cfg: dict, command: str, extra: dict | None = None) -> None:
    payload = {"command": command, "config": cfg}
    if extra:
        payload.update(extra)
    with open(out_dir / "run.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_calibrate(cfg: dict, out: Path) -> None:
    params = device_params(cfg["device"])
    sec = cfg["device"]
    payload = {
        "e_c_hz": params.e_c / TWO_PI,
        "e_j1_hz": params.e_j1 / TWO_PI,
        "e_j2_hz": params.e_j2 / TWO_PI,
    }
    if "f_max_hz" in sec:
        payload["roundtrip_rel_err"] = {
            "f_max": trans.frequency(params, 0.0) / (TWO_PI * sec["f_max_hz"]) - 1.0,
            "f_min": trans.frequency(params, 0.5) / (TWO_PI * sec["f_min_hz"]) - 1.0,
            "eta0": trans.anharmonicity(params, 0.0) / (TWO_PI * sec["eta0_hz"]) - 1.0,
        }
    _write_json(out / "params.json", payload)


def cmd_spectrum(cfg: dict, out: Path) -> None:
    params = device_params(cfg["device"])
    phis = np.linspace(-0.6, 0.6, 241)
    freqs = trans.frequency(params, phis) / TWO_PI
    with open(out / "band.csv", "w") as fh:
        fh.write("phi_dc_phi0,f_hz\n")
        for p, f in zip(phis, freqs):
            fh.write(f"{p:.10g},{f:.10g}\n")


def cmd_fourier(cfg: dict, out: Path) -> None:
    params = device_params(cfg["device"])
    coeffs = trans.static_coeffs(params)
    phi_dc = cfg["modulation"]["phi_dc_phi0"]
    grid = np.linspace(0.0, 0.8, 161)
    with open(out / "fourier.csv", "w") as fh:
        fh.write("phi_ac_phi0,f_avg_hz,ddc_k1_radps_per_phi0,dac_k0_radps_per_phi0\n")
        for pac in grid:
            s = modu.fourier_series(coeffs, phi_dc, float(pac), K=4)
            fh.write(
                f"{pac:.10g},{s.omega[0] / TWO_PI:.10g},{s.d_dc[1]:.10g},{s.d_ac[0]:.10g}\n"
            )


def cmd_sweet_spot(cfg: dict, out: Path) -> None:
    params = device_params(cfg["device"])
    coeffs = trans.static_coeffs(params)
    phi_dc = cfg["modulation"]["phi_dc_phi0"]
    bracket = cfg.get("bracket_phi0", [0.4, 0.8] if abs(phi_dc) < 0.05 else [0.2, 0.6])
    star = modu.find_ac_sweet_spot(coeffs, phi_dc, (bracket[0], bracket[1]))
    _write_json(out / "sweet_spot.json", {
        "phi_dc_phi0": phi_dc,
        "bracket_phi0": list(bracket),
        "phi_ac_star_phi0": star,
    })


def cmd_noise_gen(cfg: dict, out: Path) -> None:
    ns = noise_spec(cfg["noise"])
    gen = cfg["noise_gen"]
    dt, n = gen["dt_s"], int(gen["n_samples"])
    seed = int(cfg["seed"])
    white = noisemod.synth_white(ns.a_dc_white, dt, n, seed, tag="cli-white")
    pink = noisemod.synth_pink(ns.a_dc_pink, ns.alpha, dt, n, seed, tag="cli-pink")
    keep = slice(0, min(n, 20000))  # trace files stay plottable
    noisemod.write_trace_csv(out / "white_trace.csv",
                             dataclasses.replace(white, samples=white.samples[keep]))
    noisemod.write_trace_csv(out / "pink_trace.csv",
                             dataclasses.replace(pink, samples=pink.samples[keep]))


def cmd_noise_psd(cfg: dict, out: Path) -> None:
    ns = noise_spec(cfg["noise"])
    gen = cfg["noise_gen"]
    dt, n, segs = gen["dt_s"], int(gen["n_samples"]), int(gen["psd_segments"])
    seed = int(cfg["seed"])
    white = noisemod.synth_white(ns.a_dc_white, dt, n, seed, tag="cli-white")
    pink = noisemod.synth_pink(ns.a_dc_pink, ns.alpha, dt, n, seed, tag="cli-pink")
    total = dataclasses.replace(pink, samples=pink.samples + white.samples)
    for name, tr in (("white", white), ("pink", pink), ("total", total)):
        f, s = noisemod.estimate_psd(tr, segs)
        noisemod.write_psd_csv(out / f"{name}_psd.csv", f, s)


def _pmap(fn, items, threads: int):
    """Map preserving order; grid points fan out to workers when asked."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _dephasing_point(args):
    cfg, mode, noise_kind, use_filter, phi_ac = args
    params = device_params(cfg["device"])
    ns = noise_spec(cfg["noise"])
    if noise_kind == "pink":
        ns = dataclasses.replace(ns, a_dc_white=0.0, a_ac_white=0.0)
    elif noise_kind == "white":
        ns = dataclasses.replace(ns, a_dc_pink=0.0, a_ac_pink=0.0)
    if use_filter and ns.lowpass_cutoff is None:
        ns = dataclasses.replace(ns, lowpass_cutoff=1.5 * cfg["modulation"]["f_m_hz"])
    rows = deph.sweep_dephasing(
        params, ns, cfg["modulation"]["f_m_hz"], [phi_ac],
        mode=mode, phi_dc=cfg["modulation"]["phi_dc_phi0"], seed=int(cfg["seed"]),
        n_windows=int(cfg["mc"]["n_windows"]) if mode == "mc" else None,
        theta_m=cfg["modulation"]["theta_m_rad"],
    )
    return rows[0]


def cmd_dephasing(cfg: dict, out: Path, mode: str, noise_kind: str, use_filter: bool,
                  threads: int = 1) -> None:
    grid = [float(p) for p in _sweep_grid(cfg["sweep"])]
    rows = _pmap(_dephasing_point,
                 [(cfg, mode, noise_kind, use_filter, p) for p in grid], threads)
    deph.write_sweep_csv(out / "dephasing.csv", rows)
    clamped = [r.phi_ac for r in rows if r.clamped]
    if clamped:
        _write_json(out / "dephasing_flags.json", {"clamped_phi_ac_phi0": clamped})


def cmd_gate_freqs(cfg: dict, out: Path) -> None:
    sys_ = two_qubit_system(cfg["twoqubit"])
    grid = _sweep_grid(cfg["sweep"])
    with open(out / "gate_freqs.csv", "w") as fh:
        fh.write(
            "phi_ac_phi0,f_cz02_hz,f_cz20_hz,f_iswap_hz,"
            "f_cz02_2nd_hz,f_cz20_2nd_hz,f_iswap_2nd_hz,geff_hz\n"
        )
        for pac in grid:
            gf = twoq.gate_frequencies(sys_, 0.0, float(pac))
            geff = twoq.effective_coupling(sys_, 0.0, float(pac), gf.f_cz02, numeric=False)
            fh.write(
                f"{pac:.10g},{gf.f_cz02:.10g},{gf.f_cz20:.10g},{gf.f_iswap:.10g},"
                f"{gf.f_cz02_2nd:.10g},{gf.f_cz20_2nd:.10g},{gf.f_iswap_2nd:.10g},"
                f"{abs(geff.closed_form) / TWO_PI:.10g}\n"
            )


def _gate_fidelity_point(args):
    cfg, phi_ac = args
    sys_ = two_qubit_system(cfg["twoqubit"])
    ns = noise_spec(cfg["noise"])
    t_ramp = cfg["twoqubit"]["t_ramp_s"]

    def dec_for(pac: float) -> twoq.DecoherenceConfig:
        freqs = twoq.gate_frequencies(sys_, 0.0, pac)
        t_gate = twoq.gate_time(sys_, pac, t_ramp)
        return twoq.gate_decoherence_config(sys_.tunable, 0.0, pac, freqs.f_cz02, ns, t_gate)

    return twoq.fidelity_sweep(sys_, dec_for, [phi_ac], t_ramp=t_ramp)[0]


def cmd_gate_fidelity(cfg: dict, out: Path, threads: int = 1) -> None:
    grid = [float(p) for p in _sweep_grid(cfg["sweep"])]
    points = _pmap(_gate_fidelity_point, [(cfg, p) for p in grid], threads)
    twoq.write_fidelity_csv(out / "gate_fidelity.csv", points)


def cmd_appendix_c(cfg: dict, out: Path) -> None:
    app = cfg["appendix"]
    params = device_params(cfg["device"])
    geffs = TWO_PI * np.geomspace(app["geff_min_hz"], app["geff_max_hz"], int(app["points"]))
    points = twoq.coherent_noise_average(
        params, app["t_phi_s"], app["beta"], app["f_m_hz"], geffs,
        n_traj=int(app["n_traj"]), seed=int(cfg["seed"]),
    )
    twoq.write_harness_csv(out / "appendix_c.csv", points)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON configuration file")
    common.add_argument("--out", type=str, default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--threads", type=int, default=1, help="worker count for sweeps")
    parser = argparse.ArgumentParser(
        prog="fluxmod",
        description="Flux-modulated transmon dephasing and parametric-gate simulations",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", parents=[common], help="fit circuit energies to a measured band")
    sub.add_parser("spectrum", parents=[common], help="static band versus DC flux")
    sub.add_parser("fourier", parents=[common],
                   help="average frequency and k=0/1 derivatives vs amplitude")
    p = sub.add_parser("sweet-spot", parents=[common], help="locate the AC sweet spot")
    p.add_argument("--phi-dc", type=float, default=None, help="parking flux (Phi0)")
    sub.add_parser("noise-gen", parents=[common], help="synthesize noise traces")
    sub.add_parser("noise-psd", parents=[common], help="estimate noise spectral densities")
    p = sub.add_parser("dephasing", parents=[common],
                       help="dephasing-time sweep vs modulation amplitude")
    p.add_argument("--mode", choices=("analytic", "mc"), default="analytic")
    p.add_argument("--noise", choices=("pink", "white", "both"), default="both")
    p.add_argument("--filter", action="store_true", help="lowpass the white noise at 1.5 f_m")
    sub.add_parser("gate-freqs", parents=[common], help="parametric resonance chart")
    sub.add_parser("gate-fidelity", parents=[common], help="CZ02 infidelity sweep")
    sub.add_parser("appendix-c", parents=[common],
                   help="master equation vs coherent averaging harness")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "sweet-spot" and args.phi_dc is not None:
            cfg = _deep_update(cfg, {"modulation": {"phi_dc_phi0": args.phi_dc}})
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "calibrate":
            cmd_calibrate(cfg, out)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, out)
        elif args.command == "fourier":
            cmd_fourier(cfg, out)
        elif args.command == "sweet-spot":
            cmd_sweet_spot(cfg, out)
        elif args.command == "noise-gen":
            cmd_noise_gen(cfg, out)
        elif args.command == "noise-psd":
            cmd_noise_psd(cfg, out)
        elif args.command == "dephasing":
            cmd_dephasing(cfg, out, args.mode, args.noise, args.filter, threads=args.threads)
        elif args.command == "gate-freqs":
            cmd_gate_freqs(cfg, out)
        elif args.command == "gate-fidelity":
            cmd_gate_fidelity(cfg, out, threads=args.threads)
        elif args.command == "appendix-c":
            cmd_appendix_c(cfg, out)
        _write_run_json(out, cfg, args.command)
    except KeyError as exc:
        json.dump(
            {"error": "ConfigError", "message": f"missing configuration key {exc}",
             "exit_code": EXIT_CONFIG},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return EXIT_CONFIG
    except FluxmodError as exc:
        code = EXIT_CONFIG if isinstance(exc, ConfigError) else (
            EXIT_CONVERGENCE if isinstance(exc, ConvergenceError) else EXIT_DOMAIN
        )
        json.dump(
            {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return code
    return EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
