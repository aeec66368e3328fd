"""Noise traces and spectral densities: white and 1/f sample paths next to
the estimated PSDs with their crossover."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt


def render(in_dir: Path, out_file: Path) -> None:
    white = load_csv(in_dir / "white_trace.csv", ["t_s", "dphi_phi0"])
    pink = load_csv(in_dir / "pink_trace.csv", ["t_s", "dphi_phi0"])
    psds = {
        name: load_csv(in_dir / f"{name}_psd.csv", ["f_hz", "psd_phi0sq_per_hz"])
        for name in ("white", "pink", "total")
    }

    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2), constrained_layout=True)

    for ax, trace, label, color in (
        (axes[0], white, "(a) white noise trace", COLORS["blue"]),
        (axes[1], pink, "(b) 1/f noise trace", COLORS["teal"]),
    ):
        t = np.array(trace["t_s"]) * 1e3
        x = np.array(trace["dphi_phi0"]) * 1e6
        ax.plot(t, x, color=color, lw=0.6)
        ax.set_xlabel("time (ms)")
        ax.set_ylabel(r"$\delta\Phi$ ($\mu\Phi_0$)")
        ax.set_title(label)

    ax = axes[2]
    for name, color, label in (
        ("pink", COLORS["teal"], "1/f"),
        ("white", COLORS["blue"], "white"),
        ("total", COLORS["yellow"], "total"),
    ):
        f = np.array(psds[name]["f_hz"])
        s = np.array(psds[name]["psd_phi0sq_per_hz"])
        sel = f > 0
        ax.loglog(f[sel], s[sel], color=color, lw=0.8, label=label)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel(r"$S$ ($\Phi_0^2$/Hz)")
    ax.legend(fontsize=8)
    ax.set_title("(c) spectral densities")

    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
