"""Parametric resonance chart: modulation frequencies activating CZ02, CZ20
and iSWAP with their second harmonics, and the effective coupling."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt

SCHEMA = [
    "phi_ac_phi0", "f_cz02_hz", "f_cz20_hz", "f_iswap_hz",
    "f_cz02_2nd_hz", "f_cz20_2nd_hz", "f_iswap_2nd_hz", "geff_hz",
]


def render(in_dir: Path, out_file: Path) -> None:
    data = load_csv(in_dir / "gate_freqs.csv", SCHEMA)
    pac = np.array(data["phi_ac_phi0"])
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.4), constrained_layout=True)

    ax = axes[0]
    for col, color, label in (
        ("f_cz02_hz", COLORS["teal"], "CZ02"),
        ("f_cz20_hz", COLORS["yellow"], "CZ20"),
        ("f_iswap_hz", COLORS["blue"], "iSWAP"),
    ):
        ax.plot(pac, np.array(data[col]) / 1e9, color=color, label=label)
        ax.plot(pac, np.array(data[col.replace("_hz", "_2nd_hz")]) / 1e9,
                "--", color=color, lw=0.9)
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel(r"$f_m$ (GHz)")
    ax.legend(fontsize=8)
    ax.set_title("(a) gate resonances (dashed: 2nd harmonic)")

    ax = axes[1]
    ax.plot(pac, np.array(data["geff_hz"]) / 1e6, color=COLORS["teal"])
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel(r"$g_{eff}/2\pi$ (MHz)")
    ax.set_title("(b) effective coupling")

    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
