"""Dephasing time versus modulation amplitude under white flux noise, with
the lowpass-filtered curve that restores the AC sweet spot."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt

SCHEMA = ["phi_ac_phi0", "tphi_pink_s", "tphi_white_s", "tphi_white_lp_s", "beta", "mode"]


def render(in_dir: Path, out_file: Path) -> None:
    data = load_csv(in_dir / "dephasing.csv", SCHEMA)
    pac = np.array(data["phi_ac_phi0"])
    fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
    ax.semilogy(pac, np.array(data["tphi_white_s"]) * 1e6,
                color=COLORS["yellow"], label="white (dc+ac)")
    ax.semilogy(pac, np.array(data["tphi_white_lp_s"]) * 1e6, "--",
                color=COLORS["black"], label="lowpass filtered")
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel(r"$T_\phi$ ($\mu$s)")
    ax.legend(fontsize=8)
    mode = data["mode"][0]
    ax.set_title(f"dephasing under white flux noise ({mode})")
    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
