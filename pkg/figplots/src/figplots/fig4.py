"""Dephasing time versus modulation amplitude under 1/f flux noise; overlays
the analytic curve when a dephasing_analytic.csv sits next to the input."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt

SCHEMA = ["phi_ac_phi0", "tphi_pink_s", "tphi_white_s", "tphi_white_lp_s", "beta", "mode"]


def render(in_dir: Path, out_file: Path) -> None:
    data = load_csv(in_dir / "dephasing.csv", SCHEMA)
    fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
    label = "1/f ({})".format(data["mode"][0])
    ax.semilogy(np.array(data["phi_ac_phi0"]), np.array(data["tphi_pink_s"]) * 1e6,
                "-.", color=COLORS["teal"], label=label)
    overlay = in_dir / "dephasing_analytic.csv"
    if overlay.exists():
        ana = load_csv(overlay, SCHEMA)
        ax.semilogy(np.array(ana["phi_ac_phi0"]), np.array(ana["tphi_pink_s"]) * 1e6,
                    color=COLORS["black"], label="1/f (analytic)")
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel(r"$T_\phi$ ($\mu$s)")
    ax.legend(fontsize=8)
    ax.set_title("dephasing under 1/f flux noise")
    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
