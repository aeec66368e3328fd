"""Gate-quality summary: dephasing times next to the CZ02 infidelity sweep
(with and without decoherence), log vertical axes throughout."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt

DEPHASING_SCHEMA = ["phi_ac_phi0", "tphi_pink_s", "tphi_white_s",
                    "tphi_white_lp_s", "beta", "mode"]
FIDELITY_SCHEMA = ["phi_ac_phi0", "f_m_hz", "geff_hz", "tcz_s", "infidelity",
                   "infidelity_nodecoherence", "leakage"]


def render(in_dir: Path, out_file: Path) -> None:
    fid = load_csv(in_dir / "gate_fidelity.csv", FIDELITY_SCHEMA)
    deph_path = in_dir / "dephasing.csv"
    deph = load_csv(deph_path, DEPHASING_SCHEMA) if deph_path.exists() else None

    n_panels = 3 if deph is not None else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(3.6 * n_panels, 3.4),
                             constrained_layout=True, squeeze=False)
    axes = axes[0]

    if deph is not None:
        pac = np.array(deph["phi_ac_phi0"])
        axes[0].semilogy(pac, np.array(deph["tphi_pink_s"]) * 1e6,
                         color=COLORS["teal"])
        axes[0].set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
        axes[0].set_ylabel(r"$T_{\phi,1/f}$ ($\mu$s)")
        axes[0].set_title("(a) 1/f dephasing")
        axes[1].semilogy(pac, np.array(deph["tphi_white_s"]) * 1e6,
                         color=COLORS["blue"], label="unfiltered")
        axes[1].semilogy(pac, np.array(deph["tphi_white_lp_s"]) * 1e6,
                         color=COLORS["yellow"], label="lowpass")
        axes[1].set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
        axes[1].set_ylabel(r"$T_{\phi,w}$ ($\mu$s)")
        axes[1].legend(fontsize=8)
        axes[1].set_title("(b) white-noise dephasing")

    ax = axes[-1]
    pac = np.array(fid["phi_ac_phi0"])
    ax.semilogy(pac, np.array(fid["infidelity"]), "o-", color=COLORS["blue"],
                ms=3, label="with decoherence")
    ax.semilogy(pac, np.array(fid["infidelity_nodecoherence"]), "o-",
                color=COLORS["gray"], ms=3, label="coherent only")
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel("CZ02 infidelity")
    ax.legend(fontsize=8)
    ax.set_title("(c) gate infidelity")

    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
