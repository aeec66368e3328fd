"""Band structure and modulation derivatives: static band vs DC flux, average
frequency vs modulation amplitude with the AC sweet spot marked, and the
k = 0/1 flux derivatives whose common zero defines it."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, load_json, run_script, save
import matplotlib.pyplot as plt


def render(in_dir: Path, out_file: Path) -> None:
    band = load_csv(in_dir / "band.csv", ["phi_dc_phi0", "f_hz"])
    four = load_csv(
        in_dir / "fourier.csv",
        ["phi_ac_phi0", "f_avg_hz", "ddc_k1_radps_per_phi0", "dac_k0_radps_per_phi0"],
    )
    star = None
    ss_path = in_dir / "sweet_spot.json"
    if ss_path.exists():
        star = load_json(ss_path).get("phi_ac_star_phi0")

    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2), constrained_layout=True)

    ax = axes[0]
    phi = np.array(band["phi_dc_phi0"])
    f = np.array(band["f_hz"]) / 1e9
    ax.plot(phi, f, color=COLORS["blue"])
    for spot in (-0.5, 0.0, 0.5):
        sel = np.argmin(np.abs(phi - spot))
        ax.plot(phi[sel], f[sel], "s", color=COLORS["black"], ms=5)
    ax.set_xlabel(r"$\Phi_{dc}$ ($\Phi_0$)")
    ax.set_ylabel("frequency (GHz)")
    ax.set_title("(a) static band, DC sweet spots")

    ax = axes[1]
    pac = np.array(four["phi_ac_phi0"])
    favg = np.array(four["f_avg_hz"]) / 1e9
    ax.plot(pac, favg, color=COLORS["teal"])
    k = int(np.argmin(favg)) if star is None else int(np.argmin(np.abs(pac - star)))
    ax.plot(pac[k], favg[k], "D", color=COLORS["black"], ms=6)
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel("average frequency (GHz)")
    ax.set_title("(b) AC sweet spot at the minimum")

    ax = axes[2]
    ax.plot(pac, np.array(four["dac_k0_radps_per_phi0"]) / 1e9,
            color=COLORS["teal"], label=r"$\partial\bar\omega/\partial\Phi_{ac}$")
    ax.plot(pac, np.array(four["ddc_k1_radps_per_phi0"]) / 1e9,
            color=COLORS["yellow"], label=r"$\partial\omega_1/\partial\Phi_{dc}$")
    ax.axhline(0.0, color=COLORS["gray"], lw=0.8)
    if star is not None:
        ax.axvline(star, color=COLORS["black"], lw=0.8, ls=":")
    ax.set_xlabel(r"$\Phi_{ac}$ ($\Phi_0$)")
    ax.set_ylabel(r"derivative (Grad/s per $\Phi_0$)")
    ax.legend(fontsize=8)
    ax.set_title("(c) harmonic derivatives")

    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
