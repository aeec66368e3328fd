"""Master-equation versus coherent-averaging comparison: average process
fidelity against gate time in units of the dephasing time."""

from pathlib import Path

import numpy as np

from .common import COLORS, load_csv, run_script, save
import matplotlib.pyplot as plt

SCHEMA = ["tcz_over_tphi", "f_me", "f_avg_coherent", "f_asymptotic", "gate"]


def render(in_dir: Path, out_file: Path) -> None:
    data = load_csv(in_dir / "appendix_c.csv", SCHEMA)
    gates = sorted(set(data["gate"]))
    fig, ax = plt.subplots(figsize=(4.8, 3.5), constrained_layout=True)
    colors = {"CZ02": COLORS["teal"], "CZ20": COLORS["yellow"]}
    for gate in gates:
        sel = [i for i, g in enumerate(data["gate"]) if g == gate]
        x = np.array([data["tcz_over_tphi"][i] for i in sel])
        order = np.argsort(x)
        x = x[order]
        avg = np.array([data["f_avg_coherent"][i] for i in sel])[order]
        me = np.array([data["f_me"][i] for i in sel])[order]
        c = colors.get(gate, COLORS["gray"])
        ax.plot(x, avg, "-", color=c, label=f"{gate} coherent average")
        ax.plot(x, me, "--", color=c, label=f"{gate} master equation")
    ax.set_xlabel(r"$t_{CZ} / T_\phi$")
    ax.set_ylabel("average process fidelity")
    ax.legend(fontsize=7)
    ax.set_title("averaging vs master equation")
    save(fig, out_file)


def main(argv=None):
    raise SystemExit(run_script(render, __doc__, argv))


if __name__ == "__main__":
    main()
