"""Shared plumbing for the figure scripts: CSV loading with schema checks,
argument handling, and deterministic figure output."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# fixed style so reruns are pixel-identical and panels look uniform
plt.rcParams.update({
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
})

COLORS = {
    "teal": "#2a9d8f",
    "blue": "#33658a",
    "yellow": "#e9c46a",
    "gray": "#6c757d",
    "black": "#222222",
    "red": "#e76f51",
}


class SchemaError(Exception):
    """Input file missing, empty, or missing a required column."""


@dataclass
class FigureJob:
    figure_id: str
    inputs: dict[str, Path]
    output: Path
    log_y: bool = False
    style: dict = field(default_factory=dict)


def load_csv(path: Path, required: list[str]) -> dict[str, list]:
    if not path.exists():
        raise SchemaError(f"missing input file {path}")
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path} has no header row")
        for col in required:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path} is missing required column '{col}'")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    out: dict[str, list] = {name: [] for name in reader.fieldnames}
    for row in rows:
        for name in reader.fieldnames:
            val = row[name]
            try:
                out[name].append(float(val))
            except ValueError:
                out[name].append(val)
    return out


def load_json(path: Path) -> dict:
    if not path.exists():
        raise SchemaError(f"missing input file {path}")
    with open(path) as fh:
        return json.load(fh)


def save(fig, output: Path) -> None:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, format=output.suffix.lstrip(".") or "png")
    plt.close(fig)


def standard_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="in_dir", required=True, help="artifact directory")
    parser.add_argument("--out", dest="out_file", required=True, help="output image path")
    return parser


def run_script(render_fn, description: str, argv=None) -> int:
    args = standard_parser(description).parse_args(argv)
    try:
        render_fn(Path(args.in_dir), Path(args.out_file))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
