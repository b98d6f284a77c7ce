"""Figure rendering: panels by experiment, rows by series, plus a sidecar.

A figure spec (TOML) names the input CSVs and which columns to plot:

    output = "sweep.png"
    series = ["mean_intent_i", "mean_eps_i"]

    [[panels]]
    title = "x = 0.1"
    csv = "runs/x01.csv"

The rendered grid has one row per series and one column per panel; every
plotted point is also written to ``<output>.data.csv`` with columns
``panel,series,round,value`` (the data sidecar).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import tomli

__all__ = [
    "Panel",
    "FigureSpec",
    "MissingColumnError",
    "EmptyInputError",
    "read_batch_csv",
    "load_spec",
    "render",
    "main",
]

SERIES_LABELS = {
    "mean_intent_i": "cooperation intention",
    "mean_intent_j": "opponent intention",
    "mean_coop_i": "realized cooperation",
    "mean_coop_j": "opponent realized cooperation",
    "mean_eps_i": "risk capital",
    "mean_eps_j": "opponent risk capital",
    "mean_reward_i": "reward",
    "mean_reward_j": "opponent reward",
}


class MissingColumnError(ValueError):
    """A requested series is absent from an input CSV."""

    def __init__(self, column: str, path: str) -> None:
        self.column = column
        super().__init__(f"column {column!r} missing from {path}")


class EmptyInputError(ValueError):
    """An input CSV carries no data rows."""


@dataclass(frozen=True)
class Panel:
    title: str
    csv: str


@dataclass(frozen=True)
class FigureSpec:
    panels: tuple[Panel, ...]
    series: tuple[str, ...]
    output: str
    title: str = ""

    def __post_init__(self) -> None:
        if not self.panels:
            raise ValueError("a figure needs at least one panel")
        if not self.series:
            raise ValueError("a figure needs at least one series")


def read_batch_csv(path: str) -> dict[str, np.ndarray]:
    """Parse an engine batch CSV (comment header, then named columns)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise EmptyInputError(f"cannot read {path}: {exc}") from exc
    rows = [ln for ln in lines if not ln.startswith("#")]
    if len(rows) < 2:
        raise EmptyInputError(f"{path} has no data rows")
    header = rows[0].split(",")
    data = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    if data.shape[1] != len(header):
        raise EmptyInputError(f"{path} has ragged rows")
    return {name: data[:, idx] for idx, name in enumerate(header)}


def load_spec(path: str) -> FigureSpec:
    with open(path, "rb") as fh:
        raw = tomli.load(fh)
    try:
        panels = tuple(Panel(title=str(p.get("title", p["csv"])), csv=str(p["csv"]))
                       for p in raw["panels"])
        series = tuple(str(s) for s in raw["series"])
        output = str(raw["output"])
    except KeyError as exc:
        raise ValueError(f"figure spec {path!r} missing key {exc}") from exc
    return FigureSpec(panels=panels, series=series, output=output,
                      title=str(raw.get("title", "")))


def _sidecar_path(output: str) -> str:
    return f"{output}.data.csv"


def render(spec: FigureSpec) -> str:
    """Draw the figure and write the sidecar; returns the image path."""
    tables = []
    for panel in spec.panels:
        table = read_batch_csv(panel.csv)
        for name in spec.series:
            if name not in table:
                raise MissingColumnError(name, panel.csv)
        if "round" not in table:
            raise MissingColumnError("round", panel.csv)
        tables.append(table)

    n_rows, n_cols = len(spec.series), len(spec.panels)
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(3.2 * n_cols, 2.4 * n_rows),
        sharex=True, sharey="row", squeeze=False,
    )
    sidecar = ["panel,series,round,value"]
    for col, (panel, table) in enumerate(zip(spec.panels, tables)):
        rounds = table["round"]
        for row, name in enumerate(spec.series):
            ax = axes[row][col]
            values = table[name]
            ax.plot(rounds, values, lw=1.5)
            ax.set_ylim(-0.05, 1.05)
            if row == 0:
                ax.set_title(panel.title)
            if row == n_rows - 1:
                ax.set_xlabel("round")
            if col == 0:
                ax.set_ylabel(SERIES_LABELS.get(name, name))
            for t, v in zip(rounds, values):
                sidecar.append(f"{panel.title},{name},{t:g},{v:.6f}")
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    out_dir = os.path.dirname(spec.output)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    fig.savefig(spec.output, dpi=150, metadata=_stable_metadata(spec.output))
    plt.close(fig)
    with open(_sidecar_path(spec.output), "w", encoding="utf-8") as fh:
        fh.write("\n".join(sidecar) + "\n")
    return spec.output


def _stable_metadata(output: str):
    """Strip volatile metadata so identical inputs give identical bytes."""
    ext = os.path.splitext(output)[1].lower()
    if ext == ".png":
        return {"Software": "arctic-lab-figures"}
    if ext == ".svg":
        return {"Date": None}
    return None


def main() -> None:
    parser = argparse.ArgumentParser(
        prog="arctic-lab-figures",
        description="Render multi-panel figures from arctic-lab batch CSVs",
    )
    parser.add_argument("spec", help="figure spec TOML")
    args = parser.parse_args()
    try:
        path = render(load_spec(args.spec))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    print(path)
    print(_sidecar_path(path))


if __name__ == "__main__":
    main()
