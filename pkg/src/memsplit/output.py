"""Delimited result files written by the CLI."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .model import VoltageEnsemble

__all__ = ["write_voltages", "read_voltages", "write_solve_log", "write_summary", "fmt"]


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(x), ".17g")


def write_voltages(path, ensembles: dict) -> None:
    """One ``t_ms`` column, then one column per (prefix, neuron)."""
    items = list(ensembles.items())
    grid = items[0][1].grid
    header = ["t_ms"]
    cols = [grid.times]
    for prefix, ens in items:
        if ens.grid != grid:
            raise ValueError("ensembles must share a grid")
        header += [f"{prefix}{i}" for i in range(len(ens))]
        cols += list(ens.values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])


def read_voltages(path):
    """Return (header, array) with one array row per CSV row."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(x) for x in row] for row in r])
    return header, data


def write_solve_log(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "change"])
        for k, c in enumerate(history, start=1):
            w.writerow([k, fmt(c)])


def write_summary(path, entries: dict) -> None:
    Path(path).write_text("".join(f"{k}: {v}\n" for k, v in entries.items()))
