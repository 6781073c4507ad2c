"""SVG figures for simulation runs (voltage traces and spike rasters)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import VoltageEnsemble  # noqa: E402
from .spikes import RasterTable  # noqa: E402

__all__ = ["plot_traces", "plot_raster", "POPULATION_COLORS"]

POPULATION_COLORS = {"E": "black", "I": "red"}

_RC = {
    "svg.hashsalt": "memsplit",  # stable element ids, byte-reproducible files
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_traces(path, ensembles: dict, labels=None, max_neurons=8) -> None:
    """Membrane voltage per neuron; one line style per ensemble."""
    styles = ["-", "--", ":", "-."]
    first = next(iter(ensembles.values()))
    n = min(len(first), max_neurons)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(n, 1, figsize=(7, 1.6 * n + 0.6), sharex=True, squeeze=False)
        t = first.grid.times
        for i in range(n):
            ax = axes[i, 0]
            for (name, ens), ls in zip(ensembles.items(), styles):
                ax.plot(t, ens.values[i], ls, lw=1.0, label=name)
            tag = labels[i] if labels else ""
            ax.set_ylabel(f"v{i} {tag}".strip() + " [mV]")
        axes[0, 0].legend(loc="upper right", frameon=False)
        axes[-1, 0].set_xlabel("t [ms]")
        fig.tight_layout()
        _save(fig, path)


def plot_raster(path, raster: RasterTable, n_neurons: int, duration_ms: float,
                marker_ms=None) -> None:
    """Spike dashes per neuron, coloured by population label."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 0.08 * n_neurons + 1.5))
        for nid, t, lab in raster.rows():
            ax.vlines(t, nid - 0.4, nid + 0.4, color=POPULATION_COLORS.get(lab, "gray"), lw=1.0)
        if marker_ms is not None:
            ax.axvline(marker_ms, color="blue", ls="--", lw=1.0)
        ax.set_xlim(0, duration_ms)
        ax.set_ylim(-1, n_neurons)
        ax.set_xlabel("t [ms]")
        ax.set_ylabel("neuron")
        fig.tight_layout()
        _save(fig, path)
