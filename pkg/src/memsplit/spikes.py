"""Spike detection, spike-train matching and raster tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .signals import Signal

__all__ = [
    "DetectionConfig", "SpikeTrain", "MatchReport", "RasterTable",
    "detect_spikes", "compare_trains", "raster_dataset",
]


@dataclass(frozen=True)
class DetectionConfig:
    threshold_mv: float = 2.0
    refractory_ms: float = 3.0

    def __post_init__(self):
        if not self.refractory_ms > 0:
            raise ValueError(f"refractory_ms must be > 0, got {self.refractory_ms}")


@dataclass(frozen=True)
class SpikeTrain:
    neuron_id: int
    spike_times_ms: tuple = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.spike_times_ms)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("spike times must be strictly increasing")
        object.__setattr__(self, "spike_times_ms", times)

    def __len__(self):
        return len(self.spike_times_ms)


def detect_spikes(v: Signal, cfg: DetectionConfig = DetectionConfig(),
                  neuron_id: int = 0) -> SpikeTrain:
    """One spike at the first sample of every upward threshold crossing.

    A crossing needs a preceding sample below threshold, so a trace that
    starts above threshold does not count as spiking at t = 0. Crossings
    closer than ``refractory_ms`` to the last accepted spike are ignored.
    """
    x = v.values
    above = x >= cfg.threshold_mv
    onsets = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    times = v.grid.times
    kept = []
    last = -np.inf
    for k in onsets:
        # index arithmetic keeps the refractory test shift-invariant
        if (k - last) * v.grid.dt_ms >= cfg.refractory_ms - 1e-9:
            kept.append(k)
            last = k
    return SpikeTrain(neuron_id, tuple(times[kept]))


@dataclass
class MatchReport:
    neuron_id: int
    pairs: list = field(default_factory=list)  # (time in a, time in b)
    unmatched_a: int = 0
    unmatched_b: int = 0
    max_offset_ms: float = 0.0

    @property
    def matched(self) -> int:
        return len(self.pairs)

    @property
    def all_matched(self) -> bool:
        return self.unmatched_a == 0 and self.unmatched_b == 0


def compare_trains(a: SpikeTrain, b: SpikeTrain, tol_ms: float) -> MatchReport:
    """Greedy matching: closest remaining pair first, within ``tol_ms``.

    Not an optimal assignment, which is fine for trains whose spikes are
    separated by more than the tolerance.
    """
    if a.neuron_id != b.neuron_id:
        raise ValueError(f"comparing neuron {a.neuron_id} with neuron {b.neuron_id}")
    ta, tb = a.spike_times_ms, b.spike_times_ms
    candidates = sorted(
        (abs(x - y), i, j) for i, x in enumerate(ta) for j, y in enumerate(tb)
        if abs(x - y) <= tol_ms)
    used_a, used_b = set(), set()
    pairs = []
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((ta[i], tb[j]))
    pairs.sort()
    return MatchReport(
        neuron_id=a.neuron_id,
        pairs=pairs,
        unmatched_a=len(ta) - len(pairs),
        unmatched_b=len(tb) - len(pairs),
        max_offset_ms=max((abs(x - y) for x, y in pairs), default=0.0),
    )


@dataclass(frozen=True)
class RasterTable:
    neuron_id: tuple = ()
    t_ms: tuple = ()
    label: tuple = ()

    def __len__(self):
        return len(self.neuron_id)

    def rows(self):
        return list(zip(self.neuron_id, self.t_ms, self.label))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["neuron_id", "t_ms", "label"])
            for nid, t, lab in self.rows():
                w.writerow([nid, repr(float(t)), lab])


def raster_dataset(trains: Sequence[SpikeTrain], population_labels) -> RasterTable:
    """Flatten spike trains into rows sorted by neuron id, then time.

    ``population_labels`` maps neuron id to a tag (a dict or a sequence
    indexed by id).
    """
    ids = [t.neuron_id for t in trains]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate neuron ids in raster input")
    rows = []
    for train in sorted(trains, key=lambda t: t.neuron_id):
        lab = population_labels[train.neuron_id]
        rows.extend((train.neuron_id, t, lab) for t in train.spike_times_ms)
    if not rows:
        return RasterTable()
    nid, t, lab = zip(*rows)
    return RasterTable(nid, t, lab)
