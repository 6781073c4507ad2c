"""Memristive network model: neurons, gated conductance branches, synapses.

Every current source, internal or synaptic, is a :class:`Branch`: a
conductance ``g_max * ReLU(v_x - v_threshold)`` in series with a battery
``nernst_mv``. ``v_x`` is the voltage of ``gate_source`` passed through a
first-order low-pass of timescale ``tau_gate_ms`` (zero means the raw
voltage). Internal branches gate on their own neuron, synapses on the
presynaptic one. The leak is a constant conductance with reversal 0.

Per neuron the network residual is

    c D v + G_tot(v) * v - (N_tot(v) + i_ext)

with ``G_tot = leak + sum g_j`` and ``N_tot = sum g_j * nernst_j`` over the
branches targeting that neuron.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IncompatibleSignalsError, ModelError
from .resolvents import SPECTRAL, ResolventBackend, apply_derivative, apply_lowpass
from .signals import Signal, TimeGrid

__all__ = [
    "ConductanceElement", "Branch", "Neuron", "Network", "VoltageEnsemble",
    "gate_conductance", "total_conductance", "total_drive", "network_residual",
    "CompiledNetwork",
]


@dataclass(frozen=True)
class ConductanceElement:
    g_max: float
    v_threshold: float
    tau_gate_ms: float = 0.0

    def __post_init__(self):
        if not self.g_max >= 0:
            raise ModelError(f"g_max must be >= 0, got {self.g_max}")
        if not self.tau_gate_ms >= 0:
            raise ModelError(f"tau_gate_ms must be >= 0, got {self.tau_gate_ms}")


@dataclass(frozen=True)
class Branch:
    element: ConductanceElement
    nernst_mv: float
    gate_source: int
    target: int
    enable_after_ms: float = 0.0

    def __post_init__(self):
        if not self.enable_after_ms >= 0:
            raise ModelError(f"enable_after_ms must be >= 0, got {self.enable_after_ms}")

    @classmethod
    def internal(cls, neuron: int, g_max, v_threshold, tau_gate_ms, nernst_mv):
        return cls(ConductanceElement(g_max, v_threshold, tau_gate_ms),
                   nernst_mv, neuron, neuron)

    @classmethod
    def synapse(cls, pre: int, post: int, g_max, v_threshold, tau_gate_ms,
                nernst_mv, enable_after_ms=0.0):
        return cls(ConductanceElement(g_max, v_threshold, tau_gate_ms),
                   nernst_mv, pre, post, enable_after_ms)


@dataclass(frozen=True)
class Neuron:
    id: int
    capacitance: float
    leak_conductance: float
    i_ext: Signal
    label: str = ""

    def __post_init__(self):
        if not self.capacitance > 0:
            raise ModelError(f"neuron {self.id}: capacitance must be > 0")
        if not self.leak_conductance >= 0:
            raise ModelError(f"neuron {self.id}: leak_conductance must be >= 0")


@dataclass(frozen=True)
class Network:
    neurons: tuple
    branches: tuple = ()
    _compiled: "CompiledNetwork" = field(default=None, init=False, repr=False,
                                         compare=False)

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.neurons:
            raise ModelError("network has no neurons")
        for idx, nrn in enumerate(self.neurons):
            if nrn.id != idx:
                raise ModelError(f"neuron ids must be dense 0..N-1; position {idx} has id {nrn.id}")
        grid = self.neurons[0].i_ext.grid
        if any(n.i_ext.grid != grid for n in self.neurons):
            raise ModelError("all neuron inputs must share one time grid")
        for b in self.branches:
            for role, ref in (("gate_source", b.gate_source), ("target", b.target)):
                if not 0 <= ref < len(self.neurons):
                    raise ModelError(f"branch {role} {ref} does not name a neuron")

    @property
    def grid(self) -> TimeGrid:
        return self.neurons[0].i_ext.grid

    @property
    def size(self) -> int:
        return len(self.neurons)

    @property
    def labels(self) -> list:
        return [n.label for n in self.neurons]

    def compiled(self) -> "CompiledNetwork":
        if self._compiled is None:
            object.__setattr__(self, "_compiled", CompiledNetwork(self))
        return self._compiled


class VoltageEnsemble:
    """One signal per neuron on a shared grid, stored as an (N, n) array.

    Also used for the derived per-neuron conductance, drive and residual
    signals.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: TimeGrid, values):
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != grid.n_samples:
            raise IncompatibleSignalsError(
                f"expected shape (N, {grid.n_samples}), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("VoltageEnsemble is immutable")

    @classmethod
    def rest(cls, grid: TimeGrid, n_neurons: int, value: float = 0.0):
        return cls(grid, np.full((n_neurons, grid.n_samples), float(value)))

    @classmethod
    def from_signals(cls, signals: Sequence[Signal]):
        grid = signals[0].grid
        if any(s.grid != grid for s in signals):
            raise IncompatibleSignalsError("signals live on different grids")
        return cls(grid, np.stack([s.values for s in signals]))

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i) -> Signal:
        return Signal(self.grid, self.values[i])

    def signals(self) -> list:
        return [self[i] for i in range(len(self))]


def _check_ensemble(net: Network, voltages: VoltageEnsemble):
    if voltages.grid != net.grid:
        raise IncompatibleSignalsError("voltage grid differs from network grid")
    if len(voltages) != net.size:
        raise ModelError(f"expected {net.size} voltage signals, got {len(voltages)}")


def _enable_mask(grid: TimeGrid, enable_after_ms: float) -> np.ndarray:
    return grid.times >= enable_after_ms - 1e-9 * grid.dt_ms


def gate_conductance(branch: Branch, voltages: VoltageEnsemble,
                     backend: ResolventBackend = SPECTRAL) -> Signal:
    if not 0 <= branch.gate_source < len(voltages) or not 0 <= branch.target < len(voltages):
        raise ModelError("branch references a neuron outside the ensemble")
    el = branch.element
    v_gate = apply_lowpass(voltages.values[branch.gate_source], voltages.grid,
                           el.tau_gate_ms, backend)
    g = el.g_max * np.maximum(v_gate - el.v_threshold, 0.0)
    if branch.enable_after_ms > 0:
        g = np.where(_enable_mask(voltages.grid, branch.enable_after_ms), g, 0.0)
    return Signal(voltages.grid, g)


class CompiledNetwork:
    """Vectorized evaluation of ``G_tot`` and ``N_tot`` for a whole network.

    Branches sharing (gate_source, tau, threshold, enable time) share one
    activation row ``ReLU(v_x - v_th) * mask``; the per-target sums are two
    (N, K) coefficient matrices applied to the K activation rows. Branches
    with zero ``g_max`` are dropped.
    """

    def __init__(self, net: Network):
        self.grid = net.grid
        self.size = net.size
        self.capacitance = np.array([n.capacitance for n in net.neurons])
        self.leak = np.array([n.leak_conductance for n in net.neurons])
        self.i_ext = np.stack([n.i_ext.values for n in net.neurons])
        keys: dict = {}
        g_coef: dict = {}
        n_coef: dict = {}
        for b in net.branches:
            el = b.element
            if el.g_max == 0:
                continue
            key = (b.gate_source, float(el.tau_gate_ms), float(el.v_threshold),
                   float(b.enable_after_ms))
            k = keys.setdefault(key, len(keys))
            g_coef[(b.target, k)] = g_coef.get((b.target, k), 0.0) + el.g_max
            n_coef[(b.target, k)] = n_coef.get((b.target, k), 0.0) + el.g_max * b.nernst_mv
        n_keys = len(keys)
        self.g_weights = np.zeros((self.size, n_keys))
        self.n_weights = np.zeros((self.size, n_keys))
        for (tgt, k), g in g_coef.items():
            self.g_weights[tgt, k] = g
        for (tgt, k), gn in n_coef.items():
            self.n_weights[tgt, k] = gn
        self._weights = np.vstack([self.g_weights, self.n_weights])
        key_list = list(keys)
        self.key_source = np.array([k[0] for k in key_list], dtype=int)
        self.key_tau = np.array([k[1] for k in key_list])
        self.key_threshold = np.array([k[2] for k in key_list])
        enable = np.array([k[3] for k in key_list])
        self.key_gated_late = enable > 0
        self.key_mask = np.stack([_enable_mask(self.grid, e) for e in enable]) \
            if n_keys else np.ones((0, self.grid.n_samples), dtype=bool)
        # one filtered row per distinct (source, tau), tau > 0
        pairs = sorted({(int(s), float(t)) for s, t in zip(self.key_source, self.key_tau) if t > 0})
        self.filter_pairs = pairs
        pair_index = {p: i for i, p in enumerate(pairs)}
        self.key_row = np.array(
            [pair_index.get((int(s), float(t)), -1) for s, t in zip(self.key_source, self.key_tau)],
            dtype=int)

    def gate_voltages(self, v: np.ndarray, backend: ResolventBackend) -> np.ndarray:
        """Gate voltage per activation key, shape (K, n)."""
        out = np.empty((len(self.key_source), v.shape[1]))
        raw = self.key_row < 0
        out[raw] = v[self.key_source[raw]]
        if self.filter_pairs:
            src = np.array([p[0] for p in self.filter_pairs], dtype=int)
            tau = np.array([p[1] for p in self.filter_pairs])
            filtered = apply_lowpass(v[src], self.grid, tau, backend)
            out[~raw] = filtered[self.key_row[~raw]]
        return out

    def activations(self, v: np.ndarray, backend: ResolventBackend) -> np.ndarray:
        act = self.gate_voltages(v, backend)
        act -= self.key_threshold[:, None]
        np.maximum(act, 0.0, out=act)
        late = self.key_gated_late
        if late.any():
            act[late] *= self.key_mask[late]
        return act

    def conductance_and_drive(self, v: np.ndarray, backend: ResolventBackend):
        both = self._weights @ self.activations(v, backend)
        g_tot = both[:self.size]
        g_tot += self.leak[:, None]
        return g_tot, both[self.size:]

    def residual(self, v: np.ndarray, backend: ResolventBackend) -> np.ndarray:
        g_tot, n_tot = self.conductance_and_drive(v, backend)
        dv = apply_derivative(v, self.grid, backend)
        return self.capacitance[:, None] * dv + g_tot * v - (n_tot + self.i_ext)


def total_conductance(net: Network, voltages: VoltageEnsemble,
                      backend: ResolventBackend = SPECTRAL) -> VoltageEnsemble:
    _check_ensemble(net, voltages)
    g_tot, _ = net.compiled().conductance_and_drive(voltages.values, backend)
    return VoltageEnsemble(net.grid, g_tot)


def total_drive(net: Network, voltages: VoltageEnsemble,
                backend: ResolventBackend = SPECTRAL) -> VoltageEnsemble:
    _check_ensemble(net, voltages)
    _, n_tot = net.compiled().conductance_and_drive(voltages.values, backend)
    return VoltageEnsemble(net.grid, n_tot)


def network_residual(net: Network, voltages: VoltageEnsemble,
                     backend: ResolventBackend = SPECTRAL) -> VoltageEnsemble:
    """Residual of the network equation; ``D`` follows ``backend``."""
    _check_ensemble(net, voltages)
    return VoltageEnsemble(net.grid, net.compiled().residual(voltages.values, backend))
