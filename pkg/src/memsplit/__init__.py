"""Simulation of memristive neuromorphic circuits by variable-metric
forward-backward splitting, with an Adams-Bashforth cross-check."""

from .config import build_network, builtin_scenario, load_config
from .integrator import IntegratorConfig, integrate_ab2
from .model import Branch, ConductanceElement, Network, Neuron, VoltageEnsemble
from .resolvents import BackendKind, ResolventBackend
from .signals import Signal, TimeGrid, make_grid, square_wave
from .solver import SolverConfig, SolveResult, solve, vmfbs_step
from .spikes import DetectionConfig, SpikeTrain, compare_trains, detect_spikes, raster_dataset

__version__ = "0.1.0"
