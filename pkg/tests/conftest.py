import numpy as np
import pytest

from memsplit import Branch, Network, Neuron, make_grid, square_wave
from memsplit.signals import Signal, constant

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def band_limited(grid, rng, n_modes=5, amplitude=1.0):
    """Random real signal built from the lowest ``n_modes`` Fourier bins."""
    t = grid.times
    T = grid.duration_ms
    out = np.zeros(grid.n_samples)
    for m in range(1, n_modes + 1):
        a, b = rng.normal(size=2) * amplitude / m
        out += a * np.sin(2 * np.pi * m * t / T) + b * np.cos(2 * np.pi * m * t / T)
    return Signal(grid, out)


def leak_neuron_net(grid, i_ext, c=1.0, g0=1.0):
    return Network([Neuron(0, c, g0, i_ext)])


def motif_net(grid=None, n=800, T=80.0, filtered_gate=True):
    """Two-neuron excitatory/inhibitory motif with the shipped calibration."""
    grid = grid or make_grid(n, T)
    i_e = square_wave(grid, 0.15, 2.0, min(30.0, grid.duration_ms))
    neurons = [Neuron(0, 1.0, 0.1, i_e, "E"), Neuron(1, 1.0, 0.1, constant(grid, 0.0), "I")]
    tau_syn = 10.0 if filtered_gate else 0.0
    branches = []
    for k in (0, 1):
        branches.append(Branch.internal(k, 1.0, 1.0, 0.0, 10.0))
        branches.append(Branch.internal(k, 10.0, 1.0, 10.0, -10.0))
    branches.append(Branch.synapse(0, 1, 1.5, 1.0, tau_syn, 10.0))
    branches.append(Branch.synapse(1, 0, 1.5, 1.0, 10.0, -10.0))
    return Network(neurons, branches)
