import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from memsplit.integrator import integrate_ab2
from memsplit.signals import Signal, constant, make_grid
from memsplit.solver import SolverConfig, solve
from memsplit.spikes import (DetectionConfig, RasterTable, SpikeTrain, compare_trains,
                             detect_spikes, raster_dataset)

from conftest import motif_net

GRID = make_grid(1000, 100.0)


def bump(center, width=1.0, height=5.0):
    return height * np.exp(-((GRID.times - center) / width) ** 2)


def test_rest_has_no_spikes():
    assert len(detect_spikes(constant(GRID, 0.0))) == 0


def test_single_bump_one_spike_at_crossing():
    v = bump(40.0)
    train = detect_spikes(Signal(GRID, v), DetectionConfig(threshold_mv=2.0))
    k = int(np.flatnonzero(v >= 2.0)[0])
    assert train.spike_times_ms == (GRID.times[k],)


def test_start_above_threshold_is_not_a_spike():
    v = np.full(GRID.n_samples, 5.0)
    assert len(detect_spikes(Signal(GRID, v))) == 0


def test_refractory_suppresses_close_crossings():
    v = bump(20.0, 0.3) + bump(21.5, 0.3) + bump(30.0, 0.3)
    times = detect_spikes(Signal(GRID, v), DetectionConfig(2.0, 3.0)).spike_times_ms
    assert len(times) == 2 and times[1] > 29.0


def test_motif_detection_counts_agree_with_ab2():
    net = motif_net()
    vm = solve(net, SolverConfig()).voltages
    ab = integrate_ab2(net)
    for k in (0, 1):
        assert len(detect_spikes(vm[k])) == len(detect_spikes(ab[k])) > 0


trace = arrays(float, (300,), elements=st.floats(-5, 10, allow_nan=False))


@settings(max_examples=80, deadline=None)
@given(trace, st.integers(1, 100), st.floats(0.1, 6.0))
def test_translation_consistent(vals, m, refractory):
    grid = make_grid(400, 40.0)
    base = np.concatenate([vals, np.zeros(100)])
    # quiet lead-in so the shifted copy sees the same crossings
    base[0] = -1.0
    shifted = np.concatenate([np.full(m, -1.0), base[:-m]])
    cfg = DetectionConfig(2.0, refractory)
    a = detect_spikes(Signal(grid, base), cfg).spike_times_ms
    b = detect_spikes(Signal(grid, shifted), cfg).spike_times_ms
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert y - x == pytest.approx(m * grid.dt_ms, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(trace, st.floats(0.1, 6.0))
def test_refractory_guarantee(vals, refractory):
    grid = make_grid(300, 30.0)
    t = detect_spikes(Signal(grid, vals), DetectionConfig(2.0, refractory)).spike_times_ms
    assert all(b - a >= refractory - 1e-9 for a, b in zip(t, t[1:]))


def test_compare_identical():
    a = SpikeTrain(3, (1.0, 5.0, 9.5))
    r = compare_trains(a, a, 0.5)
    assert r.matched == 3 and r.all_matched and r.max_offset_ms == 0.0


def test_compare_shifted_beyond_tolerance():
    a = SpikeTrain(0, (1.0, 10.0, 20.0))
    b = SpikeTrain(0, tuple(t + 2 * 0.5 for t in a.spike_times_ms))
    r = compare_trains(a, b, 0.5)
    assert r.matched == 0 and r.unmatched_a == 3 and r.unmatched_b == 3


def test_compare_partial_and_offset():
    r = compare_trains(SpikeTrain(0, (1.0, 10.0)), SpikeTrain(0, (1.4, 30.0, 31.0)), 1.0)
    assert r.pairs == [(1.0, 1.4)]
    assert r.unmatched_a == 1 and r.unmatched_b == 2
    assert r.max_offset_ms == pytest.approx(0.4)


def test_compare_requires_same_neuron():
    with pytest.raises(ValueError):
        compare_trains(SpikeTrain(0, ()), SpikeTrain(1, ()), 1.0)


sorted_times = st.lists(st.floats(0, 100, allow_nan=False), max_size=12, unique=True).map(sorted)


@settings(max_examples=100, deadline=None)
@given(sorted_times, sorted_times, st.floats(0.01, 5.0))
def test_compare_symmetric_matched_count(ta, tb, tol):
    if len(ta) != len(tb):
        tb = (tb + ta)[:len(ta)]
        tb = sorted(set(tb))
        ta = ta[:len(tb)]
    a, b = SpikeTrain(0, tuple(ta)), SpikeTrain(0, tuple(tb))
    assert compare_trains(a, b, tol).matched == compare_trains(b, a, tol).matched


def test_spike_train_requires_increasing_times():
    with pytest.raises(ValueError):
        SpikeTrain(0, (2.0, 1.0))


def test_raster_empty():
    assert len(raster_dataset([], [])) == 0


def test_raster_motif_order(tmp_path):
    trains = [SpikeTrain(1, (15.0,)), SpikeTrain(0, (13.6, 40.0))]
    r = raster_dataset(trains, ["E", "I"])
    assert r.rows() == [(0, 13.6, "E"), (0, 40.0, "E"), (1, 15.0, "I")]
    path = tmp_path / "spikes.csv"
    r.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["neuron_id", "t_ms", "label"]
    assert rows[1:] == [["0", "13.6", "E"], ["0", "40.0", "E"], ["1", "15.0", "I"]]


def test_raster_rejects_duplicates():
    with pytest.raises(ValueError):
        raster_dataset([SpikeTrain(0, (1.0,)), SpikeTrain(0, (2.0,))], ["E"])


def test_raster_label_mapping():
    r = raster_dataset([SpikeTrain(7, (1.0,))], {7: "I"})
    assert isinstance(r, RasterTable) and r.label == ("I",)
