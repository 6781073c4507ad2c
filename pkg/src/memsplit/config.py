"""Scenario files: loading, validation, serialization and network assembly.

A scenario is a YAML mapping::

    name: ei_motif
    grid: {n_samples: 800, duration_ms: 80.0}
    neurons:                      # one entry per neuron or population
      - label: E
        count: 1                  # optional, replicates the entry
        capacitance: 1.0
        leak: 0.1                 # constant conductance, reversal 0
        branches:                 # internal memristive branches
          - {g_max: 1.0, v_threshold: 1.0, tau_ms: 0.0, nernst_mv: 10.0}
        input: {amplitude: 0.15, t_on_ms: 2.0, t_off_ms: 30.0}   # optional
    synapses:
      - {pre: E, post: I, g_max: 1.5, v_threshold: 1.0, tau_ms: 10.0,
         nernst_mv: 10.0, enable_after_ms: 0.0}
    solver: {alpha: 0.28, tolerance: 1.0e-6, max_iterations: 20000,
             backend: spectral, bandwidth_fraction: 1.0, rest_value: 0.0,
             divergence_guard: 1.0e6}
    detector: {threshold_mv: 2.0, refractory_ms: 3.0}
    integrator: {dt_ms: 0.005}
    compare: {tol_ms: 2.0}

Synapse ``pre``/``post`` name either a population label (all pairs between
the two groups, self-pairs excluded) or an integer neuron index. Neuron ids
are assigned in file order, populations expanded in place.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import yaml

from .errors import ConfigError, InvalidGridError, InvalidWindowError
from .integrator import IntegratorConfig
from .model import Branch, Network, Neuron
from .resolvents import BackendKind, ResolventBackend
from .signals import TimeGrid, constant, square_wave
from .solver import SolverConfig
from .spikes import DetectionConfig

__all__ = [
    "GridSpec", "BranchSpec", "StimulusSpec", "NeuronSpec", "SynapseSpec",
    "SolverSpec", "DetectorSpec", "IntegratorSpec", "CompareSpec",
    "ScenarioConfig", "load_config", "parse_config", "dump_config",
    "build_network", "builtin_scenario",
]

DEFAULT_LEAK = 1.0


@dataclass(frozen=True)
class GridSpec:
    n_samples: int
    duration_ms: float


@dataclass(frozen=True)
class BranchSpec:
    g_max: float
    v_threshold: float
    nernst_mv: float
    tau_ms: float = 0.0


@dataclass(frozen=True)
class StimulusSpec:
    amplitude: float
    t_on_ms: float
    t_off_ms: float


@dataclass(frozen=True)
class NeuronSpec:
    label: str = ""
    count: int = 1
    capacitance: float = 1.0
    leak: float = DEFAULT_LEAK
    branches: tuple = ()
    input: Optional[StimulusSpec] = None


@dataclass(frozen=True)
class SynapseSpec:
    pre: Union[str, int]
    post: Union[str, int]
    g_max: float
    v_threshold: float
    nernst_mv: float
    tau_ms: float = 0.0
    enable_after_ms: float = 0.0


@dataclass(frozen=True)
class SolverSpec:
    alpha: float = 0.28
    tolerance: float = 1e-6
    max_iterations: int = 20000
    backend: str = "spectral"
    bandwidth_fraction: float = 1.0
    rest_value: float = 0.0
    divergence_guard: float = 1e6


@dataclass(frozen=True)
class DetectorSpec:
    threshold_mv: float = 2.0
    refractory_ms: float = 3.0


@dataclass(frozen=True)
class IntegratorSpec:
    dt_ms: float = 0.005


@dataclass(frozen=True)
class CompareSpec:
    tol_ms: float = 2.0


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    neurons: tuple
    synapses: tuple = ()
    name: str = ""
    solver: SolverSpec = SolverSpec()
    detector: DetectorSpec = DetectorSpec()
    integrator: IntegratorSpec = IntegratorSpec()
    compare: CompareSpec = CompareSpec()

    @property
    def n_neurons(self) -> int:
        return sum(n.count for n in self.neurons)

    def labels(self) -> list:
        return [n.label for n in self.neurons for _ in range(n.count)]

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.grid.n_samples, self.grid.duration_ms)

    def backend(self) -> ResolventBackend:
        s = self.solver
        return ResolventBackend(BackendKind(s.backend), s.bandwidth_fraction, s.rest_value)

    def solver_config(self, **overrides) -> SolverConfig:
        s = self.solver
        kw = dict(alpha=s.alpha, tolerance=s.tolerance, max_iterations=s.max_iterations,
                  backend=self.backend(), divergence_guard=s.divergence_guard)
        kw.update(overrides)
        return SolverConfig(**kw)

    def detection_config(self) -> DetectionConfig:
        return DetectionConfig(self.detector.threshold_mv, self.detector.refractory_ms)

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(self.integrator.dt_ms, self.time_grid())

    def with_solver(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, solver=dataclasses.replace(self.solver, **changes))


# ---------------------------------------------------------------- parsing

def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


class _Reader:
    """Pulls typed fields out of a mapping, reporting errors by path."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", path)
        self.data = data
        self.path = path
        self.seen = set()

    def at(self, key):
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key, default=dataclasses.MISSING):
        self.seen.add(key)
        if key not in self.data:
            if default is dataclasses.MISSING:
                raise ConfigError("required field is missing", self.at(key))
            return default
        return self.data[key]

    def number(self, key, default=dataclasses.MISSING, *, minimum=None,
               strict_min=False, maximum=None):
        v = self.raw(key, default)
        if isinstance(v, str):
            # PyYAML resolves "1e-6" (no decimal point) to a string
            try:
                v = float(v)
            except ValueError:
                pass
        if not _is_number(v):
            raise ConfigError(f"expected a number, got {v!r}", self.at(key))
        v = float(v)
        if v != v or v in (float("inf"), float("-inf")):
            raise ConfigError("must be finite", self.at(key))
        if minimum is not None:
            if strict_min and not v > minimum:
                raise ConfigError(f"must be > {minimum:g}, got {v:g}", self.at(key))
            if not strict_min and not v >= minimum:
                raise ConfigError(f"must be >= {minimum:g}, got {v:g}", self.at(key))
        if maximum is not None and v > maximum:
            raise ConfigError(f"must be <= {maximum:g}, got {v:g}", self.at(key))
        return v

    def integer(self, key, default=dataclasses.MISSING, *, minimum=None):
        v = self.raw(key, default)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"expected an integer, got {v!r}", self.at(key))
        if minimum is not None and v < minimum:
            raise ConfigError(f"must be >= {minimum}, got {v}", self.at(key))
        return v

    def string(self, key, default=dataclasses.MISSING):
        v = self.raw(key, default)
        if not isinstance(v, str):
            raise ConfigError(f"expected a string, got {v!r}", self.at(key))
        return v

    def listing(self, key, default=dataclasses.MISSING):
        v = self.raw(key, default)
        if not isinstance(v, list):
            raise ConfigError("expected a list", self.at(key))
        return v

    def sub(self, key, optional=False):
        v = self.raw(key, None if optional else dataclasses.MISSING)
        if v is None:
            return None
        return _Reader(v, self.at(key))

    def finish(self):
        extra = sorted(set(self.data) - self.seen)
        if extra:
            raise ConfigError("unknown field", self.at(str(extra[0])))


def _parse_branch(r: _Reader) -> BranchSpec:
    spec = BranchSpec(
        g_max=r.number("g_max", minimum=0),
        v_threshold=r.number("v_threshold"),
        nernst_mv=r.number("nernst_mv"),
        tau_ms=r.number("tau_ms", 0.0, minimum=0),
    )
    r.finish()
    return spec


def _parse_stimulus(r: _Reader, duration) -> StimulusSpec:
    spec = StimulusSpec(r.number("amplitude"), r.number("t_on_ms"), r.number("t_off_ms"))
    r.finish()
    if not 0 <= spec.t_on_ms < spec.t_off_ms <= duration:
        raise ConfigError(f"need 0 <= t_on_ms < t_off_ms <= {duration:g}", r.path)
    return spec


def _parse_neuron(r: _Reader, duration) -> NeuronSpec:
    branches = tuple(_parse_branch(_Reader(b, f"{r.at('branches')}[{i}]"))
                     for i, b in enumerate(r.listing("branches", [])))
    stim = r.sub("input", optional=True)
    spec = NeuronSpec(
        label=r.string("label", ""),
        count=r.integer("count", 1, minimum=1),
        capacitance=r.number("capacitance", 1.0, minimum=0, strict_min=True),
        leak=r.number("leak", DEFAULT_LEAK, minimum=0),
        branches=branches,
        input=_parse_stimulus(stim, duration) if stim is not None else None,
    )
    r.finish()
    return spec


def _parse_ref(r: _Reader, key, labels, n_total):
    v = r.raw(key)
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise ConfigError(f"expected a population label or neuron index, got {v!r}", r.at(key))
    if isinstance(v, int) and not 0 <= v < n_total:
        raise ConfigError(f"neuron index {v} out of range 0..{n_total - 1}", r.at(key))
    if isinstance(v, str) and v not in labels:
        raise ConfigError(f"no population labelled {v!r}", r.at(key))
    return v


def _parse_synapse(r: _Reader, labels, n_total) -> SynapseSpec:
    spec = SynapseSpec(
        pre=_parse_ref(r, "pre", labels, n_total),
        post=_parse_ref(r, "post", labels, n_total),
        g_max=r.number("g_max", minimum=0),
        v_threshold=r.number("v_threshold"),
        nernst_mv=r.number("nernst_mv"),
        tau_ms=r.number("tau_ms", 0.0, minimum=0),
        enable_after_ms=r.number("enable_after_ms", 0.0, minimum=0),
    )
    r.finish()
    return spec


def parse_config(data) -> ScenarioConfig:
    """Validate a decoded YAML tree and build a :class:`ScenarioConfig`."""
    root = _Reader(data, "")
    g = root.sub("grid")
    grid = GridSpec(g.integer("n_samples", minimum=4), g.number("duration_ms", minimum=0, strict_min=True))
    g.finish()
    try:
        TimeGrid(grid.n_samples, grid.duration_ms)
    except InvalidGridError as exc:
        raise ConfigError(str(exc), "grid") from None

    raw_neurons = root.listing("neurons")
    if not raw_neurons:
        raise ConfigError("at least one neuron is required", "neurons")
    neurons = tuple(_parse_neuron(_Reader(n, f"neurons[{i}]"), grid.duration_ms)
                    for i, n in enumerate(raw_neurons))
    labels = {n.label for n in neurons if n.label}
    n_total = sum(n.count for n in neurons)
    synapses = tuple(_parse_synapse(_Reader(s, f"synapses[{i}]"), labels, n_total)
                     for i, s in enumerate(root.listing("synapses", [])))

    solver = SolverSpec()
    s = root.sub("solver", optional=True)
    if s is not None:
        backend = s.string("backend", solver.backend)
        if backend not in {k.value for k in BackendKind}:
            raise ConfigError(f"backend must be 'spectral' or 'time', got {backend!r}", s.at("backend"))
        solver = SolverSpec(
            alpha=s.number("alpha", solver.alpha, minimum=0, strict_min=True),
            tolerance=s.number("tolerance", solver.tolerance, minimum=0, strict_min=True),
            max_iterations=s.integer("max_iterations", solver.max_iterations, minimum=1),
            backend=backend,
            bandwidth_fraction=s.number("bandwidth_fraction", solver.bandwidth_fraction,
                                        minimum=0, strict_min=True, maximum=1.0),
            rest_value=s.number("rest_value", solver.rest_value),
            divergence_guard=s.number("divergence_guard", solver.divergence_guard,
                                      minimum=0, strict_min=True),
        )
        s.finish()

    detector = DetectorSpec()
    d = root.sub("detector", optional=True)
    if d is not None:
        detector = DetectorSpec(d.number("threshold_mv", detector.threshold_mv),
                                d.number("refractory_ms", detector.refractory_ms,
                                         minimum=0, strict_min=True))
        d.finish()

    integrator = IntegratorSpec()
    it = root.sub("integrator", optional=True)
    if it is not None:
        integrator = IntegratorSpec(it.number("dt_ms", integrator.dt_ms, minimum=0, strict_min=True))
        it.finish()
        if integrator.dt_ms > grid.duration_ms / grid.n_samples:
            raise ConfigError("must not exceed the grid spacing", "integrator.dt_ms")

    compare = CompareSpec()
    c = root.sub("compare", optional=True)
    if c is not None:
        compare = CompareSpec(c.number("tol_ms", compare.tol_ms, minimum=0, strict_min=True))
        c.finish()

    name = root.string("name", "")
    root.finish()
    return ScenarioConfig(grid=grid, neurons=neurons, synapses=synapses, name=name,
                          solver=solver, detector=detector, integrator=integrator,
                          compare=compare)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc.strerror}", str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"YAML parse error: {getattr(exc, 'problem', exc)}", where) from None
    return parse_config(data)


# ----------------------------------------------------------- serialization

def _spec_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if dataclasses.is_dataclass(v):
            v = _spec_dict(v)
        elif isinstance(v, tuple):
            v = [_spec_dict(x) for x in v]
        out[f.name] = v
    return out


def to_dict(cfg: ScenarioConfig) -> dict:
    d = _spec_dict(cfg)
    for n in d["neurons"]:
        if n["input"] is None:
            del n["input"]
    order = ["name", "grid", "neurons", "synapses", "solver", "detector", "integrator", "compare"]
    return {k: d[k] for k in order}


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None, width=100)


# -------------------------------------------------------------- assembly

def _resolve(ref, groups):
    return groups[ref] if isinstance(ref, str) else [ref]


def build_network(cfg: ScenarioConfig) -> Network:
    grid = cfg.time_grid()
    neurons = []
    branches = []
    groups: dict = {}
    for pi, spec in enumerate(cfg.neurons):
        for _ in range(spec.count):
            nid = len(neurons)
            if spec.input is not None:
                try:
                    i_ext = square_wave(grid, spec.input.amplitude, spec.input.t_on_ms,
                                        spec.input.t_off_ms)
                except InvalidWindowError as exc:
                    raise ConfigError(str(exc), f"neurons[{pi}].input") from None
            else:
                i_ext = constant(grid, 0.0)
            neurons.append(Neuron(nid, spec.capacitance, spec.leak, i_ext, spec.label))
            if spec.label:
                groups.setdefault(spec.label, []).append(nid)
            for b in spec.branches:
                branches.append(Branch.internal(nid, b.g_max, b.v_threshold, b.tau_ms, b.nernst_mv))
    for si, syn in enumerate(cfg.synapses):
        try:
            pres, posts = _resolve(syn.pre, groups), _resolve(syn.post, groups)
        except KeyError as exc:
            raise ConfigError(f"unknown population {exc}", f"synapses[{si}]") from None
        for post in posts:
            for pre in pres:
                if pre == post and isinstance(syn.pre, str) and isinstance(syn.post, str):
                    continue
                branches.append(Branch.synapse(pre, post, syn.g_max, syn.v_threshold,
                                               syn.tau_ms, syn.nernst_mv, syn.enable_after_ms))
    return Network(neurons, branches)


def builtin_scenario(name: str) -> Path:
    """Path of a scenario file shipped with the package (``ei_motif``, ``ping50``)."""
    ref = resources.files("memsplit") / "scenarios" / f"{name}.yaml"
    if not ref.is_file():
        raise ConfigError(f"no shipped scenario named {name!r}")
    return Path(str(ref))
