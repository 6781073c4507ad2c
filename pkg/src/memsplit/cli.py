"""Command-line interface: ``memsplit simulate | compare | validate``.

Exit codes: 0 success, 1 divergence or comparison failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, build_network, builtin_scenario, load_config
from .errors import ConfigError, DivergenceError, MemsplitError
from .integrator import integrate_ab2
from .output import fmt, write_solve_log, write_summary, write_voltages
from .spikes import compare_trains, detect_spikes, raster_dataset

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _err(msg):
    print(f"memsplit: {msg}", file=sys.stderr)


def _config_path(arg: str) -> Path:
    """A file path, or the bare name of a shipped scenario."""
    p = Path(arg)
    if p.exists() or p.suffix or "/" in arg:
        return p
    try:
        return builtin_scenario(arg)
    except ConfigError:
        return p


def _load(args) -> ScenarioConfig:
    cfg = load_config(_config_path(args.config))
    changes = {}
    if getattr(args, "backend", None):
        changes["backend"] = args.backend
    if getattr(args, "alpha", None) is not None:
        changes["alpha"] = args.alpha
    if getattr(args, "tol", None) is not None:
        changes["tolerance"] = args.tol
    if changes:
        cfg = cfg.with_solver(**changes)
        cfg.solver_config()  # validates the overrides
    return cfg


def _progress(enabled, every=100):
    if not enabled:
        return None

    def cb(k, change):
        if k % every == 0:
            print(f"iter {k:6d}  change {change:.3e}", file=sys.stderr)
    return cb


def _trains(ens, cfg: ScenarioConfig):
    det = cfg.detection_config()
    return [detect_spikes(ens[i], det, neuron_id=i) for i in range(len(ens))]


def _marker(cfg: ScenarioConfig):
    late = [s.enable_after_ms for s in cfg.synapses if s.enable_after_ms > 0]
    return max(late) if late else None


def cmd_simulate(args) -> int:
    cfg = _load(args)
    net = build_network(cfg)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        from .solver import solve
        result = solve(net, cfg.solver_config(), callback=_progress(args.verbose))
    except DivergenceError as exc:
        _err(f"VMFBS diverged: {exc}")
        return EXIT_FAIL
    wall = time.perf_counter() - t0

    labels = cfg.labels()
    raster = raster_dataset(_trains(result.voltages, cfg), labels)
    write_voltages(out / "voltages.csv", {"v": result.voltages})
    raster.to_csv(out / "spikes.csv")
    write_solve_log(out / "solve_log.csv", result.iterate_change_history)
    summary = {
        "scenario": cfg.name,
        "converged": str(result.converged).lower(),
        "iterations": result.iterations_used,
        "final_change": repr(result.iterate_change_history[-1]),
        "alpha": repr(cfg.solver.alpha),
        "tolerance": repr(cfg.solver.tolerance),
        "backend": cfg.solver.backend,
        "n_neurons": net.size,
        "n_spikes": len(raster),
        "residual_norm_max": repr(float(np.max(result.final_residual_norm))),
        "residual_norms": ",".join(repr(float(x)) for x in result.final_residual_norm),
        "wall_time_s": f"{wall:.3f}",
    }
    for i, w in enumerate(result.warnings):
        summary[f"warning_{i}"] = w
    write_summary(out / "run_summary.txt", summary)

    if args.trace or args.raster:
        from . import plotting
        if args.trace:
            plotting.plot_traces(out / "trace.svg", {"VMFBS": result.voltages}, labels)
        if args.raster:
            plotting.plot_raster(out / "raster.svg", raster, net.size,
                                 cfg.grid.duration_ms, marker_ms=_marker(cfg))
    state = "converged" if result.converged else "NOT converged"
    print(f"{cfg.name}: {state} after {result.iterations_used} iterations "
          f"({wall:.1f} s), {len(raster)} spikes -> {out}")
    if not result.converged:
        _err("solver hit max_iterations before reaching the tolerance")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    net = build_network(cfg)
    tol_ms = args.tol_ms if args.tol_ms is not None else cfg.compare.tol_ms
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    from .solver import solve
    vm = ab = None
    vm_error = ab_error = None
    try:
        vm = solve(net, cfg.solver_config(), callback=_progress(args.verbose))
    except DivergenceError as exc:
        vm_error = str(exc)
        print(f"VMFBS DIVERGED: {exc}")
    try:
        ab = integrate_ab2(net, cfg.integrator_config())
        print("AB2 completed")
    except DivergenceError as exc:
        ab_error = str(exc)
        print(f"AB2 DIVERGED: {exc}")

    series = {}
    if vm is not None:
        series["vmfbs_"] = vm.voltages
    if ab is not None:
        series["ab2_"] = ab
    if series:
        write_voltages(out / "voltages.csv", series)

    labels = cfg.labels()
    rows = []
    ok = vm is not None and ab is not None
    if vm is not None and not vm.converged:
        print(f"VMFBS NOT CONVERGED after {vm.iterations_used} iterations")
        ok = False
    if vm is not None and ab is not None:
        for a, b in zip(_trains(vm.voltages, cfg), _trains(ab, cfg)):
            rep = compare_trains(a, b, tol_ms)
            passed = rep.all_matched and len(a) == len(b)
            ok &= passed
            rows.append((a.neuron_id, labels[a.neuron_id], len(a), len(b), rep.matched,
                         rep.max_offset_ms, "PASS" if passed else "FAIL"))
            print(f"neuron {a.neuron_id} ({labels[a.neuron_id] or '-'}): "
                  f"{'PASS' if passed else 'FAIL'}  vmfbs={len(a)} ab2={len(b)} "
                  f"matched={rep.matched} max_offset={rep.max_offset_ms:.3f} ms")
    with open(out / "compare.csv", "w") as fh:
        fh.write("neuron_id,label,vmfbs_spikes,ab2_spikes,matched,max_offset_ms,status\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]},{r[2]},{r[3]},{r[4]},{fmt(r[5])},{r[6]}\n")
    summary = {
        "scenario": cfg.name,
        "tol_ms": repr(tol_ms),
        "vmfbs": "diverged" if vm_error else ("converged" if vm.converged else "not_converged"),
        "ab2": "diverged" if ab_error else "ok",
        "result": "pass" if ok else "fail",
    }
    if vm_error:
        summary["vmfbs_error"] = vm_error
    if ab_error:
        summary["ab2_error"] = ab_error
    write_summary(out / "compare_summary.txt", summary)
    print(f"{cfg.name}: compare {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validate(args) -> int:
    cfg = load_config(_config_path(args.config))
    net = build_network(cfg)
    print(f"{args.config}: ok ({cfg.name or 'unnamed'}; {net.size} neurons, "
          f"{len(net.branches)} branches, grid {cfg.grid.n_samples} x "
          f"{cfg.grid.duration_ms / cfg.grid.n_samples:g} ms)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memsplit",
                                description="Memristive neuromorphic circuit simulator (VMFBS).")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--backend", choices=["spectral", "time"])
        sp.add_argument("--alpha", type=float, help="VMFBS step size")
        sp.add_argument("--tol", type=float, help="relative iterate-change tolerance")
        sp.add_argument("-v", "--verbose", action="store_true", help="print solver progress")

    s = sub.add_parser("simulate", help="solve a scenario with VMFBS")
    s.add_argument("config")
    s.add_argument("-o", "--output", default="out")
    s.add_argument("--raster", action="store_true", help="write raster.svg")
    s.add_argument("--trace", action="store_true", help="write trace.svg")
    solver_flags(s)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="cross-check VMFBS against Adams-Bashforth")
    c.add_argument("config")
    c.add_argument("-o", "--output", default="out")
    c.add_argument("--tol-ms", type=float, dest="tol_ms")
    solver_flags(c)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (ValueError, MemsplitError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
