"""``cellopt`` command line: validate | baseline | optimize | schedule.

Every run writes into an output directory (``--out``, default
``$CELLOPT_OUT/<command>-seed<seed>``, with ``CELLOPT_OUT`` defaulting to
``./cellopt-runs``) and finishes by writing ``manifest.json`` atomically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, feasibility, render
from . import io as cio
from .errors import (
    CelloptError,
    DegenerateKpiError,
    DimensionError,
    InfeasibleError,
    PlanningError,
    ScheduleError,
    SpecError,
)
from .evolve import GaConfig, build_baseline, run
from .kpi import KPI_NAMES, BaselineStats
from .model import chromosome_dimensions, validate_spec
from .pipeline import Evaluator

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4
EXIT_INTERNAL = 5

OUT_ENV = "CELLOPT_OUT"
MANIFEST_VERSION = 1
# the exact solver enumerates dispatch orders; 13 covers the bundled case study
CLI_MAX_OPS = 16


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, SpecError):
        return EXIT_IO if exc.code in ("NOT_FOUND", "IO_ERROR") else EXIT_VALIDATION
    if isinstance(exc, (InfeasibleError, PlanningError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (DimensionError, ScheduleError, DegenerateKpiError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_INTERNAL


def _weights(text: str) -> tuple[float, ...]:
    try:
        w = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if len(w) != len(KPI_NAMES):
        raise argparse.ArgumentTypeError(f"expected {len(KPI_NAMES)} weights, got {len(w)}")
    return w


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cellopt", description="Layout, allocation and scheduling of human-robot work-cells.")
    p.add_argument("--version", action="version", version=f"cellopt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def spec_arg(sp):
        sp.add_argument("spec", help="spec file (YAML), or @estop for the bundled case study")

    def out_arg(sp):
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV}/<command>-seed<seed>)")

    sp = sub.add_parser("validate", help="check a spec file and print diagnostics")
    spec_arg(sp)

    sp = sub.add_parser("baseline", help="random-search baseline statistics")
    spec_arg(sp)
    sp.add_argument("--samples", type=int, default=124)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=_positive_int, default=1)
    out_arg(sp)

    sp = sub.add_parser("optimize", help="run the genetic algorithm")
    spec_arg(sp)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--baseline", type=Path, help="baseline stats JSON from `cellopt baseline`")
    src.add_argument("--auto-baseline", type=int, metavar="N", help="build an N-sample baseline first (default 124)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--baseline-seed", type=int, help="seed of the auto baseline (default seed + 1)")
    sp.add_argument("--w", "--weights", dest="weights", type=_weights, help="KPI weights, e.g. 0.5,0.3,0.1,0.1")
    sp.add_argument("--n-parents", type=int)
    sp.add_argument("--n-children", type=int)
    sp.add_argument("--n-iterations", type=int)
    sp.add_argument("--mu0", type=float, help="initial per-gene mutation rate")
    sp.add_argument("--sigma0", type=float, help="initial mutation step, meters")
    sp.add_argument("--beta", type=float, help="selection temperature")
    sp.add_argument("--stagnation-limit", type=int)
    sp.add_argument("--crossover", choices=("inherit", "redraw"), help="allocation crossover mode")
    sp.add_argument("--exact", action="store_true", help="schedule every candidate with the exact solver")
    sp.add_argument("--jobs", type=_positive_int, default=1)
    out_arg(sp)

    sp = sub.add_parser("schedule", help="plan and schedule one chromosome")
    spec_arg(sp)
    sp.add_argument("--chromosome", type=Path, required=True)
    sp.add_argument("--exact", action="store_true", help="branch-and-bound instead of list scheduling")
    sp.add_argument("--max-ops", type=int, default=CLI_MAX_OPS)
    sp.add_argument("--trace", action="store_true", help="also write the sampled motion trace CSV")
    out_arg(sp)
    return p


def _load(arg: str):
    path = cio.resolve_spec_path(arg)
    text = cio._read_text(path)
    spec = cio.parse_spec(text, str(path))
    diags = validate_spec(spec)
    if diags:
        raise SpecError("; ".join(f"{d.code}: {d.message}" for d in diags))
    return path, text, spec


def _out_dir(args, seed: Optional[int] = None) -> Path:
    if args.out is not None:
        out = args.out
    else:
        root = Path(os.environ.get(OUT_ENV, "cellopt-runs"))
        out = root / (args.command if seed is None else f"{args.command}-seed{seed}")
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Run:
    """Collects artifacts and writes the manifest last."""

    def __init__(self, args, spec_path: Path, spec_text: str, out: Path):
        self.out = out
        self.outputs: dict[str, str] = {}
        self.manifest = {
            "manifest_version": MANIFEST_VERSION,
            "tool": "cellopt",
            "version": __version__,
            "command": args.command,
            "argv": args.argv,
            "spec": {"path": str(spec_path), "sha256": hashlib.sha256(spec_text.encode("utf-8")).hexdigest()},
            "python": platform.python_version(),
            "numpy": np.__version__,
            "started": datetime.now(timezone.utc).isoformat(),
        }
        self._t0 = time.perf_counter()

    def write(self, key: str, name: str, text: str) -> None:
        cio.write_atomic(self.out / name, text)
        self.outputs[key] = name

    def finish(self, **extra) -> None:
        self.manifest.update(extra)
        self.manifest["finished"] = datetime.now(timezone.utc).isoformat()
        self.manifest["elapsed_s"] = round(time.perf_counter() - self._t0, 3)
        self.manifest["outputs"] = dict(self.outputs)
        cio.write_atomic(self.out / "manifest.json", json.dumps(self.manifest, indent=2) + "\n")


def _summary_csv(groups: dict[str, np.ndarray]) -> str:
    rows = []
    for name, raw in groups.items():
        for j, kpi in enumerate(KPI_NAMES):
            q = np.percentile(raw[:, j], [0, 25, 50, 75, 100])
            rows.append((name, kpi, raw.shape[0], *q))
    return cio.csv_text(("group", "kpi", "n", "min", "q1", "median", "q3", "max"), rows)


def _boxplot_csv(groups: dict[str, list]) -> str:
    rows = []
    for name, kpis in groups.items():
        rows.extend((name, i, *k.raw, k.safety) for i, k in enumerate(kpis))
    return cio.csv_text(("group", "sample") + KPI_NAMES + ("safety",), rows)


def cmd_validate(args) -> int:
    path = cio.resolve_spec_path(args.spec)
    spec = cio.parse_spec(cio._read_text(path), str(path))
    diags = validate_spec(spec)
    for d in diags:
        print(f"{path}: {d.code}: {d.message}")
    if diags:
        return EXIT_VALIDATION
    for w in feasibility.fixed_resource_warnings(spec):
        print(f"{path}: warning: {w}")
    z, m, d = chromosome_dimensions(spec)
    print(f"{path}: ok ({spec.n_ops} operations, {spec.n_agents} agents, {len(spec.resources)} resources, chromosome {z}+{m}={d})")
    return EXIT_OK


def cmd_baseline(args) -> int:
    path, text, spec = _load(args.spec)
    config = GaConfig.from_mapping(spec.ga, seed=args.seed, n_jobs=args.jobs)
    out = _out_dir(args, args.seed)
    rec = _Run(args, path, text, out)
    stats, rows, result = build_baseline(spec, args.samples, args.seed, config)
    rec.write("kpis", "baseline_kpis.csv", render.kpi_rows_csv(rows))
    rec.write("stats", "baseline.json", cio.dump_stats(stats))
    rec.finish(seed=args.seed, samples=args.samples, config=config.as_dict())
    print(f"baseline: {args.samples} samples -> {out / 'baseline.json'}")
    for name, m, s in zip(KPI_NAMES, stats.mean, stats.std):
        print(f"  {name:24s} mean {m:.6g}  std {s:.6g}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    path, text, spec = _load(args.spec)
    config = GaConfig.from_mapping(
        spec.ga,
        seed=args.seed,
        weights=args.weights,
        n_parents=args.n_parents,
        n_children=args.n_children,
        n_iterations=args.n_iterations,
        mutation_rate=args.mu0,
        mutation_step=args.sigma0,
        temperature=args.beta,
        stagnation_limit=args.stagnation_limit,
        crossover=args.crossover,
        exact_schedule=args.exact or None,
        n_jobs=args.jobs,
    )
    out = _out_dir(args, args.seed)
    rec = _Run(args, path, text, out)
    baseline_rows = None
    if args.baseline is not None:
        stats = cio.load_stats(args.baseline)
        baseline_info = {"file": str(args.baseline)}
    else:
        n = 124 if args.auto_baseline is None else args.auto_baseline
        bseed = args.seed + 1 if args.baseline_seed is None else args.baseline_seed
        stats, baseline_rows, _ = build_baseline(spec, n, bseed, config)
        rec.write("baseline_kpis", "baseline_kpis.csv", render.kpi_rows_csv(baseline_rows))
        baseline_info = {"samples": n, "seed": bseed}
    rec.write("baseline", "baseline.json", cio.dump_stats(stats))

    evaluator = Evaluator(spec, stats, config.weights, exact=config.exact_schedule, max_ops=CLI_MAX_OPS)
    result = run(spec, config, stats, evaluator)
    best = result.best
    ga_kpis = result.evaluations
    rec.write("config", "config.json", json.dumps(config.as_dict(), indent=2) + "\n")
    rec.write("evaluations", "evaluations.csv", render.evaluations_csv(result.log))
    rec.write("history", "history.csv", render.history_csv(result.history))
    rec.write("best_chromosome", "best_chromosome.json", cio.dump_chromosome(best.chromosome))
    rec.write("gantt_csv", "gantt.csv", render.gantt_csv(spec, best.schedule, best.chromosome.allocation))
    rec.write("gantt_svg", "gantt.svg", render.gantt_svg(spec, best.schedule, best.chromosome.allocation))
    rec.write("layout_svg", "layout.svg", render.layout_svg(spec, best.chromosome))

    groups = {}
    raw_groups = {}
    if baseline_rows is not None:
        groups["baseline"] = baseline_rows
        raw_groups["baseline"] = np.array([k.raw for k in baseline_rows])
    groups["optimized"] = [ev.kpi for ev in ga_kpis]
    raw_groups["optimized"] = np.array([ev.kpi.raw for ev in ga_kpis])
    rec.write("kpi_boxplot", "kpi_boxplot.csv", _boxplot_csv(groups))
    rec.write("kpi_summary", "kpi_summary.csv", _summary_csv(raw_groups))

    rec.finish(
        seed=args.seed,
        baseline=baseline_info,
        config=config.as_dict(),
        weights=list(config.weights),
        evaluations=len(result.log),
        best_fitness=best.fitness,
        makespan=float(best.schedule.makespan),
        makespan_method=best.schedule.method,
    )
    print(f"optimize: {len(result.log)} evaluations, best fitness {best.fitness:.6g}, makespan {best.schedule.makespan:.6g} s")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    path, text, spec = _load(args.spec)
    x = cio.load_chromosome(args.chromosome)
    report = feasibility.check(spec, x)
    if not report.ok:
        for v in report.violations:
            print(f"infeasible: {v}", file=sys.stderr)
        return EXIT_INFEASIBLE
    evaluator = Evaluator(spec, None, exact=args.exact, max_ops=args.max_ops, keep_traces=args.trace)
    ev = evaluator(x)
    out = _out_dir(args)
    rec = _Run(args, path, text, out)
    alloc = x.allocation
    rec.write("gantt_csv", "gantt.csv", render.gantt_csv(spec, ev.schedule, alloc))
    rec.write("gantt_svg", "gantt.svg", render.gantt_svg(spec, ev.schedule, alloc))
    rec.write("layout_svg", "layout.svg", render.layout_svg(spec, x))
    if args.trace:
        rec.write("trace", "trace.csv", render.trace_csv(spec, ev.traces, ev.schedule))
    rec.finish(
        chromosome=str(args.chromosome),
        makespan=float(ev.schedule.makespan),
        makespan_method=ev.schedule.method,
        kpis=dict(zip(KPI_NAMES, (float(v) for v in ev.kpi.raw))),
        safety=bool(ev.kpi.safety),
    )
    print(f"makespan {ev.schedule.makespan!r} s ({ev.schedule.method})")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "baseline": cmd_baseline, "optimize": cmd_optimize, "schedule": cmd_schedule}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return COMMANDS[args.command](args)
    except CelloptError as exc:
        print(f"cellopt {args.command}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"cellopt {args.command}: IO_ERROR: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"cellopt {args.command}: INTERNAL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
