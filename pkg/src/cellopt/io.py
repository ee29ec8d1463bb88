"""Work-cell spec files (YAML), chromosome and baseline files (JSON), CSV writers."""

from __future__ import annotations

import csv
import io as _io
import json
import os
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from .errors import SpecError
from .kpi import KPI_NAMES, BaselineStats
from .model import (
    DEFAULT_PRIMITIVE_TIMES,
    HUMAN_ACTIONS,
    ROBOT_PRIMITIVES,
    Agent,
    AgentKind,
    Chromosome,
    CollabStep,
    KpiSettings,
    Operation,
    OperationKind,
    Resource,
    Task,
    TaskStep,
    WorkcellSpec,
)

SCHEMA_VERSION = 1
UNITS = {"m": 1.0, "cm": 0.01, "mm": 0.001}
# GA settings given in the file's length unit
_GA_LENGTH_KEYS = ("mutation_step",)


def _fail(msg, code="INVALID_SPEC"):
    raise SpecError(msg, code=code)


def _read_text(path) -> str:
    p = Path(path)
    if not p.is_file():
        _fail(f"{p}: no such file", "NOT_FOUND")
    try:
        return p.read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"{p}: {exc}", "IO_ERROR")


def parse_spec(text: str, source: str = "<string>") -> WorkcellSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        _fail(f"{where}: {getattr(exc, 'problem', None) or exc}", "PARSE_ERROR")
    if not isinstance(doc, dict):
        _fail(f"{source}: top level must be a mapping", "PARSE_ERROR")
    try:
        return spec_from_dict(doc)
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        _fail(f"{source}: malformed spec ({type(exc).__name__}: {exc})")


def load_spec(path) -> WorkcellSpec:
    return parse_spec(_read_text(path), str(path))


def spec_from_dict(doc: dict) -> WorkcellSpec:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        _fail(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION})", "UNSUPPORTED_SCHEMA")
    unit = doc.get("length_unit", "m")
    if unit not in UNITS:
        _fail(f"length_unit {unit!r} not one of {sorted(UNITS)}")
    scale = UNITS[unit]

    def L(v):
        return float(v) if scale == 1.0 else float(v) * scale

    def pt(v):
        return (L(v[0]), L(v[1]))

    agents = []
    for i, a in enumerate(doc["agents"]):
        kind = AgentKind(a["kind"])
        catalog = ROBOT_PRIMITIVES if kind is AgentKind.ROBOT else HUMAN_ACTIONS
        times = {p: float(DEFAULT_PRIMITIVE_TIMES[p]) for p in catalog}
        times.update({k: float(v) for k, v in (a.get("primitive_times") or {}).items()})
        links = a.get("link_lengths")
        agents.append(
            Agent(
                index=i,
                kind=kind,
                base=pt(a["base"]),
                d_min=L(a["workspace"][0]),
                d_max=L(a["workspace"][1]),
                speed=L(a["speed"]),
                home=pt(a.get("home", a["base"])),
                primitive_times=times,
                link_lengths=(L(links[0]), L(links[1])) if links is not None else None,
                name=str(a.get("name", f"a{i + 1}")),
            )
        )

    resources, bounds = [], []
    for i, r in enumerate(doc["resources"]):
        movable = bool(r.get("movable", True))
        coords = tuple(L(c) for c in r["coords"])
        resources.append(
            Resource(
                index=i,
                coords=coords,
                footprint=tuple(pt(v) for v in r["footprint"]),
                movable=movable,
                name=str(r.get("name", f"r{i + 1}")),
            )
        )
        if movable:
            rb = r.get("bounds")
            if rb is None or len(rb) != len(coords):
                _fail(f"resource {resources[-1].label}: movable resources need one [lo, hi] bound per coordinate")
            bounds.extend((L(lo), L(hi)) for lo, hi in rb)

    agent_ix = {a.name: a.index for a in agents}
    res_ix = {r.name: r.index for r in resources}

    def res_ref(v):
        if isinstance(v, str):
            if v not in res_ix:
                _fail(f"unknown resource {v!r}")
            return res_ix[v]
        return int(v)

    tasks = {}
    for name, t in (doc.get("tasks") or {}).items():
        tasks[str(name)] = Task(
            name=str(name),
            robot=tuple(_task_step(s) for s in (t.get("robot") or [])),
            human=tuple(_task_step(s) for s in (t.get("human") or [])),
        )

    raw_ops = doc["operations"]
    t = len(raw_ops)
    cap = doc.get("capability")
    if cap is None:
        _fail("capability matrix missing")
    if isinstance(cap, dict):
        cap = [cap[a.name] for a in agents]
    capability = tuple(tuple(int(b) for b in row) for row in cap)

    ops = []
    for i, o in enumerate(raw_ops):
        kind = OperationKind(o.get("kind", "individual"))
        eligible = tuple(j for j in range(len(capability)) if i < len(capability[j]) and capability[j][i] == 0)
        seq = tuple(
            CollabStep(
                task=str(s["task"]),
                slot=int(s["slot"]),
                resources=tuple(res_ref(v) for v in s.get("resources", [])),
                offset=float(s["offset"]) if s.get("offset") is not None else None,
            )
            for s in (o.get("sequence") or [])
        )
        ops.append(
            Operation(
                index=i,
                kind=kind,
                required_agents=int(o.get("agents", 1 if kind is OperationKind.INDIVIDUAL else 2)),
                task=str(o["task"]) if o.get("task") is not None else None,
                resources=tuple(res_ref(v) for v in o.get("resources", [])),
                eligible=eligible,
                collab_sequence=seq,
                name=str(o.get("name", f"o{i + 1}")),
            )
        )
    op_ix = {o.name: o.index for o in ops}

    prec = [[0] * t for _ in range(t)]
    for edge in doc.get("precedence") or []:
        a, b = (op_ix[e] if isinstance(e, str) else int(e) for e in edge)
        prec[a][b] = 1

    caps = doc.get("caps")
    if isinstance(caps, dict):
        caps = [caps[a.name] for a in agents]

    k = doc.get("kpi") or {}
    kpi = KpiSettings(
        d_safe=L(k.get("d_safe", 0.2 / scale)),
        dt=float(k.get("dt", 0.01)),
        reach_thresholds=tuple(L(v) for v in k.get("reach_thresholds", [v / scale for v in (0.4, 0.6, 0.8)])),
        epsilon_m=float(k.get("epsilon_m", 1e-6)),
    )
    ga = dict(doc.get("ga") or {})
    for key in _GA_LENGTH_KEYS:
        if key in ga:
            ga[key] = L(ga[key])
    del agent_ix
    return WorkcellSpec(
        operations=tuple(ops),
        precedence=tuple(tuple(r) for r in prec),
        agents=tuple(agents),
        resources=tuple(resources),
        capability=capability,
        bounds=tuple(bounds),
        tasks=tasks,
        caps=tuple(int(c) for c in caps) if caps is not None else None,
        kpi=kpi,
        ga=ga,
        name=str(doc.get("name", "workcell")),
    )


def _task_step(s) -> TaskStep:
    if isinstance(s, str):
        return TaskStep(s)
    return TaskStep(str(s[0]), int(s[1]) if len(s) > 1 and s[1] is not None else None)


def spec_to_dict(spec: WorkcellSpec) -> dict:
    """Serializable form in meters; ``spec_from_dict`` inverts it exactly."""
    res_names = [r.name or r.label for r in spec.resources]
    op_names = [o.name or o.label for o in spec.operations]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "length_unit": "m",
        "agents": [],
        "resources": [],
        "tasks": {},
        "operations": [],
        "precedence": [[op_names[i], op_names[j]] for i, j in zip(*np.nonzero(spec.precedence_matrix))],
        "capability": [list(row) for row in spec.capability],
    }
    for a in spec.agents:
        d = {
            "name": a.name or a.label,
            "kind": a.kind.value,
            "base": list(a.base),
            "workspace": [a.d_min, a.d_max],
            "speed": a.speed,
            "home": list(a.home),
            "primitive_times": dict(a.primitive_times),
        }
        if a.link_lengths is not None:
            d["link_lengths"] = list(a.link_lengths)
        doc["agents"].append(d)
    for r in spec.resources:
        d = {
            "name": r.name or r.label,
            "movable": r.movable,
            "coords": list(r.coords),
            "footprint": [list(v) for v in r.footprint],
        }
        if r.movable:
            sl = spec.layout_slices[r.index]
            d["bounds"] = [list(b) for b in spec.bounds[sl]]
        doc["resources"].append(d)
    for name, t in spec.tasks.items():
        doc["tasks"][name] = {
            "robot": [[s.primitive, s.waypoint] for s in t.robot],
            "human": [[s.primitive, s.waypoint] for s in t.human],
        }
    for o, name in zip(spec.operations, op_names):
        d = {"name": name, "kind": o.kind.value, "agents": o.required_agents}
        if o.task is not None:
            d["task"] = o.task
        d["resources"] = [res_names[i] for i in o.resources]
        if o.collab_sequence:
            d["sequence"] = [
                {"task": s.task, "slot": s.slot, "resources": [res_names[i] for i in s.resources], "offset": s.offset}
                for s in o.collab_sequence
            ]
        doc["operations"].append(d)
    doc["precedence"] = [[a, b] for a, b in doc["precedence"]]
    if spec.caps is not None:
        doc["caps"] = list(spec.caps)
    doc["kpi"] = {
        "d_safe": spec.kpi.d_safe,
        "dt": spec.kpi.dt,
        "reach_thresholds": list(spec.kpi.reach_thresholds),
        "epsilon_m": spec.kpi.epsilon_m,
    }
    if spec.ga:
        doc["ga"] = dict(spec.ga)
    return doc


def dump_spec(spec: WorkcellSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False, default_flow_style=None)


def save_spec(spec: WorkcellSpec, path) -> None:
    Path(path).write_text(dump_spec(spec), encoding="utf-8")


# chromosome files: layout in meters, allocation as 0-based agent indices


def chromosome_to_dict(x: Chromosome) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "layout": [float(v) for v in x.layout],
        "allocation": [list(eta) for eta in x.allocation],
    }


def chromosome_from_dict(doc: dict) -> Chromosome:
    if doc.get("schema_version") != SCHEMA_VERSION:
        _fail(f"chromosome schema_version {doc.get('schema_version')!r} is not supported", "UNSUPPORTED_SCHEMA")
    return Chromosome(np.asarray(doc["layout"], dtype=float), tuple(tuple(e) for e in doc["allocation"]))


def dump_chromosome(x: Chromosome) -> str:
    return json.dumps(chromosome_to_dict(x), indent=2) + "\n"


def load_chromosome(path) -> Chromosome:
    text = _read_text(path)
    try:
        return chromosome_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        _fail(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", "PARSE_ERROR")
    except (KeyError, TypeError, ValueError) as exc:
        _fail(f"{path}: malformed chromosome ({exc})", "PARSE_ERROR")


def dump_stats(stats: BaselineStats) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "normalization": stats.normalization,
        "kpis": list(KPI_NAMES),
        "mean": [float(v) for v in stats.mean],
        "std": [float(v) for v in stats.std],
        "sample_count": int(stats.sample_count),
        "seed": stats.seed,
    }
    return json.dumps(doc, indent=2) + "\n"


def load_stats(path) -> BaselineStats:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", "PARSE_ERROR")
    if doc.get("schema_version") != SCHEMA_VERSION:
        _fail(f"baseline schema_version {doc.get('schema_version')!r} is not supported", "UNSUPPORTED_SCHEMA")
    return BaselineStats(doc["mean"], doc["std"], int(doc["sample_count"]), doc.get("seed"))


def fmt(v) -> str:
    """Dot-decimal shortest round-trip float formatting."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def bundled_fixture(name: str = "estop") -> Path:
    return Path(__file__).parent / "data" / f"{name}.yaml"


def resolve_spec_path(arg: str) -> Path:
    """``@name`` refers to a bundled fixture; anything else is a file path."""
    if arg.startswith("@"):
        return bundled_fixture(arg[1:])
    return Path(arg)
