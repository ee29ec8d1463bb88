"""Domain entities of a human-robot work-cell.

All types are immutable after construction. Lengths are meters, times seconds.
Indices are 0-based; reports print them 1-based (``o1``, ``a1``, ``r1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionError

ROBOT_PRIMITIVES = ("MoveTo", "Overfly", "Screwing", "Open", "Close")
HUMAN_ACTIONS = ("Get", "Put", "Pose", "Wait")
TRAVEL_PRIMITIVES = frozenset({"MoveTo", "Overfly", "Get", "Put"})
DEFAULT_PRIMITIVE_TIMES = {
    "MoveTo": 0.4,
    "Overfly": 0.3,
    "Screwing": 1.5,
    "Open": 0.5,
    "Close": 0.5,
    "Get": 0.5,
    "Put": 0.4,
    "Pose": 1.2,
    "Wait": 1.0,
}
DEFAULT_SPEED = {"human": 1.0, "robot": 0.25}


class AgentKind(str, enum.Enum):
    HUMAN = "human"
    ROBOT = "robot"


class OperationKind(str, enum.Enum):
    INDIVIDUAL = "individual"
    COLLABORATIVE = "collaborative"


@dataclass(frozen=True)
class TaskStep:
    primitive: str
    # index into the owning operation's resource list; None for in-place primitives
    waypoint: Optional[int] = None


@dataclass(frozen=True)
class Task:
    """Primitive templates for one task, one sequence per agent kind."""

    name: str
    robot: tuple[TaskStep, ...] = ()
    human: tuple[TaskStep, ...] = ()

    def steps_for(self, kind: AgentKind) -> tuple[TaskStep, ...]:
        return self.robot if kind is AgentKind.ROBOT else self.human


@dataclass(frozen=True)
class CollabStep:
    """One sub-task of a collaborative operation.

    ``slot`` indexes the operation's allocation vector, so slot 0 is executed
    by the first required agent.
    """

    task: str
    slot: int
    resources: tuple[int, ...]
    offset: Optional[float] = None


@dataclass(frozen=True)
class Operation:
    index: int
    kind: OperationKind
    required_agents: int
    task: Optional[str]
    resources: tuple[int, ...]
    eligible: tuple[int, ...]
    collab_sequence: tuple[CollabStep, ...] = ()
    name: str = ""

    @property
    def is_collaborative(self) -> bool:
        return self.kind is OperationKind.COLLABORATIVE

    @property
    def label(self) -> str:
        return self.name or f"o{self.index + 1}"


@dataclass(frozen=True)
class Agent:
    index: int
    kind: AgentKind
    base: tuple[float, float]
    d_min: float
    d_max: float
    speed: float
    home: tuple[float, float]
    primitive_times: Mapping[str, float]
    link_lengths: Optional[tuple[float, float]] = None
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"a{self.index + 1}"


@dataclass(frozen=True)
class Resource:
    index: int
    coords: tuple[float, ...]
    footprint: tuple[tuple[float, float], ...]
    movable: bool = True
    name: str = ""

    @property
    def dofs(self) -> int:
        return len(self.coords)

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.coords[0], self.coords[1])

    @property
    def label(self) -> str:
        return self.name or f"r{self.index + 1}"


@dataclass(frozen=True)
class KpiSettings:
    """Parameters of the raw KPI proxies and the safety check."""

    d_safe: float = 0.2
    dt: float = 0.01
    reach_thresholds: tuple[float, float, float] = (0.4, 0.6, 0.8)
    epsilon_m: float = 1e-6


@dataclass(frozen=True)
class WorkcellSpec:
    operations: tuple[Operation, ...]
    precedence: tuple[tuple[int, ...], ...]
    agents: tuple[Agent, ...]
    resources: tuple[Resource, ...]
    capability: tuple[tuple[int, ...], ...]
    bounds: tuple[tuple[float, float], ...]
    tasks: Mapping[str, Task]
    caps: Optional[tuple[int, ...]] = None
    kpi: KpiSettings = field(default_factory=KpiSettings)
    ga: Mapping[str, object] = field(default_factory=dict)
    name: str = "workcell"

    @cached_property
    def precedence_matrix(self) -> np.ndarray:
        return np.asarray(self.precedence, dtype=int).reshape(len(self.operations), len(self.operations))

    @cached_property
    def capability_matrix(self) -> np.ndarray:
        return np.asarray(self.capability, dtype=int).reshape(len(self.agents), len(self.operations))

    @property
    def n_ops(self) -> int:
        return len(self.operations)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @cached_property
    def movable(self) -> tuple[Resource, ...]:
        return tuple(r for r in self.resources if r.movable)

    @cached_property
    def layout_slices(self) -> dict[int, slice]:
        """Resource index -> slice of the layout vector holding its DoFs."""
        out, pos = {}, 0
        for r in self.movable:
            out[r.index] = slice(pos, pos + r.dofs)
            pos += r.dofs
        return out

    @cached_property
    def individual_ops(self) -> tuple[int, ...]:
        return tuple(o.index for o in self.operations if not o.is_collaborative)

    def agent_caps(self) -> tuple[int, ...]:
        v = len(self.individual_ops)
        return self.caps if self.caps is not None else (v,) * self.n_agents

    def required_agents(self, op: int) -> tuple[int, ...]:
        """Forced allocation of a collaborative operation."""
        o = self.operations[op]
        return o.eligible[: o.required_agents]

    def predecessors(self, op: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.precedence_matrix[:, op])]

    def default_layout(self) -> np.ndarray:
        if not self.movable:
            return np.zeros(0)
        return np.concatenate([np.asarray(r.coords, dtype=float) for r in self.movable])


@dataclass(frozen=True, eq=False)
class Chromosome:
    """Leader design point: real layout genes followed by allocation genes."""

    layout: np.ndarray
    allocation: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        layout = np.array(self.layout, dtype=float).reshape(-1)
        layout.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "allocation", tuple(tuple(int(a) for a in eta) for eta in self.allocation))

    def __eq__(self, other):
        if not isinstance(other, Chromosome):
            return NotImplemented
        return (
            self.layout.shape == other.layout.shape
            and bool(np.array_equal(self.layout, other.layout))
            and self.allocation == other.allocation
        )

    def __hash__(self):
        return hash((self.layout.tobytes(), self.allocation))

    def __len__(self):
        return self.layout.size + sum(len(e) for e in self.allocation)

    def with_layout(self, layout) -> "Chromosome":
        return Chromosome(layout, self.allocation)

    def with_allocation(self, allocation) -> "Chromosome":
        return Chromosome(self.layout, allocation)


@dataclass(frozen=True)
class SpecDiagnostic:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


def chromosome_dimensions(spec: WorkcellSpec) -> tuple[int, int, int]:
    """Return (layout length, allocation length, total length)."""
    z = sum(r.dofs for r in spec.movable)
    m = sum(o.required_agents for o in spec.operations)
    return z, m, z + m


def resource_coords(spec: WorkcellSpec, layout: np.ndarray, index: int) -> np.ndarray:
    """Coordinates of a resource under ``layout``; fixed resources keep their stored coords."""
    r = spec.resources[index]
    if not r.movable:
        return np.asarray(r.coords, dtype=float)
    return np.asarray(layout[spec.layout_slices[index]], dtype=float)


def check_chromosome(spec: WorkcellSpec, x: Chromosome) -> Chromosome:
    """Validate chromosome shape against ``spec``; raises DimensionError."""
    if not isinstance(x, Chromosome):
        raise TypeError(f"expected Chromosome, got {type(x).__name__}")
    z, _, _ = chromosome_dimensions(spec)
    if x.layout.size != z:
        raise DimensionError(f"layout has {x.layout.size} genes, expected {z}")
    if len(x.allocation) != spec.n_ops:
        raise DimensionError(f"allocation covers {len(x.allocation)} operations, expected {spec.n_ops}")
    for op, eta in zip(spec.operations, x.allocation):
        if len(eta) != op.required_agents:
            raise DimensionError(f"{op.label}: {len(eta)} agents allocated, expected {op.required_agents}")
    return x


def topological_order(precedence: np.ndarray) -> Optional[list[int]]:
    """Kahn's algorithm with lowest-index tie break; None if the graph has a cycle."""
    p = np.asarray(precedence, dtype=int)
    t = p.shape[0]
    indeg = p.sum(axis=0).astype(int)
    ready = sorted(int(i) for i in np.flatnonzero(indeg == 0))
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in np.flatnonzero(p[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(int(j))
                ready.sort()
    return order if len(order) == t else None


def _is_convex_ccw(poly: Sequence[Sequence[float]]) -> bool:
    pts = np.asarray(poly, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        return False
    e = np.roll(pts, -1, axis=0) - pts
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(cross <= 0):
        return False
    # winding number 1 rules out self-intersecting star shapes
    ang = np.arctan2(e[:, 1], e[:, 0])
    turn = np.mod(np.diff(np.append(ang, ang[0])), 2 * np.pi)
    return bool(np.isclose(turn.sum(), 2 * np.pi))


def validate_spec(spec: WorkcellSpec) -> list[SpecDiagnostic]:
    """Check every structural invariant; return one diagnostic per violation."""
    diags: list[SpecDiagnostic] = []

    def add(code, msg):
        diags.append(SpecDiagnostic(code, msg))

    t, n, r = spec.n_ops, spec.n_agents, len(spec.resources)

    for i, o in enumerate(spec.operations):
        if o.index != i:
            add("INDEX_MISMATCH", f"operation at position {i} has index {o.index}")
    for i, a in enumerate(spec.agents):
        if a.index != i:
            add("INDEX_MISMATCH", f"agent at position {i} has index {a.index}")
    for i, res in enumerate(spec.resources):
        if res.index != i:
            add("INDEX_MISMATCH", f"resource at position {i} has index {res.index}")

    # precedence
    p = np.asarray(spec.precedence, dtype=int)
    if p.shape != (t, t):
        add("DIMENSION_MISMATCH", f"precedence matrix is {p.shape}, expected ({t}, {t})")
    else:
        if np.any((p != 0) & (p != 1)):
            add("INVALID_PRECEDENCE", "precedence entries must be 0 or 1")
        for i in np.flatnonzero(np.diag(p)):
            add("SELF_PRECEDENCE", f"o{i + 1} precedes itself")
        if topological_order(p - np.diag(np.diag(p))) is None:
            add("CYCLIC_PRECEDENCE", "precedence graph contains a cycle")

    # capability
    b = np.asarray(spec.capability, dtype=int)
    b_ok = b.shape == (n, t)
    if not b_ok:
        add("DIMENSION_MISMATCH", f"capability matrix is {b.shape}, expected ({n}, {t})")
    elif np.any((b != 0) & (b != 1)):
        add("INVALID_CAPABILITY", "capability entries must be 0 (capable) or 1 (not capable)")
        b_ok = False

    # agents
    seen_robot = False
    for a in spec.agents:
        if a.kind is AgentKind.ROBOT:
            seen_robot = True
            if a.link_lengths is None or len(a.link_lengths) != 2 or min(a.link_lengths) <= 0:
                add("AGENT_PARAM", f"{a.label}: robot needs two positive link lengths")
        elif seen_robot:
            add("AGENT_ORDER", f"{a.label}: humans must precede robots")
        if not (0 <= a.d_min < a.d_max):
            add("AGENT_PARAM", f"{a.label}: workspace annulus needs 0 <= d_min < d_max")
        if not a.speed > 0:
            add("AGENT_PARAM", f"{a.label}: speed must be positive")
        catalog = ROBOT_PRIMITIVES if a.kind is AgentKind.ROBOT else HUMAN_ACTIONS
        for prim, dur in a.primitive_times.items():
            if prim not in catalog:
                add("UNKNOWN_PRIMITIVE", f"{a.label}: {prim} is not a {a.kind.value} primitive")
            elif not dur >= 0:
                add("AGENT_PARAM", f"{a.label}: base time of {prim} must be non-negative")

    # resources
    for res in spec.resources:
        if res.dofs < 2:
            add("RESOURCE_DOFS", f"{res.label}: at least two coordinates (centroid) required")
        if not _is_convex_ccw(res.footprint):
            add("NONCONVEX_FOOTPRINT", f"{res.label}: footprint must be a convex counter-clockwise polygon with >= 3 vertices")

    z, _, _ = chromosome_dimensions(spec)
    if len(spec.bounds) != z:
        add("DIMENSION_MISMATCH", f"{len(spec.bounds)} layout bounds given, expected {z}")
    for k, (lo, hi) in enumerate(spec.bounds):
        if not lo <= hi:
            add("BOUNDS_ORDER", f"bound {k}: lower {lo} exceeds upper {hi}")

    v = len(spec.individual_ops)
    if spec.caps is not None:
        if len(spec.caps) != n:
            add("DIMENSION_MISMATCH", f"{len(spec.caps)} allocation caps given, expected {n}")
        for j, k in enumerate(spec.caps):
            if not 0 <= k <= v:
                add("CAP_RANGE", f"a{j + 1}: cap {k} outside [0, {v}]")

    # operations
    for o in spec.operations:
        if o.kind is OperationKind.INDIVIDUAL and o.required_agents != 1:
            add("KIND_ARITY", f"{o.label}: individual operations need exactly one agent")
        if o.kind is OperationKind.COLLABORATIVE and o.required_agents < 2:
            add("KIND_ARITY", f"{o.label}: collaborative operations need at least two agents")
        if not o.eligible:
            add("NO_CAPABLE_AGENT", f"{o.label}: no agent is capable of this operation")
        if b_ok:
            expected = tuple(int(j) for j in np.flatnonzero(b[:, o.index] == 0))
            if not expected and o.eligible:
                add("NO_CAPABLE_AGENT", f"{o.label}: capability column has no zero entry")
            if tuple(o.eligible) != expected:
                add("ELIGIBILITY_MISMATCH", f"{o.label}: eligible agents {o.eligible} disagree with capability matrix {expected}")
        for res in o.resources:
            if not 0 <= res < r:
                add("UNKNOWN_RESOURCE", f"{o.label}: resource index {res} out of range")
        if o.is_collaborative:
            if len(o.eligible) < o.required_agents:
                add("KIND_ARITY", f"{o.label}: {o.required_agents} agents required but only {len(o.eligible)} capable")
            if not o.collab_sequence:
                add("MISSING_COLLAB_SEQUENCE", f"{o.label}: collaborative operation without a sub-task sequence")
            for step in o.collab_sequence:
                if not 0 <= step.slot < o.required_agents:
                    add("COLLAB_SLOT", f"{o.label}: slot {step.slot} outside [0, {o.required_agents})")
                    continue
                _check_task(spec, o, step.task, step.resources, add, slot=step.slot)
                for res in step.resources:
                    if not 0 <= res < r:
                        add("UNKNOWN_RESOURCE", f"{o.label}: resource index {res} out of range")
        else:
            for j in o.eligible:
                _check_task(spec, o, o.task, o.resources, add, agent=j)
    return diags


def _check_task(spec, op, task_name, resources, add, slot=None, agent=None):
    task = spec.tasks.get(task_name) if task_name is not None else None
    if task is None:
        add("UNKNOWN_TASK", f"{op.label}: task {task_name!r} is not defined")
        return
    if slot is not None:
        if slot >= len(op.eligible):
            return
        agent = op.eligible[slot]
    if agent is None or not 0 <= agent < spec.n_agents:
        return
    a = spec.agents[agent]
    steps = task.steps_for(a.kind)
    if not steps:
        add("UNKNOWN_TASK", f"{op.label}: task {task_name!r} has no {a.kind.value} template but {a.label} may execute it")
    catalog = ROBOT_PRIMITIVES if a.kind is AgentKind.ROBOT else HUMAN_ACTIONS
    for s in steps:
        if s.primitive not in catalog:
            add("UNKNOWN_PRIMITIVE", f"task {task_name!r}: {s.primitive} is not a {a.kind.value} primitive")
        if s.waypoint is not None and not 0 <= s.waypoint < len(resources):
            add("UNKNOWN_RESOURCE", f"{op.label}: task {task_name!r} references waypoint {s.waypoint} of {len(resources)}")
