"""Deterministic static planner.

Maps a (spec, chromosome) pair to per-operation cycle times and motion traces.
Every step lasts ``base_time + distance / speed`` for travel primitives and
``base_time`` for in-place ones. Each operation starts with the agent's hand or
tool at its home point and moves linearly between waypoints (resource
centroids). Robot joint angles come from a planar two-link arm, elbow-up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry
from .errors import PlanningError
from .model import (
    DEFAULT_PRIMITIVE_TIMES,
    TRAVEL_PRIMITIVES,
    Agent,
    AgentKind,
    Chromosome,
    Operation,
    WorkcellSpec,
    resource_coords,
)

TRACE_COLUMNS = ("time", "actor", "x", "y", "q1", "q2")


@dataclass(frozen=True)
class PrimitiveStep:
    kind: str
    actor: int
    start: float
    duration: float
    origin: tuple[float, float]
    target: tuple[float, float]

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True, eq=False)
class MotionTrace:
    """Steps of one operation plus samples at ``dt`` over each actor's active window.

    ``samples`` has columns ``TRACE_COLUMNS``; times are relative to the
    operation start and joint angles are NaN for human rows.
    """

    op: int
    steps: tuple[PrimitiveStep, ...]
    samples: np.ndarray

    def actor_samples(self, actor: int) -> np.ndarray:
        return self.samples[self.samples[:, 1] == actor]


def step_duration(agent: Agent, primitive: str, distance: float = 0.0) -> float:
    base = agent.primitive_times.get(primitive, DEFAULT_PRIMITIVE_TIMES[primitive])
    if primitive in TRAVEL_PRIMITIVES:
        return base + distance / agent.speed
    return base


def inverse_kinematics(agent: Agent, points: np.ndarray) -> np.ndarray:
    """Elbow-up planar 2-link IK for TCP points in world frame; returns (q1, q2) rows."""
    l1, l2 = agent.link_lengths
    rel = np.atleast_2d(points) - np.asarray(agent.base)
    r2 = np.einsum("ij,ij->i", rel, rel)
    c2 = (r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if np.any(np.abs(c2) > 1 + 1e-9):
        raise PlanningError(f"{agent.label}: TCP point outside the kinematic reach")
    q2 = -np.arccos(np.clip(c2, -1.0, 1.0))
    q1 = np.arctan2(rel[:, 1], rel[:, 0]) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return np.column_stack((q1, q2))


def _build_steps(
    spec: WorkcellSpec, agent: Agent, task_name: str, resources: Sequence[int], layout, start: float
) -> list[PrimitiveStep]:
    task = spec.tasks[task_name]
    pos = np.asarray(agent.home, dtype=float)
    t = start
    steps = []
    for s in task.steps_for(agent.kind):
        target = pos
        if s.waypoint is not None:
            target = resource_coords(spec, layout, resources[s.waypoint])[:2]
            if agent.kind is AgentKind.ROBOT and not geometry.in_annulus(target, agent.base, agent.d_min, agent.d_max):
                raise PlanningError(
                    f"{agent.label}: waypoint {spec.resources[resources[s.waypoint]].label} is outside its workspace"
                )
        dist = float(np.hypot(*(target - pos))) if s.primitive in TRAVEL_PRIMITIVES else 0.0
        if s.primitive not in TRAVEL_PRIMITIVES:
            target = pos
        d = step_duration(agent, s.primitive, dist)
        steps.append(PrimitiveStep(s.primitive, agent.index, t, d, (float(pos[0]), float(pos[1])), (float(target[0]), float(target[1]))))
        t += d
        pos = np.asarray(target, dtype=float)
    return steps


def positions_at(steps: Sequence[PrimitiveStep], times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated positions for an agent's steps; returns (active mask, xy)."""
    steps = [s for s in steps if s.duration > 0]
    times = np.asarray(times, dtype=float)
    xy = np.full((times.size, 2), np.nan)
    if not steps:
        return np.zeros(times.size, dtype=bool), xy
    starts = np.array([s.start for s in steps])
    ends = np.array([s.end for s in steps])
    p0 = np.array([s.origin for s in steps])
    p1 = np.array([s.target for s in steps])
    k = np.searchsorted(starts, times, side="right") - 1
    valid = k >= 0
    kk = np.clip(k, 0, None)
    active = valid & (times <= ends[kk])
    frac = np.clip((times - starts[kk]) / (ends[kk] - starts[kk]), 0.0, 1.0)
    pts = p0[kk] + frac[:, None] * (p1[kk] - p0[kk])
    xy[active] = pts[active]
    return active, xy


def _sample_block(spec: WorkcellSpec, agent: Agent, steps: list[PrimitiveStep]) -> np.ndarray:
    dt = spec.kpi.dt
    t0, t1 = steps[0].start, steps[-1].end
    n = int(np.floor((t1 - t0) / dt + 1e-9))
    times = t0 + dt * np.arange(n + 1)
    if times[-1] < t1 - 1e-12:
        times = np.append(times, t1)
    _, xy = positions_at(steps, times)
    q = np.full((times.size, 2), np.nan)
    if agent.kind is AgentKind.ROBOT:
        q = inverse_kinematics(agent, xy)
    return np.column_stack((times, np.full(times.size, agent.index), xy, q))


def plan_operation(spec: WorkcellSpec, op: Operation, x: Chromosome) -> tuple[float, MotionTrace]:
    """Cycle time and motion trace of one operation under chromosome ``x``."""
    eta = x.allocation[op.index]
    blocks: list[tuple[Agent, list[PrimitiveStep]]] = []
    if op.is_collaborative:
        t = 0.0
        for sub in op.collab_sequence:
            agent = spec.agents[eta[sub.slot]]
            start = sub.offset if sub.offset is not None else t
            steps = _build_steps(spec, agent, sub.task, sub.resources, x.layout, start)
            if steps:
                blocks.append((agent, steps))
                t = steps[-1].end
            else:
                t = start
    else:
        agent = spec.agents[eta[0]]
        steps = _build_steps(spec, agent, op.task, op.resources, x.layout, 0.0)
        blocks.append((agent, steps))
    all_steps = [s for _, steps in blocks for s in steps]
    tau = max((s.end for s in all_steps), default=0.0)
    parts = [_sample_block(spec, a, steps) for a, steps in blocks if steps]
    samples = np.vstack(parts) if parts else np.zeros((0, len(TRACE_COLUMNS)))
    return tau, MotionTrace(op.index, tuple(all_steps), samples)


def plan_all(spec: WorkcellSpec, x: Chromosome) -> tuple[np.ndarray, list[MotionTrace]]:
    taus, traces = [], []
    for op in spec.operations:
        tau, trace = plan_operation(spec, op, x)
        taus.append(tau)
        traces.append(trace)
    return np.asarray(taus, dtype=float), traces


def global_steps(traces: Sequence[MotionTrace], starts: Sequence[float], actor: int) -> list[PrimitiveStep]:
    """All steps of ``actor`` shifted to absolute schedule time, sorted by start."""
    out = []
    for trace, s0 in zip(traces, starts):
        for s in trace.steps:
            if s.actor == actor:
                out.append(PrimitiveStep(s.kind, s.actor, s.start + float(s0), s.duration, s.origin, s.target))
    out.sort(key=lambda s: s.start)
    return out


def collision_flag(spec: WorkcellSpec, x: Optional[Chromosome], schedule, traces: Sequence[MotionTrace]) -> bool:
    """True if a robot TCP comes within ``d_safe`` of an active human's hand."""
    humans = [a.index for a in spec.agents if a.kind is AgentKind.HUMAN]
    robots = [a.index for a in spec.agents if a.kind is AgentKind.ROBOT]
    if not humans or not robots:
        return False
    dt = spec.kpi.dt
    horizon = float(schedule.makespan)
    times = dt * np.arange(int(np.floor(horizon / dt + 1e-9)) + 1)
    tracks = {}
    for a in humans + robots:
        tracks[a] = positions_at(global_steps(traces, schedule.start, a), times)
    for h in humans:
        ha, hxy = tracks[h]
        for r in robots:
            ra, rxy = tracks[r]
            both = ha & ra
            if not both.any():
                continue
            d = np.hypot(*(hxy[both] - rxy[both]).T)
            if np.any(d < spec.kpi.d_safe):
                return True
    return False
