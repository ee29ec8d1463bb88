"""Follower problem: start times minimizing makespan under precedence and agent availability.

Both solvers dispatch operations one at a time and start each one at
``max(latest predecessor completion, latest availability of its agents)``;
they differ only in how the dispatch order is chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ScheduleError
from .model import WorkcellSpec, topological_order

DEFAULT_MAX_OPS = 12


@dataclass(frozen=True, eq=False)
class Schedule:
    start: np.ndarray
    completion: np.ndarray
    availability: np.ndarray
    order: tuple[int, ...]
    method: str = "list"

    @property
    def makespan(self) -> float:
        return float(self.completion.max()) if self.completion.size else 0.0

    @property
    def durations(self) -> np.ndarray:
        return self.completion - self.start


@dataclass(frozen=True)
class GanttBar:
    agent: int
    op: int
    start: float
    end: float


def _precedence(obj) -> np.ndarray:
    if isinstance(obj, WorkcellSpec):
        return obj.precedence_matrix
    return np.asarray(obj, dtype=int)


def _agents(allocation, n_agents: Optional[int]) -> int:
    used = max((a for eta in allocation for a in eta), default=-1) + 1
    return max(used, n_agents or 0)


def _check_inputs(p: np.ndarray, allocation, tau: np.ndarray):
    t = p.shape[0]
    if p.shape != (t, t) or len(allocation) != t or tau.shape != (t,):
        raise ValueError(f"inconsistent instance: precedence {p.shape}, {len(allocation)} allocations, {tau.shape} durations")
    if topological_order(p) is None or np.any(np.diag(p)):
        raise ScheduleError("precedence graph contains a cycle")
    if np.any(tau <= 0):
        raise ValueError("cycle times must be positive")


def dispatch(p: np.ndarray, allocation, tau: np.ndarray, order: Sequence[int], n_agents=None, method="list") -> Schedule:
    """Start times produced by dispatching operations in ``order``."""
    t = len(tau)
    start = np.zeros(t)
    done = np.zeros(t)
    avail = np.zeros(_agents(allocation, n_agents))
    for j in order:
        preds = np.flatnonzero(p[:, j])
        s = max(done[preds].max(initial=0.0), max((avail[k] for k in allocation[j]), default=0.0))
        start[j] = s
        done[j] = s + tau[j]
        for k in allocation[j]:
            avail[k] = done[j]
    return Schedule(start, done, avail, tuple(int(j) for j in order), method)


def bottom_levels(p: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Longest path from each operation to a sink, including its own duration."""
    order = topological_order(p)
    if order is None:
        raise ScheduleError("precedence graph contains a cycle")
    bl = np.asarray(tau, dtype=float).copy()
    for i in reversed(order):
        succ = np.flatnonzero(p[i])
        if succ.size:
            bl[i] = tau[i] + bl[succ].max()
    return bl


def schedule_list(spec, allocation, tau, n_agents: Optional[int] = None) -> Schedule:
    """Critical-path list schedule; ties go to the lower operation index.

    ``spec`` may be a WorkcellSpec or a bare t x t precedence matrix.
    """
    p = _precedence(spec)
    tau = np.asarray(tau, dtype=float)
    _check_inputs(p, allocation, tau)
    if n_agents is None and isinstance(spec, WorkcellSpec):
        n_agents = spec.n_agents
    prio = bottom_levels(p, tau)
    remaining = p.sum(axis=0).astype(int)
    ready = set(int(i) for i in np.flatnonzero(remaining == 0))
    order = []
    while ready:
        j = min(ready, key=lambda i: (-prio[i], i))
        ready.remove(j)
        order.append(j)
        for s in np.flatnonzero(p[j]):
            remaining[s] -= 1
            if remaining[s] == 0:
                ready.add(int(s))
    return dispatch(p, allocation, tau, order, n_agents, "list")


def schedule_exact(spec, allocation, tau, max_ops: int = DEFAULT_MAX_OPS, n_agents: Optional[int] = None) -> Schedule:
    """Minimum-makespan schedule by depth-first branch and bound over dispatch orders."""
    p = _precedence(spec)
    tau = np.asarray(tau, dtype=float)
    t = len(tau)
    if t > max_ops:
        raise ScheduleError(f"{t} operations exceed the exact-solver limit of {max_ops}", code="TOO_LARGE")
    _check_inputs(p, allocation, tau)
    if n_agents is None and isinstance(spec, WorkcellSpec):
        n_agents = spec.n_agents
    n = _agents(allocation, n_agents)

    incumbent = schedule_list(p, allocation, tau, n)
    best = [incumbent.makespan, list(incumbent.order)]
    bl = bottom_levels(p, tau)
    preds = [np.flatnonzero(p[:, j]) for j in range(t)]
    succs = [np.flatnonzero(p[j]) for j in range(t)]
    agent_ops = [[j for j in range(t) if k in allocation[j]] for k in range(n)]
    done = np.zeros(t)
    scheduled = np.zeros(t, dtype=bool)
    remaining = p.sum(axis=0).astype(int)
    avail = np.zeros(n)
    order: list[int] = []
    seen: dict[tuple, float] = {}

    def lower_bound(cur_makespan: float) -> float:
        lb = cur_makespan
        for j in range(t):
            if scheduled[j]:
                continue
            est = max(done[preds[j]].max(initial=0.0), max(avail[k] for k in allocation[j]))
            lb = max(lb, est + bl[j])
        for k in range(n):
            load = sum(tau[j] for j in agent_ops[k] if not scheduled[j])
            lb = max(lb, avail[k] + load)
        return lb

    def dfs(cur_makespan: float):
        if len(order) == t:
            if cur_makespan < best[0]:
                best[0] = cur_makespan
                best[1] = list(order)
            return
        if lower_bound(cur_makespan) >= best[0]:
            return
        # identical partial states reached by different orders are explored once
        key = (scheduled.tobytes(), tuple(avail), tuple(done[scheduled]))
        if seen.get(key, math.inf) <= cur_makespan:
            return
        seen[key] = cur_makespan
        for j in [int(i) for i in np.flatnonzero((remaining == 0) & ~scheduled)]:
            s = max(done[preds[j]].max(initial=0.0), max(avail[k] for k in allocation[j]))
            saved = [avail[k] for k in allocation[j]]
            scheduled[j] = True
            done[j] = s + tau[j]
            for k in allocation[j]:
                avail[k] = done[j]
            remaining[succs[j]] -= 1
            order.append(j)
            dfs(max(cur_makespan, done[j]))
            order.pop()
            remaining[succs[j]] += 1
            for k, v in zip(allocation[j], saved):
                avail[k] = v
            done[j] = 0.0
            scheduled[j] = False

    dfs(0.0)
    return dispatch(p, allocation, tau, best[1], n, "exact")


def gantt(schedule: Schedule, allocation) -> list[list[GanttBar]]:
    """Per-agent rows of bars sorted by start; collaborative operations appear on every row they occupy."""
    n = _agents(allocation, len(schedule.availability))
    rows: list[list[GanttBar]] = [[] for _ in range(n)]
    for j, eta in enumerate(allocation):
        for k in eta:
            rows[k].append(GanttBar(k, j, float(schedule.start[j]), float(schedule.completion[j])))
    for row in rows:
        row.sort(key=lambda b: (b.start, b.op))
    return rows


def verify(p, allocation, tau, schedule: Schedule, tol: float = 1e-9) -> list[str]:
    """Feasibility problems of ``schedule``; empty when every follower constraint holds."""
    p = np.asarray(p, dtype=int)
    tau = np.asarray(tau, dtype=float)
    s, c = schedule.start, schedule.completion
    problems = []
    if np.any(s < -tol):
        problems.append("negative start time")
    if not np.allclose(c, s + tau, atol=tol, rtol=0):
        problems.append("completion differs from start + cycle time")
    for i, j in zip(*np.nonzero(p)):
        if s[j] < c[i] - tol:
            problems.append(f"o{j + 1} starts before predecessor o{i + 1} completes")
    for k in range(_agents(allocation, None)):
        ops = sorted((s[j], c[j], j) for j, eta in enumerate(allocation) if k in eta)
        for (s1, c1, j1), (s2, _, j2) in zip(ops, ops[1:]):
            if s2 < c1 - tol:
                problems.append(f"a{k + 1} executes o{j1 + 1} and o{j2 + 1} simultaneously")
    return problems
