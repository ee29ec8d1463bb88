"""Leader constraints and a constraint-respecting random sampler."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry
from .errors import InfeasibleError
from .model import Chromosome, WorkcellSpec, check_chromosome, resource_coords

DEFAULT_MAX_TRIES = 10_000


class Constraint(str, enum.Enum):
    ELIG = "ELIG"
    COLLAB = "COLLAB"
    CAP = "CAP"
    BOUNDS = "BOUNDS"
    ANNULUS = "ANNULUS"
    OVERLAP = "OVERLAP"


@dataclass(frozen=True)
class Violation:
    constraint: Constraint
    detail: str

    def __str__(self):
        return f"{self.constraint.value}: {self.detail}"


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def families(self) -> set[Constraint]:
        return {v.constraint for v in self.violations}

    def __bool__(self):
        return self.ok


def _allocation_violations(spec: WorkcellSpec, allocation) -> list[Violation]:
    out = []
    counts = np.zeros(spec.n_agents, dtype=int)
    for op, eta in zip(spec.operations, allocation):
        if op.is_collaborative:
            if tuple(eta) != spec.required_agents(op.index):
                out.append(Violation(Constraint.COLLAB, f"{op.label}: allocated {eta}, required {spec.required_agents(op.index)}"))
        else:
            for a in eta:
                if a not in op.eligible:
                    out.append(Violation(Constraint.ELIG, f"{op.label}: agent a{a + 1} is not capable"))
                elif 0 <= a < spec.n_agents:
                    counts[a] += 1
    for j, (c, k) in enumerate(zip(counts, spec.agent_caps())):
        if c > k:
            out.append(Violation(Constraint.CAP, f"a{j + 1}: {c} individual operations allocated, cap {k}"))
    return out


def _resource_polygons(spec: WorkcellSpec, layout) -> list[geometry.WorldPolygon]:
    return [geometry.place(r, resource_coords(spec, layout, r.index) if r.movable else r.coords) for r in spec.resources]


def _layout_violations(spec: WorkcellSpec, layout) -> list[Violation]:
    out = []
    for k, (c, (lo, hi)) in enumerate(zip(layout, spec.bounds)):
        if not lo <= c <= hi:
            out.append(Violation(Constraint.BOUNDS, f"gene {k}: {c!r} outside [{lo}, {hi}]"))
    for r in spec.movable:
        p = resource_coords(spec, layout, r.index)[:2]
        for a in spec.agents:
            if not geometry.in_annulus(p, a.base, a.d_min, a.d_max):
                out.append(Violation(Constraint.ANNULUS, f"{r.label} outside the workspace of {a.label}"))
    polys = _resource_polygons(spec, layout)
    res = spec.resources
    for s in range(len(res)):
        for q in range(s + 1, len(res)):
            if not (res[s].movable or res[q].movable):
                continue
            if not geometry.separated(polys[s], polys[q]):
                out.append(Violation(Constraint.OVERLAP, f"{res[s].label} overlaps {res[q].label}"))
    return out


def check(spec: WorkcellSpec, x: Chromosome) -> ConstraintReport:
    """Evaluate all six leader constraint families on ``x``."""
    check_chromosome(spec, x)
    violations = _allocation_violations(spec, x.allocation) + _layout_violations(spec, x.layout)
    return ConstraintReport(tuple(violations))


def fixed_resource_warnings(spec: WorkcellSpec) -> list[Violation]:
    """Annulus and overlap problems among fixed resources; reported, never enforced."""
    out = []
    fixed = [r for r in spec.resources if not r.movable]
    for r in fixed:
        for a in spec.agents:
            if not geometry.in_annulus(r.centroid, a.base, a.d_min, a.d_max):
                out.append(Violation(Constraint.ANNULUS, f"fixed {r.label} outside the workspace of {a.label}"))
    polys = [geometry.place(r, r.coords) for r in fixed]
    for i in range(len(fixed)):
        for j in range(i + 1, len(fixed)):
            if not geometry.separated(polys[i], polys[j]):
                out.append(Violation(Constraint.OVERLAP, f"fixed {fixed[i].label} overlaps fixed {fixed[j].label}"))
    return out


def draw_allocation(spec: WorkcellSpec, rng: np.random.Generator) -> tuple[tuple[int, ...], ...]:
    """Uniform draw from each eligibility set; collaborative operations get their forced agents."""
    out = []
    for op in spec.operations:
        if op.is_collaborative:
            out.append(spec.required_agents(op.index))
        else:
            out.append((int(op.eligible[rng.integers(len(op.eligible))]),))
    return tuple(out)


def sample_allocation(spec: WorkcellSpec, rng: np.random.Generator, max_tries: int = DEFAULT_MAX_TRIES):
    for _ in range(max_tries):
        alloc = draw_allocation(spec, rng)
        if not _allocation_violations(spec, alloc):
            return alloc
    raise InfeasibleError(f"no allocation within the agent caps after {max_tries} tries (CAP)")


def sample_layout(spec: WorkcellSpec, rng: np.random.Generator, max_tries: int = DEFAULT_MAX_TRIES) -> np.ndarray:
    """Place movable resources one at a time, each resampled until it fits with those already placed."""
    layout = spec.default_layout().copy()
    bounds = np.asarray(spec.bounds, dtype=float).reshape(-1, 2)
    placed = [geometry.place(r, r.coords) for r in spec.resources if not r.movable]
    for r in spec.movable:
        sl = spec.layout_slices[r.index]
        lo, hi = bounds[sl, 0], bounds[sl, 1]
        last: Optional[str] = None
        for _ in range(max_tries):
            coords = rng.uniform(lo, hi)
            p = coords[:2]
            if not all(geometry.in_annulus(p, a.base, a.d_min, a.d_max) for a in spec.agents):
                last = "ANNULUS"
                continue
            poly = geometry.place(r, coords)
            if not all(geometry.separated(poly, other) for other in placed):
                last = "OVERLAP"
                continue
            layout[sl] = coords
            placed.append(poly)
            break
        else:
            raise InfeasibleError(f"{r.label}: no feasible placement after {max_tries} tries ({last})")
    return layout


def sample(spec: WorkcellSpec, rng: np.random.Generator, max_tries: int = DEFAULT_MAX_TRIES) -> Chromosome:
    """Draw a random chromosome that satisfies every leader constraint."""
    allocation = sample_allocation(spec, rng, max_tries)
    layout = sample_layout(spec, rng, max_tries)
    return Chromosome(layout, allocation)
