"""Raw KPIs, baseline statistics, z-score normalization and weighted fitness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import geometry
from .errors import DegenerateKpiError
from .model import AgentKind, Chromosome, WorkcellSpec, resource_coords
from .surrogate import collision_flag, inverse_kinematics

KPI_NAMES = ("cycle_time", "ergonomics", "inverse_manipulability", "surface")
DEFAULT_WEIGHTS = (0.5, 0.3, 0.1, 0.1)
NORMALIZATION = "zscore"


@dataclass(frozen=True, eq=False)
class KpiVector:
    raw: np.ndarray
    safety: bool = False
    normalized: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "raw", np.asarray(self.raw, dtype=float).reshape(4))
        if self.normalized is not None:
            object.__setattr__(self, "normalized", np.asarray(self.normalized, dtype=float).reshape(4))

    @property
    def cycle_time(self) -> float:
        return float(self.raw[0])

    @property
    def ergonomics(self) -> int:
        return int(self.raw[1])

    @property
    def inverse_manipulability(self) -> float:
        return float(self.raw[2])

    @property
    def surface(self) -> float:
        return float(self.raw[3])


@dataclass(frozen=True, eq=False)
class BaselineStats:
    mean: np.ndarray
    std: np.ndarray
    sample_count: int
    seed: Optional[int] = None
    normalization: str = NORMALIZATION

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(4))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=float).reshape(4))

    def __eq__(self, other):
        if not isinstance(other, BaselineStats):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
            and self.sample_count == other.sample_count
            and self.seed == other.seed
        )

    def scaled(self, factor: float) -> "BaselineStats":
        return BaselineStats(self.mean, self.std * factor, self.sample_count, self.seed)


def round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def posture_class(distance: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Reach-distance posture proxy: 1 below the first threshold up to 4 beyond the last."""
    return 1 + np.searchsorted(np.asarray(thresholds, dtype=float), distance, side="right")


def ergonomics_score(spec: WorkcellSpec, traces) -> int:
    classes = []
    for a in spec.agents:
        if a.kind is not AgentKind.HUMAN:
            continue
        for tr in traces:
            s = tr.actor_samples(a.index)
            if s.size:
                d = np.hypot(s[:, 2] - a.base[0], s[:, 3] - a.base[1])
                classes.append(posture_class(d, spec.kpi.reach_thresholds))
    if not classes:
        return 1
    return round_half_up(float(np.concatenate(classes).mean()))


def inverse_manipulability(spec: WorkcellSpec, traces) -> float:
    dets = []
    robots = [a for a in spec.agents if a.kind is AgentKind.ROBOT]
    for a in robots:
        l1, l2 = a.link_lengths
        for tr in traces:
            s = tr.actor_samples(a.index)
            if s.size:
                dets.append(np.abs(l1 * l2 * np.sin(s[:, 5])))
    if not dets:
        if not robots:
            return 1.0 / spec.kpi.epsilon_m
        # an idle robot rests at its home configuration
        for a in robots:
            l1, l2 = a.link_lengths
            q = inverse_kinematics(a, np.asarray([a.home]))
            dets.append(np.abs(l1 * l2 * np.sin(q[:, 1])))
    mean = float(np.concatenate(dets).mean())
    return 1.0 / max(mean, spec.kpi.epsilon_m)


def occupied_surface(spec: WorkcellSpec, layout) -> float:
    """Area of the axis-aligned rectangle enclosing all movable footprints."""
    if not spec.movable:
        return 0.0
    boxes = np.array([geometry.place(r, resource_coords(spec, layout, r.index)).bbox() for r in spec.movable])
    return float((boxes[:, 2].max() - boxes[:, 0].min()) * (boxes[:, 3].max() - boxes[:, 1].min()))


def compute_raw(spec: WorkcellSpec, x: Chromosome, schedule, traces, safety: Optional[bool] = None) -> KpiVector:
    """Raw KPI vector; ``safety`` is computed from the traces when not supplied."""
    if safety is None:
        safety = collision_flag(spec, x, schedule, traces)
    raw = (
        schedule.makespan,
        float(ergonomics_score(spec, traces)),
        inverse_manipulability(spec, traces),
        occupied_surface(spec, x.layout),
    )
    return KpiVector(np.asarray(raw), bool(safety))


def normalize(kpi: KpiVector, stats: BaselineStats) -> KpiVector:
    return KpiVector(kpi.raw, kpi.safety, (kpi.raw - stats.mean) / stats.std)


def fitness(kpi: KpiVector, weights=DEFAULT_WEIGHTS) -> float:
    """Weighted sum of normalized KPIs, +inf when the safety flag is raised."""
    if kpi.safety:
        return math.inf
    if kpi.normalized is None:
        raise ValueError("KPI vector is not normalized")
    return float(np.dot(np.asarray(weights, dtype=float), kpi.normalized))


def stats_from_rows(raw_rows, seed=None) -> BaselineStats:
    """Mean and sample standard deviation per KPI; rejects constant KPIs."""
    rows = np.asarray(raw_rows, dtype=float).reshape(-1, 4)
    if rows.shape[0] < 2:
        raise DegenerateKpiError(f"{rows.shape[0]} baseline sample(s); at least 2 are needed for a variance")
    std = rows.std(axis=0, ddof=1)
    bad = [KPI_NAMES[i] for i in np.flatnonzero(~(std > 0))]
    if bad:
        raise DegenerateKpiError(f"zero baseline variance for {', '.join(bad)}")
    return BaselineStats(rows.mean(axis=0), std, rows.shape[0], seed)


class KpiScaler(TransformerMixin, BaseEstimator):
    """Z-score scaler for raw KPI rows, fitted on a baseline population.

    Works like ``StandardScaler`` but uses the sample standard deviation and
    refuses constant columns, since a constant KPI cannot be normalized.
    """

    def __init__(self, weights=DEFAULT_WEIGHTS):
        self.weights = weights

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        stats = stats_from_rows(X)
        self.stats_ = stats
        self.mean_ = stats.mean
        self.scale_ = stats.std
        self.n_samples_seen_ = stats.sample_count
        return self

    @classmethod
    def from_stats(cls, stats: BaselineStats, weights=DEFAULT_WEIGHTS) -> "KpiScaler":
        sc = cls(weights)
        sc.stats_ = stats
        sc.mean_, sc.scale_, sc.n_samples_seen_ = stats.mean, stats.std, stats.sample_count
        return sc

    def transform(self, X):
        check_is_fitted(self, "stats_")
        X = check_array(X, dtype=float)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "stats_")
        X = check_array(X, dtype=float)
        return X * self.scale_ + self.mean_

    def score_samples(self, X, safety=None):
        """Weighted fitness per row; rows flagged unsafe score +inf."""
        z = self.transform(X) @ np.asarray(self.weights, dtype=float)
        if safety is not None:
            z = np.where(np.asarray(safety, dtype=bool), np.inf, z)
        return z


@dataclass
class Evaluation:
    chromosome: Chromosome
    tau: np.ndarray
    schedule: object
    kpi: KpiVector
    fitness: float
    traces: list = field(default_factory=list, repr=False)


def build_baseline(spec: WorkcellSpec, n_samples: int, seed: int, config=None):
    """Baseline statistics and raw KPI rows from a zero-fitness GA run.

    With every fitness forced to zero the roulette wheel is uniform, so the run
    is a constraint-respecting random search of ``n_samples`` designs.
    """
    from .evolve import build_baseline as _build

    stats, rows, _ = _build(spec, n_samples, seed, config)
    return stats, rows
