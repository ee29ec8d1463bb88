"""Chromosome -> cycle times -> schedule -> KPIs -> fitness."""

from __future__ import annotations

from typing import Optional, Sequence

from . import kpi as kpi_mod
from .kpi import BaselineStats, Evaluation
from .model import Chromosome, WorkcellSpec
from .scheduler import DEFAULT_MAX_OPS, schedule_exact, schedule_list
from .surrogate import plan_all


class Evaluator:
    """Scores chromosomes; without baseline stats every fitness is 0 (random-search mode)."""

    def __init__(
        self,
        spec: WorkcellSpec,
        stats: Optional[BaselineStats] = None,
        weights: Sequence[float] = kpi_mod.DEFAULT_WEIGHTS,
        exact: bool = False,
        max_ops: int = DEFAULT_MAX_OPS,
        keep_traces: bool = False,
    ):
        self.spec = spec
        self.stats = stats
        self.weights = tuple(float(w) for w in weights)
        self.exact = exact
        self.max_ops = max_ops
        self.keep_traces = keep_traces

    def schedule(self, x: Chromosome, tau):
        if self.exact:
            return schedule_exact(self.spec, x.allocation, tau, max_ops=self.max_ops)
        return schedule_list(self.spec, x.allocation, tau)

    def __call__(self, x: Chromosome) -> Evaluation:
        tau, traces = plan_all(self.spec, x)
        sched = self.schedule(x, tau)
        raw = kpi_mod.compute_raw(self.spec, x, sched, traces)
        if self.stats is None:
            k, f = raw, 0.0
        else:
            k = kpi_mod.normalize(raw, self.stats)
            f = kpi_mod.fitness(k, self.weights)
        return Evaluation(x, tau, sched, k, f, traces if self.keep_traces else [])

    def rescore(self, ev: Evaluation, stats: BaselineStats) -> float:
        """Fitness of an already simulated evaluation under other baseline stats."""
        return kpi_mod.fitness(kpi_mod.normalize(ev.kpi, stats), self.weights)

    def map(self, xs: Sequence[Chromosome], n_jobs: int = 1) -> list[Evaluation]:
        if n_jobs == 1 or len(xs) < 2:
            return [self(x) for x in xs]
        from joblib import Parallel, delayed

        return Parallel(n_jobs=n_jobs)(delayed(self)(x) for x in xs)
