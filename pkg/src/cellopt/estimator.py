"""Estimator-style front end: ``fit`` runs baseline + GA, ``predict`` scores designs."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import io as cio
from .errors import SpecError
from .evolve import GaConfig, build_baseline, run
from .kpi import DEFAULT_WEIGHTS, BaselineStats
from .model import Chromosome, WorkcellSpec, check_chromosome, chromosome_dimensions, validate_spec
from .pipeline import Evaluator


def to_vector(spec: WorkcellSpec, x: Chromosome) -> np.ndarray:
    """Flat gene vector: layout genes followed by every allocation entry."""
    check_chromosome(spec, x)
    return np.concatenate([x.layout, np.array([a for eta in x.allocation for a in eta], dtype=float)])


def from_vector(spec: WorkcellSpec, v) -> Chromosome:
    z, m, d = chromosome_dimensions(spec)
    v = np.asarray(v, dtype=float)
    if v.shape != (d,):
        raise ValueError(f"gene vector must have shape ({d},), got {v.shape}")
    genes = v[z:]
    if not np.all(genes == np.round(genes)):
        raise ValueError("allocation genes must be integers")
    allocation, k = [], 0
    for op in spec.operations:
        n = len(spec.required_agents(op.index))
        allocation.append(tuple(int(g) for g in genes[k : k + n]))
        k += n
    return Chromosome(v[:z], tuple(allocation))


def check_spec(spec: Union[WorkcellSpec, str, Path]) -> WorkcellSpec:
    """Accept a spec object, a file path or ``@name``; reject specs with diagnostics."""
    if not isinstance(spec, WorkcellSpec):
        spec = cio.load_spec(cio.resolve_spec_path(str(spec)))
    diags = validate_spec(spec)
    if diags:
        raise SpecError("; ".join(f"{d.code}: {d.message}" for d in diags))
    return spec


class WorkcellOptimizer(BaseEstimator):
    """Genetic-algorithm design search for one work-cell.

    ``fit(spec)`` builds a random-search baseline (unless ``stats`` is given),
    then runs the GA. Fitted attributes end in an underscore.
    ``predict`` returns the fitness of designs under the fitted baseline; lower is better.
    """

    def __init__(
        self,
        n_parents=4,
        n_children=6,
        n_iterations=20,
        mutation_rate=0.25,
        mutation_step=0.1,
        temperature=10.0,
        stagnation_limit=2,
        crossover="inherit",
        weights=DEFAULT_WEIGHTS,
        baseline_samples=124,
        baseline_seed=None,
        exact_schedule=False,
        n_jobs=1,
        random_state=0,
    ):
        self.n_parents = n_parents
        self.n_children = n_children
        self.n_iterations = n_iterations
        self.mutation_rate = mutation_rate
        self.mutation_step = mutation_step
        self.temperature = temperature
        self.stagnation_limit = stagnation_limit
        self.crossover = crossover
        self.weights = weights
        self.baseline_samples = baseline_samples
        self.baseline_seed = baseline_seed
        self.exact_schedule = exact_schedule
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _config(self) -> GaConfig:
        return GaConfig(
            n_parents=self.n_parents,
            n_children=self.n_children,
            n_iterations=self.n_iterations,
            mutation_rate=self.mutation_rate,
            mutation_step=self.mutation_step,
            temperature=self.temperature,
            stagnation_limit=self.stagnation_limit,
            crossover=self.crossover,
            weights=tuple(self.weights),
            seed=int(self.random_state),
            exact_schedule=self.exact_schedule,
            n_jobs=self.n_jobs,
        )

    def fit(self, spec, y=None, stats: Optional[BaselineStats] = None):
        spec = check_spec(spec)
        config = self._config()
        self.baseline_kpis_ = None
        if stats is None:
            bseed = config.seed + 1 if self.baseline_seed is None else self.baseline_seed
            stats, rows, _ = build_baseline(spec, self.baseline_samples, bseed, config)
            self.baseline_kpis_ = np.array([k.raw for k in rows])
        self.spec_ = spec
        self.config_ = config
        self.baseline_ = stats
        self.evaluator_ = Evaluator(spec, stats, config.weights, exact=config.exact_schedule)
        self.result_ = run(spec, config, stats, self.evaluator_)
        best = self.result_.best
        self.best_chromosome_ = best.chromosome
        self.best_fitness_ = best.fitness
        self.best_schedule_ = best.schedule
        self.history_ = list(self.result_.history)
        self.n_evaluations_ = len(self.result_.log)
        return self

    def _chromosomes(self, X) -> list[Chromosome]:
        if len(X) and all(isinstance(x, Chromosome) for x in X):
            for x in X:
                check_chromosome(self.spec_, x)
            return list(X)
        X = check_array(X, dtype=float, ensure_all_finite=True)
        return [from_vector(self.spec_, row) for row in X]

    def transform(self, X) -> np.ndarray:
        """Raw KPI matrix (cycle time, ergonomics, inverse manipulability, surface)."""
        check_is_fitted(self, "result_")
        return np.array([self.evaluator_(x).kpi.raw for x in self._chromosomes(X)])

    def predict(self, X) -> np.ndarray:
        """Fitness per design; designs flagged unsafe get +inf."""
        check_is_fitted(self, "result_")
        return np.array([self.evaluator_(x).fitness for x in self._chromosomes(X)])

    def score(self, X, y=None) -> float:
        """Negated best fitness among ``X`` (higher is better)."""
        return float(-np.min(self.predict(X)))
