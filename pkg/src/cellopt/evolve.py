"""Leader genetic algorithm over layout and allocation genes.

Parents are picked with a Boltzmann-weighted roulette wheel, layout and
allocation genes are recombined with binary masks, and candidates are regenerated until enough of them satisfy
every leader constraint. Only children enter the next parent population; the
incumbent keeps the best design seen so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import feasibility
from .errors import InfeasibleError, SpecError
from .kpi import DEFAULT_WEIGHTS, BaselineStats, Evaluation
from .model import Chromosome, WorkcellSpec
from .pipeline import Evaluator

STREAMS = ("sampling", "selection", "crossover", "mutation")
CROSSOVER_MODES = ("inherit", "redraw")


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(str(v))


@dataclass(frozen=True)
class GaConfig:
    n_parents: int = 4
    n_children: int = 6
    n_iterations: int = 20
    mutation_rate: float = 0.25
    mutation_step: float = 0.1  # meters
    temperature: float = 10.0
    crossover: str = "inherit"
    stagnation_limit: int = 2
    adapt_up: float = 1.05
    adapt_down: float = 0.95
    seed: int = 0
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    max_attempts: int = 100_000
    max_tries: int = feasibility.DEFAULT_MAX_TRIES
    exact_schedule: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_children <= 0 or self.n_children % 2:
            raise ValueError("n_children must be a positive even number")
        if self.n_parents <= 0:
            raise ValueError("n_parents must be positive")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be non-negative")
        if not 0 <= float(self.mutation_rate) <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.crossover not in CROSSOVER_MODES:
            raise ValueError(f"crossover must be one of {CROSSOVER_MODES}")
        if len(self.weights) != 4:
            raise ValueError("four KPI weights are required")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @classmethod
    def from_mapping(cls, settings: Mapping[str, object], **overrides) -> "GaConfig":
        """Defaults, updated by ``settings`` (a spec-file GA section), then by non-None ``overrides``."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(settings) - known)
        if unknown:
            raise SpecError(f"unknown GA settings: {', '.join(unknown)}")
        merged = dict(settings)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        if "weights" in merged:
            merged["weights"] = tuple(merged["weights"])
        try:
            return cls(**merged)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"GA settings: {exc}") from exc

    @property
    def budget(self) -> int:
        return self.n_children * self.n_iterations + self.n_parents

    def as_dict(self) -> dict:
        return {
            "n_parents": self.n_parents,
            "n_children": self.n_children,
            "n_iterations": self.n_iterations,
            "mutation_rate": float(self.mutation_rate),
            "mutation_step": float(self.mutation_step),
            "temperature": self.temperature,
            "crossover": self.crossover,
            "stagnation_limit": self.stagnation_limit,
            "adapt_up": float(self.adapt_up),
            "adapt_down": float(self.adapt_down),
            "seed": self.seed,
            "weights": list(self.weights),
            "max_attempts": self.max_attempts,
            "max_tries": self.max_tries,
            "exact_schedule": self.exact_schedule,
        }


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


@dataclass
class GaState:
    parents: list[Chromosome]
    fitness: np.ndarray
    best: Evaluation
    mu: Fraction
    sigma: Fraction
    rngs: dict
    stagnation: int = 0
    iteration: int = 0
    log: list[tuple[int, Evaluation]] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)

    @property
    def best_fitness(self) -> float:
        return self.best.fitness

    @property
    def evaluations(self) -> int:
        return len(self.log)


@dataclass
class OptimizationResult:
    best: Evaluation
    history: list[dict]
    log: list[tuple[int, Evaluation]]
    config: GaConfig
    stats: Optional[BaselineStats]

    @property
    def best_chromosome(self) -> Chromosome:
        return self.best.chromosome

    @property
    def best_fitness(self) -> float:
        return self.best.fitness

    @property
    def evaluations(self) -> list[Evaluation]:
        return [ev for _, ev in self.log]


def selection_probabilities(f_p: Sequence[float], beta: float) -> np.ndarray:
    """Boltzmann weights exp(-beta f / scale), normalized to sum to one.

    ``scale`` is the population mean of |f|, which equals the plain mean for
    non-negative fitness and keeps lower fitness more likely when z-scored
    values turn negative. Infinite fitness is first replaced by the largest
    finite value plus one population standard deviation.
    """
    f = np.asarray(f_p, dtype=float)
    finite = np.isfinite(f)
    if not finite.any():
        return np.full(f.size, 1.0 / f.size)
    if not finite.all():
        fin = f[finite]
        f = np.where(finite, f, fin.max() + fin.std())
    scale = np.abs(f).mean()
    if scale == 0.0 or beta == 0.0:
        return np.full(f.size, 1.0 / f.size)
    w = np.exp(-beta * (f - f.min()) / scale)
    return w / w.sum()


def select_parents(f_p: Sequence[float], beta: float, rng: np.random.Generator) -> tuple[int, int]:
    """Roulette wheel: two uniform draws located in the cumulative probability cells."""
    cdf = np.cumsum(selection_probabilities(f_p, beta))
    cdf[-1] = 1.0
    u = rng.random(2)
    i, j = np.searchsorted(cdf, u, side="right")
    return int(i), int(j)


def crossover(
    a: Chromosome,
    b: Chromosome,
    spec: WorkcellSpec,
    rng: np.random.Generator,
    mask=None,
    allocation: str = "inherit",
):
    """Binary-mask recombination.

    Layout genes mix through ``mask`` (one entry per layout gene). With
    ``allocation="inherit"`` each individual operation's agent comes from one
    parent picked at random, the second child taking the other parent's;
    ``"redraw"`` ignores both parents and draws every gene afresh from its
    eligible set. Collaborative operations always get their forced agent set.
    """
    if allocation not in CROSSOVER_MODES:
        raise ValueError(f"allocation must be one of {CROSSOVER_MODES}")
    if mask is None:
        mask = rng.integers(0, 2, size=a.layout.size)
    v = np.asarray(mask, dtype=float)
    la = v * a.layout + (1 - v) * b.layout
    lb = (1 - v) * a.layout + v * b.layout
    if allocation == "redraw":
        return (
            Chromosome(la, feasibility.draw_allocation(spec, rng)),
            Chromosome(lb, feasibility.draw_allocation(spec, rng)),
        )
    pick = rng.integers(0, 2, size=spec.n_ops)
    alloc_a, alloc_b = [], []
    for op, ea, eb, k in zip(spec.operations, a.allocation, b.allocation, pick):
        if op.is_collaborative:
            forced = spec.required_agents(op.index)
            alloc_a.append(forced)
            alloc_b.append(forced)
        else:
            first, second = (ea, eb) if k else (eb, ea)
            alloc_a.append(first)
            alloc_b.append(second)
    return Chromosome(la, tuple(alloc_a)), Chromosome(lb, tuple(alloc_b))


def mutate(x: Chromosome, spec: WorkcellSpec, mu: float, sigma: float, rng: np.random.Generator) -> Chromosome:
    """Per-gene mutation: Gaussian steps on layout genes, redraws on individual allocation genes."""
    z = x.layout.size
    m = sum(len(e) for e in x.allocation)
    hit = rng.random(z + m) < float(mu)
    steps = rng.standard_normal(z)
    layout = x.layout + np.where(hit[:z], float(sigma) * steps, 0.0)
    allocation = []
    g = z
    for op, eta in zip(spec.operations, x.allocation):
        eta = list(eta)
        for q in range(len(eta)):
            if hit[g] and not op.is_collaborative:
                others = [a for a in op.eligible if a != eta[q]] if len(op.eligible) > 1 else list(op.eligible)
                eta[q] = int(others[rng.integers(len(others))])
            g += 1
        allocation.append(tuple(eta))
    return Chromosome(layout, tuple(allocation))


def make_children(state: GaState, spec: WorkcellSpec, config: GaConfig) -> list[Chromosome]:
    """Select, recombine and mutate until ``n_children`` feasible children exist."""
    rngs = state.rngs
    children: list[Chromosome] = []
    attempts = 0
    while len(children) < config.n_children:
        i, j = select_parents(state.fitness, config.temperature, rngs["selection"])
        pair = crossover(state.parents[i], state.parents[j], spec, rngs["crossover"], allocation=config.crossover)
        for child in pair:
            child = mutate(child, spec, state.mu, state.sigma, rngs["mutation"])
            attempts += 1
            if feasibility.check(spec, child).ok and len(children) < config.n_children:
                children.append(child)
        if attempts >= config.max_attempts and len(children) < config.n_children:
            raise InfeasibleError(
                f"only {len(children)} of {config.n_children} feasible children after {attempts} attempts",
                code="CHILD_GENERATION_STALLED",
            )
    return children


def adapt(state: GaState, improved: bool, config: GaConfig) -> None:
    """Adaptive mutation: reset on improvement, grow rate and shrink step past the stagnation limit."""
    if improved:
        state.mu = _exact(config.mutation_rate)
        state.sigma = _exact(config.mutation_step)
        state.stagnation = 0
        return
    state.stagnation += 1
    if state.stagnation > config.stagnation_limit:
        state.mu = state.mu * _exact(config.adapt_up)
        state.sigma = state.sigma * _exact(config.adapt_down)


def _sorted(evals: list[Evaluation]) -> list[Evaluation]:
    return sorted(evals, key=lambda e: e.fitness)


def _record(state: GaState):
    f = state.fitness
    fin = f[np.isfinite(f)]
    state.history.append(
        {
            "iteration": state.iteration,
            "best_f": state.best.fitness,
            "mean_f": float(fin.mean()) if fin.size else math.inf,
            "mu": float(state.mu),
            "sigma": float(state.sigma),
        }
    )


def initialize(spec: WorkcellSpec, config: GaConfig, evaluate: Callable, n: Optional[int] = None) -> GaState:
    rngs = make_streams(config.seed)
    n = config.n_parents if n is None else n
    parents = [feasibility.sample(spec, rngs["sampling"], config.max_tries) for _ in range(n)]
    evals = _sorted(list(evaluate(parents)))
    state = GaState(
        parents=[e.chromosome for e in evals],
        fitness=np.array([e.fitness for e in evals]),
        best=evals[0],
        mu=_exact(config.mutation_rate),
        sigma=_exact(config.mutation_step),
        rngs=rngs,
    )
    state.log.extend((0, e) for e in evals)
    _record(state)
    return state


def step(state: GaState, spec: WorkcellSpec, evaluate: Callable, config: GaConfig, n_eval: Optional[int] = None) -> GaState:
    """One generation: children, evaluation, replacement, incumbent update, adaptive mutation."""
    children = make_children(state, spec, config)
    if n_eval is not None:
        children = children[:n_eval]
    evals = list(evaluate(children))
    state.iteration += 1
    state.log.extend((state.iteration, e) for e in evals)
    evals = _sorted(evals)[: config.n_parents]
    state.parents = [e.chromosome for e in evals]
    state.fitness = np.array([e.fitness for e in evals])
    improved = bool(state.fitness[0] < state.best.fitness)
    if improved:
        state.best = evals[0]
    adapt(state, improved, config)
    _record(state)
    return state


def _evaluate_fn(evaluator, n_jobs: int) -> Callable:
    if isinstance(evaluator, Evaluator):
        return lambda xs: evaluator.map(xs, n_jobs)
    return lambda xs: [evaluator(x) for x in xs]


def run(
    spec: WorkcellSpec,
    config: GaConfig,
    stats: Optional[BaselineStats] = None,
    evaluator=None,
    budget: Optional[int] = None,
) -> OptimizationResult:
    """Run the GA for ``n_iterations`` generations (``n_children * n_iterations + n_parents`` evaluations).

    ``budget`` caps the number of evaluations, truncating the last generation.
    """
    if evaluator is None:
        evaluator = Evaluator(spec, stats, config.weights, exact=config.exact_schedule)
    evaluate = _evaluate_fn(evaluator, config.n_jobs)
    total = config.budget if budget is None else budget
    state = initialize(spec, config, evaluate, min(config.n_parents, total))
    while state.evaluations < total:
        left = total - state.evaluations
        step(state, spec, evaluate, config, n_eval=min(left, config.n_children))
    return OptimizationResult(state.best, state.history, state.log, config, stats)


def random_search(spec: WorkcellSpec, n_samples: int, seed: int, config: Optional[GaConfig] = None) -> OptimizationResult:
    """The GA with every fitness forced to zero: uniform selection, constraint-respecting random designs."""
    config = replace(config or GaConfig(), seed=seed)
    evaluator = Evaluator(spec, None, config.weights, exact=config.exact_schedule)
    return run(spec, config, None, evaluator, budget=n_samples)


def build_baseline(spec: WorkcellSpec, n_samples: int, seed: int, config: Optional[GaConfig] = None):
    """Baseline statistics plus every raw KPI vector of a zero-fitness run."""
    from .kpi import stats_from_rows

    result = random_search(spec, n_samples, seed, config)
    rows = [ev.kpi for ev in result.evaluations]
    stats = stats_from_rows([k.raw for k in rows], seed=seed)
    return stats, rows, result
