"""Controlled random search over the bounded relaxed hyperparameter box.

The optimizer keeps a population of 10 * (n_h + 1) points evolved by
randomized simplex reflection with replace-worst updates: each iteration
forms a simplex from the current best plus n_h distinct random members,
reflects the last member through the centroid of the rest, and, when the
reflection lands out of bounds or fails to beat the worst member, retries
once with a local mutation pulled toward the best point. One proposal
cycle is one iteration; a fixed iteration budget bounds the search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import (
    TRAINED,
    BuildSettings,
    EvalCache,
    EvalRecord,
    evaluate_point,
)
from .spaces import DecodedConfig, SearchSpace

DEFAULT_POPULATION_MULTIPLIER = 10
DEFAULT_MAX_ITERATIONS = 300


@dataclass(frozen=True)
class CrsConfig:
    population_multiplier: int = DEFAULT_POPULATION_MULTIPLIER
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    rng_seed: int = 0
    mutation_enabled: bool = True

    def __post_init__(self):
        if self.population_multiplier < 1:
            raise ValueError("population_multiplier must be at least 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


def population_size(n_h: int, multiplier: int = DEFAULT_POPULATION_MULTIPLIER) -> int:
    return multiplier * (n_h + 1)


class Population:
    """Fixed-size sample population; ties on f resolve to the lowest index."""

    def __init__(self, points: np.ndarray, f: np.ndarray):
        if len(points) != len(f) or len(points) < 2:
            raise ValueError("population needs matching points and f, size >= 2")
        self.points = np.array(points, dtype=float)
        self.f = np.array(f, dtype=float)

    def __len__(self) -> int:
        return len(self.f)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.f))

    @property
    def worst_index(self) -> int:
        return int(np.argmax(self.f))

    @property
    def best_f(self) -> float:
        return float(self.f[self.best_index])

    @property
    def worst_f(self) -> float:
        return float(self.f[self.worst_index])

    @property
    def best_point(self) -> np.ndarray:
        return self.points[self.best_index].copy()

    def replace_worst(self, point, f_value: float):
        idx = self.worst_index
        self.points[idx] = point
        self.f[idx] = f_value


@dataclass(frozen=True)
class SearchResult:
    best_point: tuple[float, ...]
    best_decoded: DecodedConfig
    best_f: float
    best_dice: float | None
    trajectory: tuple[EvalRecord, ...]
    effective_evaluations: int
    evaluation_count: int


def initialize_population(space, config, evaluate) -> tuple[Population, list, np.random.Generator]:
    """Sample and evaluate the starting population; returns its records too."""
    if space.n_h < 1:
        raise ValueError("search needs at least one free dimension")
    rng = np.random.default_rng(config.rng_seed)
    size = population_size(space.n_h, config.population_multiplier)
    points = space.sample(rng, size)
    records = [
        evaluate(points[i], iteration=i, phase="init") for i in range(size)
    ]
    f = np.array([r.f for r in records])
    return Population(points, f), records, rng


def propose_trial(population: Population, rng: np.random.Generator) -> np.ndarray:
    """Reflect the last simplex member through the centroid of the others.

    The simplex is the current best plus n_h distinct other members; the
    centroid covers the first n_h simplex members (best included). The
    trial may leave the box; the caller decides what to do then.
    """
    n_h = population.points.shape[1]
    best = population.best_index
    candidates = np.array([i for i in range(len(population)) if i != best])
    chosen = rng.choice(candidates, size=n_h, replace=False)
    simplex = np.vstack([population.points[best], population.points[chosen]])
    centroid = simplex[:n_h].mean(axis=0)
    return 2.0 * centroid - simplex[-1]


def local_mutation(best, trial, space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    """Coordinate-wise blend past the best point, clamped into the box.

    y_i = (1 + w_i) * best_i - w_i * trial_i with w_i uniform in [0, 1],
    clamped so the exclusive upper bound stays unattained.
    """
    omega = rng.random(space.n_h)
    y = (1.0 + omega) * np.asarray(best, dtype=float) - omega * np.asarray(trial, dtype=float)
    return np.clip(y, space.lower, np.nextafter(space.upper, -np.inf))


def _effective_iterations(records) -> int:
    """Search iterations that produced a freshly trained dice value."""
    return len({
        r.iteration
        for r in records
        if r.phase == "search" and r.outcome.kind == TRAINED and not r.cache_hit
    })


def _finish(records, space, evaluation_count) -> SearchResult:
    best = min(records, key=lambda r: r.f)
    return SearchResult(
        best_point=best.point,
        best_decoded=space.decode(best.point),
        best_f=best.f,
        best_dice=best.outcome.dice,
        trajectory=tuple(records),
        effective_evaluations=_effective_iterations(records),
        evaluation_count=evaluation_count,
    )


def run_search(
    space: SearchSpace,
    evaluator,
    config: CrsConfig = CrsConfig(),
    settings: BuildSettings = BuildSettings(),
    cache: EvalCache | None = None,
) -> SearchResult:
    """Run CRS to the iteration budget and return the full trajectory.

    Evaluator misbehavior is absorbed into penalty records, so the search
    always completes. Fixed seed plus a deterministic evaluator gives a
    bit-identical trajectory.
    """
    cache = cache if cache is not None else EvalCache()

    def evaluate(point, iteration, phase):
        return evaluate_point(
            point, space, evaluator, cache, settings,
            iteration=iteration, phase=phase,
        )

    population, records, rng = initialize_population(space, config, evaluate)
    evaluation_count = len(population)

    for iteration in range(1, config.max_iterations + 1):
        trial = propose_trial(population, rng)
        rejected = trial
        if space.contains(trial):
            record = evaluate(tuple(trial), iteration, "search")
            records.append(record)
            evaluation_count += 1
            if record.f < population.worst_f:
                population.replace_worst(trial, record.f)
                continue
        if not config.mutation_enabled:
            continue
        mutated = local_mutation(population.best_point, rejected, space, rng)
        record = evaluate(tuple(mutated), iteration, "search")
        records.append(record)
        evaluation_count += 1
        if record.f < population.worst_f:
            population.replace_worst(mutated, record.f)

    return _finish(records, space, evaluation_count)


def run_random_search(
    space: SearchSpace,
    evaluator,
    budget: int,
    seed: int,
    settings: BuildSettings = BuildSettings(),
    cache: EvalCache | None = None,
) -> SearchResult:
    """Uniform-sampling baseline at a fixed evaluation budget."""
    cache = cache if cache is not None else EvalCache()
    rng = np.random.default_rng(seed)
    points = space.sample(rng, budget)
    records = [
        evaluate_point(
            points[i], space, evaluator, cache, settings,
            iteration=i + 1, phase="search",
        )
        for i in range(budget)
    ]
    return _finish(records, space, budget)
