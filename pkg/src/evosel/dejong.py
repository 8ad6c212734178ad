"""De Jong F1-F5 test functions and a real-coded GA adapter.

The canonical 1975 definitions and domains are used: F1 sphere on
[-5.12, 5.12]^3, F2 Rosenbrock on [-2.048, 2.048]^2, F3 step on
[-5.12, 5.12]^5, F4 quartic with additive Gaussian noise on [-1.28, 1.28]^30,
F5 Shekel's foxholes on [-65.536, 65.536]^2. The GA maximizes the negated
function value, with blend (BLX-0.5) crossover and bound-clipped Gaussian
mutation; selection/survival strategies and run logging are shared with the
descriptor GA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ga
from .ga import GaError, RunRecord, StrategyPair


class DimensionMismatch(ValueError):
    pass


class OutOfBounds(ValueError):
    pass


def _sphere(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def _rosenbrock(x: np.ndarray) -> float:
    return float(100.0 * (x[0] ** 2 - x[1]) ** 2 + (1.0 - x[0]) ** 2)


def _step(x: np.ndarray) -> float:
    return float(np.sum(np.floor(x)))


def _quartic_noise(x: np.ndarray, rng: np.random.Generator) -> float:
    i = np.arange(1, len(x) + 1)
    return float(np.sum(i * x ** 4) + rng.standard_normal())


_FOXHOLE_A1 = np.tile([-32.0, -16.0, 0.0, 16.0, 32.0], 5)
_FOXHOLE_A2 = np.repeat([-32.0, -16.0, 0.0, 16.0, 32.0], 5)


def _foxholes(x: np.ndarray) -> float:
    j = np.arange(1, 26)
    terms = 1.0 / (j + (x[0] - _FOXHOLE_A1) ** 6 + (x[1] - _FOXHOLE_A2) ** 6)
    return 1.0 / (0.002 + float(terms.sum()))


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    dimension: int
    lower: float
    upper: float
    noisy: bool = False

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple((self.lower, self.upper) for _ in range(self.dimension))


FUNCTIONS: dict[str, FunctionSpec] = {
    "F1": FunctionSpec("F1", 3, -5.12, 5.12),
    "F2": FunctionSpec("F2", 2, -2.048, 2.048),
    "F3": FunctionSpec("F3", 5, -5.12, 5.12),
    "F4": FunctionSpec("F4", 30, -1.28, 1.28, noisy=True),
    "F5": FunctionSpec("F5", 2, -65.536, 65.536),
}

_EVALUATORS = {"F1": _sphere, "F2": _rosenbrock, "F3": _step, "F5": _foxholes}


@dataclass(frozen=True)
class RealGenotype:
    """Real vector constrained to per-dimension closed intervals."""

    values: tuple[float, ...]
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.values) != len(self.bounds):
            raise DimensionMismatch("values and bounds must have equal length")
        for v, (lo, hi) in zip(self.values, self.bounds):
            if not lo <= v <= hi:
                raise OutOfBounds(f"value {v} outside [{lo}, {hi}]")


def eval_dejong(name: str, values, rng: np.random.Generator | None = None) -> float:
    """Evaluate one of F1..F5 at ``values`` (canonical dimension and bounds enforced).

    F4 adds a standard-normal noise draw from ``rng``; the other functions
    ignore it.
    """
    spec = FUNCTIONS.get(name.upper())
    if spec is None:
        raise GaError(f"unknown test function {name!r}; expected F1..F5")
    x = np.asarray(values, dtype=float)
    if x.shape != (spec.dimension,):
        raise DimensionMismatch(f"{spec.name} takes {spec.dimension} values, got shape {x.shape}")
    if np.any(x < spec.lower) or np.any(x > spec.upper):
        raise OutOfBounds(f"{spec.name} domain is [{spec.lower}, {spec.upper}] per dimension")
    if spec.noisy:
        if rng is None:
            raise GaError(f"{spec.name} is noisy and needs an rng")
        return _quartic_noise(x, rng)
    return _EVALUATORS[spec.name](x)


@dataclass
class RealGaConfig:
    """GA settings for real genomes; mirrors GaConfig minus the subset size."""

    function: str
    strategy: StrategyPair
    seed: int
    population_size: int = 50
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    mutation_sd: float = 0.05  # fraction of the domain width
    tournament_size: int = 2

    def __post_init__(self):
        if self.function.upper() not in FUNCTIONS:
            raise GaError(f"unknown test function {self.function!r}")
        self.function = self.function.upper()
        if self.population_size < 4 or self.population_size % 2:
            raise GaError("population_size must be even and >= 4")
        if self.generations < 1:
            raise GaError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise GaError(f"{name} must be in [0, 1]")
        if self.mutation_sd < 0:
            raise GaError("mutation_sd must be >= 0")
        if self.tournament_size < 2:
            raise GaError("tournament_size must be >= 2")

    def as_dict(self) -> dict:
        return {
            "function": self.function,
            "population_size": self.population_size,
            "generations": self.generations,
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "mutation_sd": self.mutation_sd,
            "tournament_size": self.tournament_size,
            "strategy": self.strategy.code,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class RealIndividual:
    values: tuple[float, ...]
    fitness: float

    @property
    def sort_key(self):
        return self.values


def _blend_crossover(a: np.ndarray, b: np.ndarray, rate: float, lower: float, upper: float,
                     rng: np.random.Generator, alpha: float = 0.5):
    if rng.random() >= rate:
        return a.copy(), b.copy()
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    span = hi - lo
    low = lo - alpha * span
    high = hi + alpha * span
    c1 = rng.uniform(low, high)
    c2 = rng.uniform(low, high)
    return np.clip(c1, lower, upper), np.clip(c2, lower, upper)


def _gauss_mutate(x: np.ndarray, rate: float, sd: float, lower: float, upper: float,
                  rng: np.random.Generator) -> np.ndarray:
    out = x.copy()
    for i in range(len(out)):
        if rng.random() < rate:
            out[i] += rng.normal(0.0, sd)
    return np.clip(out, lower, upper)


def run_real(config: RealGaConfig, record_populations: bool = False) -> RunRecord:
    """Evolve on a De Jong function; same loop and logging contract as the descriptor GA.

    Fitness is the negated function value, so maximization applies; the
    best_trace therefore climbs toward 0 (or past it for F4's noise).
    """
    spec = FUNCTIONS[config.function]
    rng = np.random.default_rng(config.seed)
    sd = config.mutation_sd * (spec.upper - spec.lower)

    def make(values: np.ndarray) -> RealIndividual:
        value = eval_dejong(spec.name, values, rng) if spec.noisy else _EVALUATORS[spec.name](values)
        return RealIndividual(tuple(float(v) for v in values), -value)

    pop = [make(rng.uniform(spec.lower, spec.upper, size=spec.dimension))
           for _ in range(config.population_size)]

    record = RunRecord(config, [], [], pop[0], [], [])

    def observe(generation: int, current: list):
        best = ga._best(current)
        if generation > 0 and best.fitness > record.best_trace[-1]:
            record.improvement_events.append(generation)
        record.best_trace.append(best.fitness)
        g_count, f_count = ga.census(current)
        record.distinct_genotypes.append(g_count)
        record.distinct_fitnesses.append(f_count)
        record.final_best = best
        if record_populations:
            record.populations.append(list(current))

    observe(0, pop)
    for generation in range(1, config.generations + 1):
        parents = ga.select_parents(pop, config.population_size, config.strategy.selection,
                                    rng, config.tournament_size)
        offspring = []
        for i in range(0, config.population_size, 2):
            a = np.array(parents[i].values)
            b = np.array(parents[i + 1].values)
            c1, c2 = _blend_crossover(a, b, config.crossover_rate, spec.lower, spec.upper, rng)
            c1 = _gauss_mutate(c1, config.mutation_rate, sd, spec.lower, spec.upper, rng)
            c2 = _gauss_mutate(c2, config.mutation_rate, sd, spec.lower, spec.upper, rng)
            offspring.append(make(c1))
            offspring.append(make(c2))
        pop = ga.survive(pop, offspring, config.strategy.survival, rng, config.tournament_size)
        observe(generation, pop)
    return record
