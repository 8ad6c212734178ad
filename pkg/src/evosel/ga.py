"""Classical GA over descriptor-index genotypes.

A genotype is an ordered tuple of k distinct descriptor indices; its fitness
is the r-squared of the OLS fit on those columns (rank-deficient subsets get
fitness 0). Parent selection and survival each come in three flavours,
proportional / deterministic / tournament, giving the nine strategy pairs
PP..TT. Survival acts on the merged parent+offspring pool without
replacement and always retains the incumbent pool best, so the best-so-far
trace never regresses.

Tie-breaking is lexicographic on the sorted gene tuple everywhere, which
makes a run a pure function of (dataset, config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .regress import BadIndices, RankDeficient, fit_mlr


class GaError(ValueError):
    pass


class EmptyPopulation(GaError):
    pass


class SizeMismatch(GaError):
    pass


class Strategy(Enum):
    PROPORTIONAL = "P"
    DETERMINISTIC = "D"
    TOURNAMENT = "T"


@dataclass(frozen=True)
class StrategyPair:
    """One of the nine selection x survival combinations (PP .. TT)."""

    selection: Strategy
    survival: Strategy

    @property
    def code(self) -> str:
        return self.selection.value + self.survival.value

    @classmethod
    def from_code(cls, code: str) -> "StrategyPair":
        code = code.strip().upper()
        try:
            return cls(Strategy(code[0]), Strategy(code[1]))
        except (ValueError, IndexError):
            raise GaError(f"unknown strategy code {code!r}; expected one of PP..TT") from None


#: Canonical experiment order: selection-major P, D, T.
ALL_STRATEGY_PAIRS: tuple[StrategyPair, ...] = tuple(
    StrategyPair(sel, sur) for sel in Strategy for sur in Strategy
)


@dataclass(frozen=True)
class Genotype:
    """Ordered set of k distinct descriptor indices."""

    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))
        if len(set(self.genes)) != len(self.genes):
            raise GaError(f"genes must be distinct, got {self.genes}")

    @property
    def sort_key(self) -> tuple[int, ...]:
        return tuple(sorted(self.genes))


@dataclass(frozen=True)
class Individual:
    genotype: Genotype
    fitness: float

    @property
    def sort_key(self):
        return self.genotype.sort_key


@dataclass
class GaConfig:
    strategy: StrategyPair
    seed: int
    population_size: int = 50
    k: int = 2
    generations: int = 1000
    crossover_rate: float = 0.8
    mutation_rate: float = 0.05
    tournament_size: int = 2

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise GaError("population_size must be even and >= 4")
        if self.k < 1:
            raise GaError("k must be >= 1")
        if self.generations < 1:
            raise GaError("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise GaError(f"{name} must be in [0, 1]")
        if self.tournament_size < 2:
            raise GaError("tournament_size must be >= 2")

    def as_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "k": self.k,
            "generations": self.generations,
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "tournament_size": self.tournament_size,
            "strategy": self.strategy.code,
            "seed": self.seed,
        }


@dataclass
class RunRecord:
    """Everything observed during one run.

    ``best_trace`` has generations+1 entries (generation 0 included) and is
    non-decreasing; ``improvement_events`` are exactly its strict-increase
    generation indices. The census lists count distinct genotypes (by sorted
    gene tuple) and distinct fitness values in each generation's population.
    """

    config: GaConfig
    best_trace: list[float]
    improvement_events: list[int]
    final_best: Individual
    distinct_genotypes: list[int]
    distinct_fitnesses: list[int]
    populations: list[list[Individual]] = field(default_factory=list)


def evaluate(data: Dataset, genotype: Genotype) -> Individual:
    """Fitness = r-squared of the OLS fit on the genotype's columns; 0 if rank deficient."""
    try:
        fitness = fit_mlr(data, genotype.genes).r2
    except RankDeficient:
        fitness = 0.0
    return Individual(genotype, fitness)


def _best(pop: Sequence) -> "Individual":
    return max(pop, key=lambda ind: (ind.fitness, _neg_key(ind.sort_key)))


def _neg_key(key):
    # max() with lexicographic tie-break toward the SMALLER key: invert it.
    return tuple(-c for c in key)


def _ranked(pop: Sequence) -> list:
    """Descending fitness, ties broken toward the lexicographically smaller key."""
    return sorted(pop, key=lambda ind: (-ind.fitness, ind.sort_key))


def select_parents(pop: Sequence, n: int, strategy: Strategy, rng: np.random.Generator,
                   tournament_size: int = 2) -> list:
    """Draw n parents with replacement.

    Proportional: draw i with probability fitness_i / sum(fitness); an
    all-nonpositive population falls back to uniform draws. Fitness values
    below the population minimum of 0 are shifted so weights stay
    nonnegative (only relevant for fitness scales other than r-squared).
    Deterministic: the top n by fitness, cycling when n exceeds the
    population. Tournament: each draw keeps the best of tournament_size
    uniform picks.
    """
    if not pop:
        raise EmptyPopulation("cannot select from an empty population")
    if strategy is Strategy.DETERMINISTIC:
        ranked = _ranked(pop)
        return [ranked[i % len(ranked)] for i in range(n)]
    if strategy is Strategy.PROPORTIONAL:
        weights = np.array([ind.fitness for ind in pop], dtype=float)
        low = weights.min()
        if low < 0.0:
            weights = weights - low
        total = weights.sum()
        if total <= 0.0:
            picks = rng.integers(len(pop), size=n)
        else:
            picks = rng.choice(len(pop), size=n, p=weights / total)
        return [pop[i] for i in picks]
    if strategy is Strategy.TOURNAMENT:
        chosen = []
        for _ in range(n):
            entrants = rng.integers(len(pop), size=tournament_size)
            chosen.append(_best([pop[i] for i in entrants]))
        return chosen
    raise GaError(f"unknown selection strategy {strategy!r}")


def crossover(a: Genotype, b: Genotype, rate: float, n_indices: int,
              rng: np.random.Generator) -> tuple[Genotype, Genotype]:
    """One-point crossover with duplicate-gene repair.

    With probability ``rate`` a uniform cut in [1, k-1] swaps tails;
    otherwise both children are copies. Any repeated index a child picks up
    is replaced by a uniform random index unused in that child, so the
    distinctness invariant survives every mating.
    """
    if len(a.genes) != len(b.genes):
        raise GaError("parents must have equal gene counts")
    k = len(a.genes)
    if k < 2 or rng.random() >= rate:
        return a, b
    cut = int(rng.integers(1, k))
    child1 = _repair(a.genes[:cut] + b.genes[cut:], n_indices, rng)
    child2 = _repair(b.genes[:cut] + a.genes[cut:], n_indices, rng)
    return Genotype(child1), Genotype(child2)


def _repair(genes: tuple[int, ...], n_indices: int, rng: np.random.Generator) -> tuple[int, ...]:
    out = list(genes)
    seen: set[int] = set()
    for i, g in enumerate(out):
        if g in seen:
            unused = sorted(set(range(n_indices)) - set(out))
            out[i] = unused[int(rng.integers(len(unused)))]
        seen.add(out[i])
    return tuple(out)


def mutate(g: Genotype, rate: float, n_indices: int, rng: np.random.Generator) -> Genotype:
    """Replace each locus, independently with probability ``rate``, by a uniform unused index."""
    genes = list(g.genes)
    for i in range(len(genes)):
        if rng.random() < rate:
            unused = sorted(set(range(n_indices)) - set(genes))
            if unused:
                genes[i] = unused[int(rng.integers(len(unused)))]
    return Genotype(tuple(genes))


def survive(parents: Sequence, offspring: Sequence, strategy: Strategy,
            rng: np.random.Generator, tournament_size: int = 2) -> list:
    """Pick P survivors from the merged parent+offspring pool, without replacement.

    Same three rules as parent selection, applied without replacement:
    proportional = sequential fitness-weighted draws, deterministic = top P,
    tournament = repeated tournaments removing each winner from the pool.
    The overall pool best is always retained (elitism of 1), replacing the
    worst survivor if it was not otherwise selected.
    """
    if len(parents) != len(offspring):
        raise SizeMismatch(f"{len(parents)} parents vs {len(offspring)} offspring")
    pool = list(parents) + list(offspring)
    count = len(parents)
    if strategy is Strategy.DETERMINISTIC:
        survivors = _ranked(pool)[:count]
    elif strategy is Strategy.PROPORTIONAL:
        survivors = _weighted_without_replacement(pool, count, rng)
    elif strategy is Strategy.TOURNAMENT:
        survivors = []
        remaining = list(pool)
        for _ in range(count):
            entrants = rng.integers(len(remaining), size=tournament_size)
            winner = _best([remaining[i] for i in entrants])
            remaining.remove(winner)
            survivors.append(winner)
    else:
        raise GaError(f"unknown survival strategy {strategy!r}")

    elite = _best(pool)
    if not any(s.fitness == elite.fitness and s.sort_key == elite.sort_key for s in survivors):
        worst_at = min(range(len(survivors)), key=lambda i: (survivors[i].fitness, survivors[i].sort_key))
        survivors[worst_at] = elite
    return survivors


def _weighted_without_replacement(pool: list, count: int, rng: np.random.Generator) -> list:
    remaining = list(pool)
    weights = np.array([ind.fitness for ind in pool], dtype=float)
    low = weights.min()
    if low < 0.0:
        weights = weights - low
    weights = list(weights)
    survivors = []
    for _ in range(count):
        total = sum(weights)
        if total <= 0.0:
            at = int(rng.integers(len(remaining)))
        else:
            r = rng.random() * total
            acc = 0.0
            at = len(remaining) - 1
            for i, w in enumerate(weights):
                acc += w
                if r < acc:
                    at = i
                    break
        survivors.append(remaining.pop(at))
        weights.pop(at)
    return survivors


def random_genotype(n_indices: int, k: int, rng: np.random.Generator) -> Genotype:
    return Genotype(tuple(int(i) for i in rng.choice(n_indices, size=k, replace=False)))


class _CachedEvaluator:
    """Per-run fitness memo; the fitness of a gene set is a pure function of the dataset."""

    def __init__(self, data: Dataset):
        self.data = data
        self._memo: dict[tuple[int, ...], float] = {}

    def __call__(self, genotype: Genotype) -> Individual:
        key = genotype.sort_key
        fitness = self._memo.get(key)
        if fitness is None:
            fitness = evaluate(self.data, genotype).fitness
            self._memo[key] = fitness
        return Individual(genotype, fitness)


def census(pop: Sequence) -> tuple[int, int]:
    """(distinct genotypes by sorted gene tuple, distinct fitness values)."""
    return len({ind.sort_key for ind in pop}), len({ind.fitness for ind in pop})


def run(data: Dataset, config: GaConfig, record_populations: bool = False,
        validate_populations: bool = False) -> RunRecord:
    """Evolve a seeded random population for ``config.generations`` generations.

    Each generation: select P parents, pair them in order (1&2, 3&4, ...),
    one-point crossover, per-gene mutation, evaluate, then survival over the
    merged population+offspring pool. Deterministic for a fixed seed.
    ``validate_populations`` re-checks the gene-distinctness invariant on
    every generation (debug aid); ``record_populations`` keeps full
    per-generation populations on the record.
    """
    if config.k > data.n_descriptors:
        raise BadIndices(f"k={config.k} exceeds {data.n_descriptors} descriptors")
    if data.n_compounds < config.k + 2:
        raise BadIndices(f"need at least k+2={config.k + 2} rows, dataset has {data.n_compounds}")
    rng = np.random.default_rng(config.seed)
    evaluator = _CachedEvaluator(data)
    pop = [evaluator(random_genotype(data.n_descriptors, config.k, rng))
           for _ in range(config.population_size)]

    record = RunRecord(config, [], [], _best(pop), [], [])

    def observe(generation: int, current: list):
        best = _best(current)
        if generation > 0 and best.fitness > record.best_trace[-1]:
            record.improvement_events.append(generation)
        record.best_trace.append(best.fitness)
        g_count, f_count = census(current)
        record.distinct_genotypes.append(g_count)
        record.distinct_fitnesses.append(f_count)
        record.final_best = best
        if record_populations:
            record.populations.append(list(current))
        if validate_populations:
            for ind in current:
                if len(set(ind.genotype.genes)) != len(ind.genotype.genes):
                    raise GaError(f"distinctness violated at generation {generation}: {ind.genotype.genes}")

    observe(0, pop)
    for generation in range(1, config.generations + 1):
        parents = select_parents(pop, config.population_size, config.strategy.selection,
                                 rng, config.tournament_size)
        offspring = []
        for i in range(0, config.population_size, 2):
            c1, c2 = crossover(parents[i].genotype, parents[i + 1].genotype,
                               config.crossover_rate, data.n_descriptors, rng)
            c1 = mutate(c1, config.mutation_rate, data.n_descriptors, rng)
            c2 = mutate(c2, config.mutation_rate, data.n_descriptors, rng)
            offspring.append(evaluator(c1))
            offspring.append(evaluator(c2))
        pop = survive(pop, offspring, config.strategy.survival, rng, config.tournament_size)
        observe(generation, pop)
    return record
