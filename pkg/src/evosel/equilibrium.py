"""No-selection equilibrium simulator for allele-string populations.

Finite-population checks of three limit laws: under repeated mutation alone
(or mutation plus recombination) every length-L string over a C-symbol
alphabet tends to proportion 1/C^L; under repeated recombination alone,
string proportions tend to the product of the initial per-locus allele
proportions (the Robbins / linkage equilibrium), while per-locus allele
counts are conserved exactly.

Mutation replaces a hit locus by a uniform symbol from the FULL alphabet
(the current symbol included); recombination is uniform crossover over
uniformly random pairs. Both choices keep the limits exact and convergence
fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# String-proportion bookkeeping materializes all C^L cells.
MAX_STRING_SPACE = 1 << 16


class EquilibriumError(ValueError):
    pass


class OddPopulation(EquilibriumError):
    pass


@dataclass(frozen=True)
class AllelePopulation:
    """P strings of L symbols drawn from a C-symbol alphabet."""

    cardinality: int
    strings: np.ndarray

    def __post_init__(self):
        strings = np.asarray(self.strings, dtype=np.int64)
        object.__setattr__(self, "strings", strings)
        if self.cardinality < 2:
            raise EquilibriumError("alphabet cardinality must be >= 2")
        if strings.ndim != 2 or strings.shape[1] < 1:
            raise EquilibriumError("strings must be a P x L matrix with L >= 1")
        if strings.min() < 0 or strings.max() >= self.cardinality:
            raise EquilibriumError("symbols must lie in [0, cardinality)")
        strings.flags.writeable = False

    @property
    def size(self) -> int:
        return self.strings.shape[0]

    @property
    def length(self) -> int:
        return self.strings.shape[1]

    @property
    def n_strings(self) -> int:
        return int(self.cardinality ** self.length)


@dataclass(frozen=True)
class StringProportions:
    """Current string proportions plus the per-locus allele proportions."""

    string_props: np.ndarray  # length C^L, indexed by encoded string
    locus_props: np.ndarray   # L x C


def uniform_population(cardinality: int, length: int, size: int,
                       rng: np.random.Generator) -> AllelePopulation:
    return AllelePopulation(cardinality, rng.integers(cardinality, size=(size, length)))


def constant_population(cardinality: int, length: int, size: int, symbol: int = 0) -> AllelePopulation:
    return AllelePopulation(cardinality, np.full((size, length), symbol, dtype=np.int64))


def encode_strings(pop: AllelePopulation) -> np.ndarray:
    powers = pop.cardinality ** np.arange(pop.length - 1, -1, -1, dtype=np.int64)
    return pop.strings @ powers


def decode_strings(codes: np.ndarray, cardinality: int, length: int) -> np.ndarray:
    out = np.empty((len(codes), length), dtype=np.int64)
    rest = np.asarray(codes, dtype=np.int64)
    for i in range(length - 1, -1, -1):
        out[:, i] = rest % cardinality
        rest = rest // cardinality
    return out


def string_counts(pop: AllelePopulation) -> np.ndarray:
    if pop.n_strings > MAX_STRING_SPACE:
        raise EquilibriumError(f"string space C^L = {pop.n_strings} too large to tabulate")
    return np.bincount(encode_strings(pop), minlength=pop.n_strings)


def locus_counts(pop: AllelePopulation) -> np.ndarray:
    counts = np.zeros((pop.length, pop.cardinality), dtype=np.int64)
    for i in range(pop.length):
        counts[i] = np.bincount(pop.strings[:, i], minlength=pop.cardinality)
    return counts


def proportions(pop: AllelePopulation) -> StringProportions:
    return StringProportions(string_counts(pop) / pop.size, locus_counts(pop) / pop.size)


def step_mutation(pop: AllelePopulation, rate: float, rng: np.random.Generator) -> AllelePopulation:
    """Each locus of each string is replaced, with probability ``rate``, by a
    uniform symbol from the full alphabet."""
    if not 0.0 <= rate <= 1.0:
        raise EquilibriumError("mutation rate must be in [0, 1]")
    hits = rng.random(pop.strings.shape) < rate
    replacements = rng.integers(pop.cardinality, size=pop.strings.shape)
    return AllelePopulation(pop.cardinality, np.where(hits, replacements, pop.strings))


def step_recombination(pop: AllelePopulation, rng: np.random.Generator) -> AllelePopulation:
    """Uniformly pair the strings; each pair makes two children by uniform
    crossover (each locus swapped independently with probability 1/2).
    Per-locus allele counts are conserved exactly."""
    if pop.size % 2:
        raise OddPopulation(f"population size {pop.size} is odd, cannot pair")
    perm = rng.permutation(pop.size)
    first = pop.strings[perm[0::2]]
    second = pop.strings[perm[1::2]]
    swap = rng.random(first.shape) < 0.5
    child_a = np.where(swap, second, first)
    child_b = np.where(swap, first, second)
    return AllelePopulation(pop.cardinality, np.concatenate([child_a, child_b]))


def step_both(pop: AllelePopulation, rate: float, rng: np.random.Generator) -> AllelePopulation:
    """Recombination followed by mutation."""
    return step_mutation(step_recombination(pop, rng), rate, rng)


def equilibrium_target(pop0: AllelePopulation, mode: str) -> np.ndarray:
    """Limiting string proportions for the given dynamics, from the start state.

    Mutation (with or without recombination) forgets the start: uniform
    1/C^L. Recombination alone converges to the product of the initial
    per-locus allele proportions.
    """
    if pop0.n_strings > MAX_STRING_SPACE:
        raise EquilibriumError(f"string space C^L = {pop0.n_strings} too large to tabulate")
    if mode in ("mutation", "both"):
        return np.full(pop0.n_strings, 1.0 / pop0.n_strings)
    if mode == "recombination":
        locus_props = locus_counts(pop0) / pop0.size
        symbols = decode_strings(np.arange(pop0.n_strings), pop0.cardinality, pop0.length)
        target = np.ones(pop0.n_strings)
        for i in range(pop0.length):
            target *= locus_props[i, symbols[:, i]]
        return target
    raise EquilibriumError(f"unknown mode {mode!r}")


def _stepper(mode: str, rate: float):
    if mode == "mutation":
        return lambda pop, rng: step_mutation(pop, rate, rng)
    if mode == "recombination":
        return lambda pop, rng: step_recombination(pop, rng)
    if mode == "both":
        return lambda pop, rng: step_both(pop, rate, rng)
    raise EquilibriumError(f"unknown mode {mode!r}")


def trajectory(pop0: AllelePopulation, mode: str, rate: float, steps: int,
               rng: np.random.Generator) -> np.ndarray:
    """Per-step max-norm distance between string proportions and the limit.

    Entry 0 is the initial distance, so the result has steps+1 entries.
    """
    if steps < 0:
        raise EquilibriumError("steps must be >= 0")
    target = equilibrium_target(pop0, mode)
    step = _stepper(mode, rate)
    pop = pop0
    distances = np.empty(steps + 1)
    distances[0] = np.max(np.abs(string_counts(pop) / pop.size - target))
    for t in range(1, steps + 1):
        pop = step(pop, rng)
        distances[t] = np.max(np.abs(string_counts(pop) / pop.size - target))
    return distances


def steps_to_threshold(distances: np.ndarray, threshold: float) -> int | None:
    """First step index at which the distance drops to ``threshold`` or below."""
    hits = np.flatnonzero(np.asarray(distances) <= threshold)
    return int(hits[0]) if hits.size else None
