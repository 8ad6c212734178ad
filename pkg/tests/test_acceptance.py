"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria complete. Tolerances are fixed here, not calibrated afterwards.
"""

import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from evosel.batch import BatchSpec, exhaustive_search, read_evo_file, run_batch
from evosel.dataset import Dataset, synth_dataset, write_dataset
from evosel.dejong import RealGaConfig, eval_dejong, run_real
from evosel.equilibrium import (
    AllelePopulation,
    constant_population,
    locus_counts,
    steps_to_threshold,
    step_both,
    step_mutation,
    step_recombination,
    string_counts,
    trajectory,
)
from evosel.evstats import fit_gev, variance_split
from evosel.ga import GaConfig, Genotype, Individual, Strategy, StrategyPair, run, select_parents
from evosel.regress import fit_mlr

FIXTURE_R2 = 0.9989234288790203      # normal-equation oracle, frozen pre-build
F5_OPTIMUM = 0.9980038388186492      # direct 25-term sum at (-32, -32)


@contextmanager
def criterion(number: int, description: str):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[criterion {number:2d}] FAIL: {description}")
        raise
    elapsed = time.perf_counter() - start
    print(f"[criterion {number:2d}] PASS ({elapsed:6.1f}s): {description}")


def test_criterion_01_theorem1_mutation_limit():
    with criterion(1, "mutation-only limit 1/C^L, time-averaged, +/-0.02, <60s"):
        start = time.perf_counter()
        rng = np.random.default_rng(0)
        pop = constant_population(2, 3, 10_000)
        averaged = np.zeros(8)
        for step in range(2000):
            pop = step_mutation(pop, 0.1, rng)
            if step >= 1500:
                averaged += string_counts(pop)
        averaged /= 500 * 10_000
        assert np.max(np.abs(averaged - 1.0 / 8.0)) <= 0.02
        assert time.perf_counter() - start < 60.0


def test_criterion_02_theorem2_robbins_limit():
    with criterion(2, "recombination conserves allele counts; p(1,1) -> 0.125 +/- 0.02, <30s"):
        start = time.perf_counter()
        strings = np.concatenate([
            np.tile([1, 1], (2500, 1)),
            np.tile([1, 0], (2500, 1)),
            np.tile([0, 0], (5000, 1)),
        ])
        pop = AllelePopulation(2, strings)
        initial_counts = locus_counts(pop)
        rng = np.random.default_rng(1)
        for _ in range(500):
            pop = step_recombination(pop, rng)
            assert np.array_equal(locus_counts(pop), initial_counts)
        p11 = string_counts(pop)[3] / pop.size
        assert abs(p11 - 0.125) <= 0.02
        assert time.perf_counter() - start < 30.0


def test_criterion_03_theorem3_mutation_plus_recombination():
    with criterion(3, "mutation+recombination from all-zeros -> 1/C^L +/- 0.02 for (2,3),(3,2), <60s"):
        start = time.perf_counter()
        for c, length in ((2, 3), (3, 2)):
            rng = np.random.default_rng(2)
            pop = constant_population(c, length, 10_000)
            for _ in range(400):
                pop = step_both(pop, 0.05, rng)
            props = string_counts(pop) / pop.size
            assert np.max(np.abs(props - 1.0 / c ** length)) <= 0.02, (c, length)
        assert time.perf_counter() - start < 60.0


def test_criterion_04_mutation_rate_ordering():
    with criterion(4, "median steps to distance 0.05 strictly decreasing over rates 0.01/0.1/0.5"):
        medians = []
        for rate in (0.01, 0.1, 0.5):
            needed = []
            for seed in range(20):
                rng = np.random.default_rng(1000 + seed)
                distances = trajectory(constant_population(2, 3, 10_000),
                                       "mutation", rate, 600, rng)
                arrival = steps_to_threshold(distances, 0.05)
                assert arrival is not None
                needed.append(arrival)
            medians.append(float(np.median(needed)))
        assert medians[0] > medians[1] > medians[2], medians


def test_criterion_05_oracle_equivalence_and_ga_reach(noiseless_synth):
    with criterion(5, "exhaustive optimum 1.0; DT reaches 0.99*optimum in >=42/46 runs, <5min"):
        start = time.perf_counter()
        oracle = exhaustive_search(noiseless_synth.dataset, 2)
        assert oracle.best_r2 == pytest.approx(1.0, abs=1e-9)
        assert oracle.best_indices == noiseless_synth.true_indices
        reached = 0
        for seed in range(46):
            config = GaConfig(strategy=StrategyPair.from_code("DT"), seed=seed,
                              population_size=50, k=2, generations=1000)
            record = run(noiseless_synth.dataset, config)
            if record.final_best.fitness >= 0.99 * oracle.best_r2:
                reached += 1
        assert reached >= 42, f"only {reached}/46 runs reached the target"
        assert time.perf_counter() - start < 300.0


def test_criterion_06_nine_strategy_batch_integrity(tmp_path):
    with criterion(6, "default 9x46 batch: 414 file pairs, monotone traces, distinct genes, byte-identical rerun"):
        dataset_path = tmp_path / "batch_data.csv"
        write_dataset(synth_dataset(30, 8, 2, 0.0, seed=11).dataset, dataset_path)

        def spec(out):
            # default runs_per_strategy (46) and all nine strategies; the
            # generation/population budget is reduced to keep the suite quick
            return BatchSpec(dataset_path=str(dataset_path), out_dir=str(out),
                             tag="acc", base_seed=7, population_size=20,
                             generations=60, validate_populations=True)

        out_a, out_b = tmp_path / "a", tmp_path / "b"
        manifest = run_batch(spec(out_a))
        assert len(manifest["files"]) == 414
        assert manifest["failures"] == 0
        pair_files = [p for p in os.listdir(out_a) if p.endswith(("_cfg.txt", "_evo.txt"))]
        assert len(pair_files) == 828
        for entry in manifest["files"]:
            trace = read_evo_file(out_a / entry["evo"])
            assert all(x <= y for x, y in zip(trace.best_trace, trace.best_trace[1:]))
        # validate_populations=True re-checked gene distinctness inside every run
        run_batch(spec(out_b))
        for name in sorted(os.listdir(out_a)):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def _random_instance(rng):
    n = int(rng.integers(8, 31))
    m = int(rng.integers(3, 9))
    descriptors = rng.standard_normal((n, m))
    y = rng.standard_normal(n)
    data = Dataset(tuple(f"c{i}" for i in range(n)), tuple(f"d{j}" for j in range(m)),
                   descriptors, y)
    pair = [int(v) for v in rng.choice(m, size=2, replace=False)]
    extra = int(rng.choice([j for j in range(m) if j not in pair]))
    return data, pair, extra


def test_criterion_07_regression_invariants_1000_instances():
    with criterion(7, "affine (1e-10) / permutation (exact) / nesting (1e-12) over 1000 instances; fixture 1e-9"):
        rng = np.random.default_rng(21)
        for _ in range(1000):
            data, pair, extra = _random_instance(rng)
            base = fit_mlr(data, pair)

            scaled = data.descriptors.copy()
            a = float(rng.uniform(0.2, 5.0)) * float(rng.choice([-1.0, 1.0]))
            b = float(rng.uniform(-3.0, 3.0))
            scaled[:, pair[0]] = a * scaled[:, pair[0]] + b
            moved = Dataset(data.compound_ids, data.descriptor_names, scaled,
                            data.property_values)
            assert abs(fit_mlr(moved, pair).r2 - base.r2) < 1e-10

            swapped = fit_mlr(data, pair[::-1])
            assert swapped.r2 == base.r2
            assert swapped.coefficients[1] == base.coefficients[2]
            assert swapped.coefficients[2] == base.coefficients[1]

            nested = fit_mlr(data, pair + [extra])
            assert nested.r2 >= base.r2 - 1e-12

        fixture = Dataset(("a", "b", "c", "d", "e"), ("x1", "x2"),
                          np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 1.0],
                                    [3.0, 0.0], [4.0, 1.0]]),
                          np.array([1.1, 1.9, 3.2, 3.8, 5.1]))
        assert fit_mlr(fixture, [0, 1]).r2 == pytest.approx(FIXTURE_R2, abs=1e-9)


def test_criterion_08_gev_recovery_and_tail_labels():
    with criterion(8, "GEV L-moments: Gumbel(0,1) within +/-0.05; -0.3 -> WeibullIII, +0.3 -> FrechetII"):
        rng = np.random.default_rng(31)
        gumbel = stats.gumbel_r.rvs(loc=0.0, scale=1.0, size=5000, random_state=rng)
        fit = fit_gev(gumbel)
        assert abs(fit.location - 0.0) <= 0.05
        assert abs(fit.scale - 1.0) <= 0.05
        assert abs(fit.shape - 0.0) <= 0.05

        weibull_sample = stats.genextreme.rvs(c=0.3, size=5000, random_state=rng)
        assert fit_gev(weibull_sample).tail == "WeibullIII"
        frechet_sample = stats.genextreme.rvs(c=-0.3, size=5000, random_state=rng)
        assert fit_gev(frechet_sample).tail == "FrechetII"


def test_criterion_09_selection_rule_distributions():
    with criterion(9, "proportional [0.25, 0.75] and tournament 0.75 within 3 binomial SE over 1e5 draws"):
        draws = 100_000

        pop = [Individual(Genotype((0,)), 1.0), Individual(Genotype((1,)), 3.0)]
        rng = np.random.default_rng(41)
        picks = select_parents(pop, draws, Strategy.PROPORTIONAL, rng)
        freq = sum(p.fitness == 3.0 for p in picks) / draws
        se = math.sqrt(0.75 * 0.25 / draws)
        assert abs(freq - 0.75) <= 3 * se
        assert abs((1.0 - freq) - 0.25) <= 3 * se

        pop = [Individual(Genotype((0,)), 1.0), Individual(Genotype((1,)), 2.0)]
        picks = select_parents(pop, draws, Strategy.TOURNAMENT, rng, tournament_size=2)
        freq = sum(p.fitness == 2.0 for p in picks) / draws
        assert abs(freq - 0.75) <= 3 * se


def test_criterion_10_variance_split():
    with criterion(10, "ANOVA fixture to 1e-10; between_ss + within_ss = total_ss to 1e-9 relative"):
        groups = {
            "g1": [3.0, 5.0, 7.0, 9.0, 11.0],
            "g2": [2.0, 4.0, 6.0, 8.0, 10.0],
            "g3": [10.0, 12.0, 14.0, 16.0, 18.0],
        }
        split = variance_split(groups)
        assert abs(split.between_sd - math.sqrt(190.0 / 15.0)) < 1e-10
        assert abs(split.within_sd - math.sqrt(120.0 / 15.0)) < 1e-10

        rng = np.random.default_rng(51)
        for _ in range(50):
            random_groups = {f"g{i}": rng.standard_normal(int(rng.integers(2, 15))).tolist()
                             for i in range(int(rng.integers(2, 7)))}
            split = variance_split(random_groups)
            pooled = np.concatenate([np.asarray(v) for v in random_groups.values()])
            total_ss = float(((pooled - pooled.mean()) ** 2).sum())
            decomposed = (split.between_sd ** 2 + split.within_sd ** 2) * pooled.size
            assert decomposed == pytest.approx(total_ss, rel=1e-9)


def test_criterion_11_dejong_sanity_and_f1_target():
    with criterion(11, "F1-F3, F5 canonical optima; F1 GA best <= 0.01 in >=90% of 46 runs"):
        assert eval_dejong("F1", [0.0, 0.0, 0.0]) == 0.0
        assert eval_dejong("F2", [1.0, 1.0]) == 0.0
        assert eval_dejong("F3", [-5.12] * 5) == -30.0
        assert eval_dejong("F5", [-32.0, -32.0]) == pytest.approx(F5_OPTIMUM, abs=1e-6)

        reached = 0
        for seed in range(46):
            config = RealGaConfig(function="F1", strategy=StrategyPair.from_code("DT"),
                                  seed=seed, generations=200, population_size=50)
            record = run_real(config)
            if -record.final_best.fitness <= 0.01:
                reached += 1
        assert reached >= math.ceil(0.9 * 46), f"only {reached}/46 runs reached 0.01"
