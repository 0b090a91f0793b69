import dataclasses

import pytest

from muga.bitcore import FitnessKind, Genome, leading_ones
from muga.diversity import DiversityState, normalized_diversity
from muga.engine import (
    GaConfig,
    InitKind,
    Observer,
    Population,
    adaptive_pc,
    init_population,
    run,
    step,
)
from muga.operators import TieBreakKind
from muga.rng import Xoroshiro128pp


def test_config_validation():
    with pytest.raises(ValueError):
        GaConfig(n=10, mu=2, p_c=1.0)  # static crossover probability must stay below 1
    GaConfig(n=10, mu=2, p_c=0.9, adaptive_pc=True)  # ignored field may be anything valid
    with pytest.raises(ValueError):
        GaConfig(n=10, mu=1, p_c=0.5)
    with pytest.raises(ValueError):
        GaConfig(n=10, mu=1, adaptive_pc=True)
    with pytest.raises(ValueError):
        GaConfig(n=10, mu=2, chi=20.0)
    assert GaConfig(n=10, mu=1).iteration_cap == 100 * 10 * 10
    assert GaConfig(n=10, mu=1, max_iterations=7).iteration_cap == 7


def test_init_all_zeros():
    config = GaConfig(n=4, mu=2)
    pop = init_population(config, Xoroshiro128pp(0))
    assert [m.value for m in pop.members] == [0, 0]
    assert pop.fitnesses == [0, 0]
    assert pop.max_fitness == 0
    assert pop.evaluations == 2
    assert pop.consolidated


def test_init_uniform_prefix_law():
    config = GaConfig(n=30, mu=1, init=InitKind.UNIFORM_RANDOM)
    rng = Xoroshiro128pp(99)
    samples = 1_000_000
    counts = [0] * 5
    for _ in range(samples):
        f = init_population(config, rng).max_fitness
        for j in range(1, 5):
            if f >= j:
                counts[j] += 1
    for j in range(1, 5):
        assert counts[j] / samples == pytest.approx(2.0 ** -j, abs=0.01)


def test_init_uniform_mean_diversity():
    config = GaConfig(n=1000, mu=2, init=InitKind.UNIFORM_RANDOM)
    rng = Xoroshiro128pp(7)
    samples = 2_000
    total = 0.0
    for _ in range(samples):
        pop = init_population(config, rng)
        total += normalized_diversity(pop.members, pop.max_fitness)
    assert total / samples == pytest.approx(0.5, abs=0.01)


def test_adaptive_pc_values():
    def pop_with(fitnesses):
        n = 10
        genomes = [Genome(n, (1 << f) - 1) for f in fitnesses]
        return Population(n, genomes, [leading_ones(x) for x in genomes])

    assert adaptive_pc(pop_with([3, 3])) == 0.0
    assert adaptive_pc(pop_with([3, 4])) == 1.0
    assert adaptive_pc(pop_with([3, 3, 4])) == 1.0
    with pytest.raises(ValueError):
        adaptive_pc(pop_with([3]))


def test_single_individual_improvement_law():
    # with fitness 0, an improvement needs exactly the first bit to flip
    config = GaConfig(n=10, mu=1, chi=1.0)
    rng = Xoroshiro128pp(123)
    pop = init_population(config, rng)
    div = DiversityState.from_population(pop.members)
    zeros = Genome.zeros(10)
    samples = 1_000_000
    improved = 0
    for _ in range(samples):
        _, event = step(pop, config, div, rng)
        improved += event.offspring_fitness > 0
        pop.members[0] = zeros  # reset the chain to the consolidated state
        pop.fitnesses[0] = 0
    assert improved / samples == pytest.approx(0.1, abs=0.003)


def test_step_clone_with_zero_rate():
    config = GaConfig(n=6, mu=2, chi=0.0)
    rng = Xoroshiro128pp(3)
    pop = init_population(config, rng)
    div = DiversityState.from_population(pop.members)
    before = sorted(m.value for m in pop.members)
    _, event = step(pop, config, div, rng)
    assert event.accepted  # offspring-favoring tie
    assert event.replaced_index is not None
    assert sorted(m.value for m in pop.members) == before  # clone: multiset unchanged


def test_elitism_and_rejection_of_worse_offspring():
    config = GaConfig(n=40, mu=3, chi=1.0, p_c=0.5, tie_break=TieBreakKind.UNIFORM)
    rng = Xoroshiro128pp(11)
    pop = init_population(config, rng)
    div = DiversityState.from_population(pop.members)
    prev_sorted = sorted(pop.fitnesses)
    for _ in range(3000):
        _, event = step(pop, config, div, rng)
        cur_sorted = sorted(pop.fitnesses)
        assert all(a >= b for a, b in zip(cur_sorted, prev_sorted))
        if event.offspring_fitness < prev_sorted[0]:
            assert not event.accepted
        prev_sorted = cur_sorted
        if pop.max_fitness == config.n:
            break


def test_run_single_bit_is_deterministic():
    # one initial evaluation plus one forced complement flip
    record = run(GaConfig(n=1, mu=1, chi=1.0, seed=5))
    assert record.evaluations == 2
    assert not record.censored


def test_flat_runs_are_censored():
    record = run(GaConfig(n=12, mu=2, chi=1.0, p_c=0.5, fitness=FitnessKind.FLAT,
                          max_iterations=200, seed=8))
    assert record.censored
    assert record.levels is None


def test_run_determinism():
    config = GaConfig(n=40, mu=2, chi=1.0, p_c=0.5, tie_break=TieBreakKind.UNIFORM, seed=77)
    a = run(config)
    b = run(config)
    assert a.evaluations == b.evaluations
    assert a.levels == b.levels
    assert a.trace == b.trace


class _CrossoverFlagObserver(Observer):
    """Counts crossover among fit-or-better offspring born after consolidation."""

    def __init__(self):
        self.prev_consolidated = True
        self.prev_max = 0
        self.qualifying = 0
        self.crossed = 0

    def on_event(self, event):
        if self.prev_consolidated and event.offspring_fitness >= self.prev_max:
            self.qualifying += 1
            self.crossed += event.used_crossover
        self.prev_consolidated = event.consolidated
        self.prev_max = event.new_max_fitness


def test_crossover_flag_independence():
    # among fit offspring after consolidation, crossover frequency is p_c
    p_c = 0.4
    obs = _CrossoverFlagObserver()
    for seed in range(25):
        obs.prev_consolidated = True
        obs.prev_max = 0
        run(GaConfig(n=60, mu=3, chi=1.0, p_c=p_c, tie_break=TieBreakKind.UNIFORM,
                     seed=seed), observers=[obs])
    assert obs.qualifying > 10_000
    assert obs.crossed / obs.qualifying == pytest.approx(p_c, abs=0.01)


def test_run_censors_at_iteration_cap():
    record = run(GaConfig(n=80, mu=1, chi=1.0, max_iterations=10, seed=1))
    assert record.censored
    assert record.evaluations == 11  # one init evaluation plus the cap


def test_trace_sampling_stride():
    record = run(GaConfig(n=40, mu=2, chi=1.0, seed=13), trace_every=7)
    ts = [t for t, *_ in record.trace]
    assert ts[0] == 0
    assert all(t % 7 == 0 for t in ts)
    record_off = run(GaConfig(n=40, mu=2, chi=1.0, seed=13), trace_every=0)
    assert record_off.trace == []
