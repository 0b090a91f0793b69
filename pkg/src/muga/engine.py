"""The (mu+1) steady-state GA main loop over any fitness kind.

One offspring per iteration: optional uniform crossover of a random distinct
pair, then standard bit mutation; the offspring replaces a uniformly chosen
least-fit individual if strictly fitter, or on a tie if the tie-breaker picks
it. This module is the readable reference engine; `muga.kernel` holds a
compiled twin that consumes the identical random stream and must produce
bit-identical runs (enforced by the parity tests).

Evaluation accounting: the mu initial evaluations count toward the runtime;
the pre-mutation crossover product is scored for instrumentation only and is
not a counted evaluation. A run ends the moment the optimum is evaluated,
before the replacement decision, but the final replacement still happens so
the level bookkeeping sees the closing improvement.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .bitcore import (
    FitnessKind,
    Genome,
    evaluate_fitness,
    optimum_fitness,
)
from .diversity import DiversityState, normalized_diversity
from .instrumentation import LevelTracker, RunRecord
from .operators import (
    MutationParams,
    TieBreakKind,
    break_tie,
    mutate,
    select_parents,
    uniform_crossover,
)
from .rng import Xoroshiro128pp


class InitKind(Enum):
    ALL_ZEROS = "zeros"
    UNIFORM_RANDOM = "random"


@dataclass(frozen=True)
class GaConfig:
    """All parameters of a single GA run."""

    n: int
    mu: int
    chi: float = 1.0
    p_c: float = 0.0
    tie_break: TieBreakKind = TieBreakKind.OFFSPRING_FAVORING
    init: InitKind = InitKind.ALL_ZEROS
    adaptive_pc: bool = False
    fitness: FitnessKind = FitnessKind.LEADING_ONES
    max_iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.mu < 1:
            raise ValueError("mu must be at least 1")
        if not 0.0 <= self.chi <= self.n:
            raise ValueError("chi must lie in [0, n]")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError("p_c must lie in [0, 1]")
        if not self.adaptive_pc and self.p_c >= 1.0:
            raise ValueError("static p_c must be below 1")
        if (self.p_c > 0.0 or self.adaptive_pc) and self.mu < 2:
            raise ValueError("crossover requires mu >= 2")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")

    @property
    def mutation_params(self) -> MutationParams:
        return MutationParams(self.n, self.chi)

    @property
    def iteration_cap(self) -> int:
        """Offspring-evaluation budget; censoring past it signals a bug."""
        if self.max_iterations is not None:
            return self.max_iterations
        return 100 * self.n * self.n


@dataclass
class IterationEvent:
    """What happened in one iteration; populations are indexed after it."""

    t: int
    used_crossover: bool
    parent_indices: tuple[int, ...]
    intermediate_fitness: int | None
    offspring_fitness: int
    accepted: bool
    replaced_index: int | None
    new_max_fitness: int
    consolidated: bool
    d_before_replacement: float | None = None


class Population:
    """mu genomes with index identity and cached fitnesses."""

    __slots__ = ("n", "members", "fitnesses", "t", "evaluations")

    def __init__(self, n: int, members: list[Genome], fitnesses: list[int]):
        self.n = n
        self.members = members
        self.fitnesses = fitnesses
        self.t = 0
        self.evaluations = len(members)

    @property
    def mu(self) -> int:
        return len(self.members)

    @property
    def max_fitness(self) -> int:
        return max(self.fitnesses)

    @property
    def min_fitness(self) -> int:
        return min(self.fitnesses)

    @property
    def consolidated(self) -> bool:
        return self.min_fitness == self.max_fitness


class Observer:
    """Callbacks for engine events; observers must not mutate engine state."""

    def on_event(self, event: IterationEvent) -> None:
        pass

    def on_sample(self, t: int, best_fitness: int, s_total: int, d: float) -> None:
        pass


def init_population(config: GaConfig, rng: Xoroshiro128pp) -> Population:
    """Generate and evaluate the initial population (mu counted evaluations)."""
    members: list[Genome] = []
    full = (1 << config.n) - 1
    for _ in range(config.mu):
        if config.init is InitKind.ALL_ZEROS:
            members.append(Genome.zeros(config.n))
        else:
            value = 0
            for w in range((config.n + 63) // 64):
                value |= rng.next_u64() << (64 * w)
            members.append(Genome(config.n, value & full))
    fitnesses = [evaluate_fitness(config.fitness, g) for g in members]
    return Population(config.n, members, fitnesses)


def adaptive_pc(population: Population) -> float:
    """Crossover probability of the adaptive scheme: recombine only while the
    population spans more than one fitness value."""
    if population.mu < 2:
        raise ValueError("adaptive crossover probability needs mu >= 2")
    return 0.0 if population.consolidated else 1.0


def step(
    population: Population,
    config: GaConfig,
    diversity_state: DiversityState,
    rng: Xoroshiro128pp,
) -> tuple[Population, IterationEvent]:
    """One iteration; mutates the population in place and reports the event."""
    members, fitnesses = population.members, population.fitnesses
    mu = population.mu
    p_eff = adaptive_pc(population) if config.adaptive_pc else config.p_c

    use_crossover, parents = select_parents(mu, p_eff, rng)
    if use_crossover:
        y = uniform_crossover(members[parents[0]], members[parents[1]], rng)
        intermediate = evaluate_fitness(config.fitness, y)  # not a counted evaluation
    else:
        y = members[parents[0]]
        intermediate = None

    offspring = mutate(y, config.mutation_params, rng)
    offspring_fitness = evaluate_fitness(config.fitness, offspring)
    population.evaluations += 1

    fmin = min(fitnesses)
    minimal = [w for w in range(mu) if fitnesses[w] == fmin]
    z = minimal[rng.next_below(len(minimal))]

    if offspring_fitness > fmin:
        accepted = True
    elif offspring_fitness == fmin:
        accepted = break_tie(config.tie_break, members, offspring, z, rng)
    else:
        accepted = False

    old_max = population.max_fitness
    d_before = None
    if accepted and offspring_fitness > old_max:
        d_before = normalized_diversity(members, old_max) if mu >= 2 else 0.0

    if accepted:
        diversity_state.replace(z, offspring, members)
        members[z] = offspring
        fitnesses[z] = offspring_fitness

    population.t += 1
    new_max = max(old_max, offspring_fitness) if accepted else old_max
    event = IterationEvent(
        t=population.t,
        used_crossover=use_crossover,
        parent_indices=parents,
        intermediate_fitness=intermediate,
        offspring_fitness=offspring_fitness,
        accepted=accepted,
        replaced_index=z if accepted else None,
        new_max_fitness=new_max,
        consolidated=population.consolidated,
        d_before_replacement=d_before,
    )
    return population, event


def run(
    config: GaConfig,
    observers: Sequence[Observer] = (),
    trace_every: int | None = None,
) -> RunRecord:
    """Execute a full run: loop `step` until the optimum is evaluated or the
    iteration cap censors the run. trace_every=0 disables periodic samples."""
    if trace_every is None:
        trace_every = max(1, config.n // 10)
    rng = Xoroshiro128pp(config.seed)
    population = init_population(config, rng)
    divstate = DiversityState.from_population(population.members)
    target = optimum_fitness(config.fitness, config.n)

    found_at = None
    if target is not None:
        for idx, f in enumerate(population.fitnesses):
            if f == target:
                found_at = idx + 1
                break

    tracker = LevelTracker(config.n)
    tracker.start(population.max_fitness, population.consolidated)
    trace: list[tuple[int, int, int, float]] = []

    def sample(t: int) -> None:
        d = normalized_diversity(population.members, population.max_fitness) \
            if population.mu >= 2 else 0.0
        trace.append((t, population.max_fitness, divstate.total, d))
        for obs in observers:
            obs.on_sample(t, population.max_fitness, divstate.total, d)

    if trace_every:
        sample(0)

    found = found_at is not None
    while not found and population.t < config.iteration_cap:
        _, event = step(population, config, divstate, rng)
        tracker.on_event(event)
        for obs in observers:
            obs.on_event(event)
        if trace_every and population.t % trace_every == 0:
            sample(population.t)
        found = target is not None and event.offspring_fitness == target

    evaluations = found_at if found_at is not None else population.evaluations
    censored = not found
    return RunRecord(
        run_index=0,
        seed=config.seed,
        n=config.n,
        evaluations=evaluations,
        censored=censored,
        levels=tracker.finalize() if not censored else None,
        trace=trace,
    )
