"""Variation operators, parent selection, tie-breakers, and the invariance checker.

All operators are stateless given an externally supplied random stream. The
random-draw protocol of `mutate`, `uniform_crossover` and `select_parents` is
mirrored bit-for-bit by the compiled kernel.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .bitcore import Genome, hamming, words_for
from .diversity import s_of_point
from .rng import Xoroshiro128pp


@dataclass(frozen=True)
class MutationParams:
    """Standard bit mutation with per-bit rate chi/n.

    `p_clone` is the probability of duplicating the parent, (1 - chi/n)**n.
    It doubles as the k=0 term of the binomial inversion sampler; both engines
    must use this exact precomputed double.
    """

    n: int
    chi: float
    rate: float = field(init=False)
    p_clone: float = field(init=False)
    odds: float = field(init=False)

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("genome length must be positive")
        if not 0.0 <= self.chi <= self.n:
            raise ValueError(f"chi must lie in [0, n], got {self.chi}")
        rate = self.chi / self.n
        object.__setattr__(self, "rate", rate)
        object.__setattr__(self, "p_clone", (1.0 - rate) ** self.n)
        object.__setattr__(self, "odds", rate / (1.0 - rate) if rate < 1.0 else math.inf)


class TieBreakKind(Enum):
    OFFSPRING_FAVORING = "offspring"
    UNIFORM = "uniform"
    DIVERSITY_IMPROVING = "diversity"


def mutate(x: Genome, params: MutationParams, rng: Xoroshiro128pp) -> Genome:
    """Flip each bit independently with probability chi/n; input unmodified.

    Sampling draws the flip count from Binomial(n, chi/n) and then distinct
    positions, which is O(chi) expected work instead of O(n).
    """
    if params.n != x.n:
        raise ValueError("mutation parameters sized for a different genome length")
    k = rng.binomial(params.n, params.rate, params.p_clone, params.odds)
    value = x.value
    flipped: list[int] = []
    for _ in range(k):
        while True:
            pos = rng.next_below(params.n)
            if pos not in flipped:
                break
        flipped.append(pos)
        value ^= 1 << pos
    return Genome(x.n, value)


def uniform_crossover(x1: Genome, x2: Genome, rng: Xoroshiro128pp) -> Genome:
    """Each bit taken from x1 or x2 with probability 1/2, independently.

    Respectful by construction: agreed positions survive whatever the mask is.
    """
    if x1.n != x2.n:
        raise ValueError(f"length mismatch: {x1.n} vs {x2.n}")
    mask = 0
    for w in range(words_for(x1.n)):
        mask |= rng.next_u64() << (64 * w)
    return Genome(x1.n, (x1.value & mask) | (x2.value & ~mask))


def select_parents(mu: int, p_c: float, rng: Xoroshiro128pp) -> tuple[bool, tuple[int, ...]]:
    """With probability p_c a uniform unordered pair of distinct indices, else
    a single uniform index. Returns (crossover_flag, indices), 0-based.
    """
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    if p_c > 0.0 and mu < 2:
        raise ValueError("crossover requires at least two individuals")
    use_crossover = rng.next_double() < p_c
    if use_crossover:
        i = rng.next_below(mu)
        j = rng.next_below(mu - 1)
        if j >= i:
            j += 1
        return True, (i, j)
    return False, (rng.next_below(mu),)


def break_tie(
    kind: TieBreakKind,
    members: Sequence[Genome],
    offspring: Genome,
    incumbent_index: int,
    rng: Xoroshiro128pp,
) -> bool:
    """Decide an equal-fitness contest. Returns True if the offspring wins.

    For the diversity-improving rule the contenders are compared by their
    distance sums over the population minus the incumbent (equivalently, the
    extended population minus both contenders); equality goes to the
    offspring, matching the first-argument convention of the rule.
    """
    if kind is TieBreakKind.OFFSPRING_FAVORING:
        return True
    if kind is TieBreakKind.UNIFORM:
        return rng.next_double() < 0.5
    rest = [g for w, g in enumerate(members) if w != incumbent_index]
    return s_of_point(offspring, rest) >= s_of_point(members[incumbent_index], rest)


@dataclass(frozen=True)
class Automorphism:
    """Hypercube automorphism: permute positions, then XOR a mask.

    `perm` is 0-based internally; output bit perm[i] receives input bit i.
    """

    perm: tuple[int, ...]
    mask: Genome

    def __post_init__(self):
        n = self.mask.n
        if sorted(self.perm) != list(range(n)):
            raise ValueError("perm must be a permutation of the positions")

    @classmethod
    def random(cls, n: int, rng: Xoroshiro128pp) -> "Automorphism":
        perm = list(range(n))
        for i in range(n - 1, 0, -1):  # Fisher-Yates
            j = rng.next_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return cls(tuple(perm), _wide_mask(n, rng))

    def apply(self, x: Genome) -> Genome:
        out = 0
        v = x.value
        for i, target in enumerate(self.perm):
            out |= ((v >> i) & 1) << target
        return Genome(x.n, out ^ self.mask.value)


def _wide_mask(n: int, rng: Xoroshiro128pp) -> Genome:
    value = 0
    for w in range(words_for(n)):
        value |= rng.next_u64() << (64 * w)
    return Genome(n, value & ((1 << n) - 1))


@dataclass(frozen=True)
class KAryOperator:
    """Operator under invariance test: draws one output genome from k inputs.

    `exact_law`, when available, maps an input tuple to the full output
    distribution {value: probability}; it enables the exact checking mode.
    """

    name: str
    arity: int
    sample: Callable[[Sequence[Genome], Xoroshiro128pp], Genome]
    exact_law: Callable[[Sequence[Genome]], dict[int, float]] | None = None


def mutation_law(x: Genome, params: MutationParams) -> dict[int, float]:
    """Closed-form output law of standard bit mutation: depends only on the
    Hamming distance to the input."""
    n = x.n
    p, q = params.rate, 1.0 - params.rate
    law = {}
    for y in range(1 << n):
        d = (x.value ^ y).bit_count()
        law[y] = p ** d * q ** (n - d)
    return law


def mutation_operator(params: MutationParams) -> KAryOperator:
    return KAryOperator(
        name="standard-bit-mutation",
        arity=1,
        sample=lambda xs, rng: mutate(xs[0], params, rng),
        exact_law=lambda xs: mutation_law(xs[0], params),
    )


def crossover_operator() -> KAryOperator:
    return KAryOperator(
        name="uniform-crossover",
        arity=2,
        sample=lambda xs, rng: uniform_crossover(xs[0], xs[1], rng),
    )


def tiebreak_operator(kind: TieBreakKind, mu: int) -> KAryOperator:
    """Tie-breaker viewed as a (mu+2)-ary operator: the population followed by
    the two contenders, returning the winner. Distance sums run over the
    population with both contenders' values excluded."""

    def sample(xs: Sequence[Genome], rng: Xoroshiro128pp) -> Genome:
        pop, a, b = xs[:mu], xs[mu], xs[mu + 1]
        if kind is TieBreakKind.OFFSPRING_FAVORING:
            return a
        if kind is TieBreakKind.UNIFORM:
            return a if rng.next_double() < 0.5 else b
        rest = [g for g in pop if g.value not in (a.value, b.value)]
        return a if s_of_point(a, rest) >= s_of_point(b, rest) else b

    return KAryOperator(name=f"tie-break-{kind.value}", arity=mu + 2, sample=sample)


@dataclass
class UnbiasednessReport:
    operator: str
    mode: str
    max_deviation: float
    passed: bool
    fell_back: bool = False


def check_unbiased(
    op: KAryOperator,
    n: int,
    trials: int,
    epsilon: float,
    rng: Xoroshiro128pp,
    mode: str = "auto",
    automorphisms: int = 3,
) -> UnbiasednessReport:
    """Verify distribution invariance under random hypercube automorphisms.

    Exact mode compares the closed-form output law of the operator on random
    inputs with the pulled-back law on transformed inputs; sampling mode
    compares empirical output frequencies by total-variation distance. An
    exact request for an operator without a closed form falls back to sampling
    and flags the report.
    """
    if mode not in ("auto", "exact", "sampling"):
        raise ValueError(f"unknown mode {mode!r}")
    fell_back = False
    if mode == "auto":
        mode = "exact" if op.exact_law is not None and n <= 16 else "sampling"
    elif mode == "exact":
        if n > 16:
            raise ValueError("exact mode enumerates the output space; n must be <= 16")
        if op.exact_law is None:
            mode = "sampling"
            fell_back = True

    max_dev = 0.0
    for _ in range(automorphisms):
        auto = Automorphism.random(n, rng)
        inputs = [_wide_mask(n, rng) for _ in range(op.arity)]
        mapped = [auto.apply(x) for x in inputs]
        if mode == "exact":
            law = op.exact_law(inputs)
            law_mapped = op.exact_law(mapped)
            for y in range(1 << n):
                image = auto.apply(Genome(n, y)).value
                max_dev = max(max_dev, abs(law.get(y, 0.0) - law_mapped.get(image, 0.0)))
        else:
            lhs = Counter(auto.apply(op.sample(inputs, rng)).value for _ in range(trials))
            rhs = Counter(op.sample(mapped, rng).value for _ in range(trials))
            tv = 0.5 * sum(abs(lhs[v] - rhs[v]) for v in lhs.keys() | rhs.keys()) / trials
            max_dev = max(max_dev, tv)
    return UnbiasednessReport(op.name, mode, max_dev, max_dev <= epsilon, fell_back)
