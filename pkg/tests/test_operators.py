import itertools

import pytest
from hypothesis import given, settings, strategies as st

from muga.bitcore import Genome, hamming
from muga.diversity import s_of_point, s_of_population
from muga.operators import (
    Automorphism,
    KAryOperator,
    MutationParams,
    TieBreakKind,
    break_tie,
    check_unbiased,
    crossover_operator,
    mutate,
    mutation_law,
    mutation_operator,
    select_parents,
    tiebreak_operator,
    uniform_crossover,
)
from muga.rng import Xoroshiro128pp


def g(s: str) -> Genome:
    return Genome.from_string(s)


def test_mutation_params_validation():
    with pytest.raises(ValueError):
        MutationParams(10, 11.0)  # rate above 1
    with pytest.raises(ValueError):
        MutationParams(10, -0.5)
    p = MutationParams(10, 1.0)
    assert p.rate == pytest.approx(0.1)
    assert p.p_clone == pytest.approx(0.9 ** 10)


def test_mutate_zero_rate_is_identity():
    rng = Xoroshiro128pp(1)
    x = g("1011010011")
    assert mutate(x, MutationParams(10, 0.0), rng) == x


def test_mutate_full_rate_is_complement():
    rng = Xoroshiro128pp(2)
    x = g("1011010011")
    y = mutate(x, MutationParams(10, 10.0), rng)
    assert y.value == x.value ^ ((1 << 10) - 1)


def test_mutate_leaves_input_unmodified():
    rng = Xoroshiro128pp(3)
    x = g("1111100000")
    before = x.value
    mutate(x, MutationParams(10, 3.0), rng)
    assert x.value == before


def test_mutate_flip_count_and_clone_probability():
    # n=10, chi=1: mean flips 1.000 +- 0.01, Pr(clone) = 0.9**10 +- 0.005
    rng = Xoroshiro128pp(42)
    params = MutationParams(10, 1.0)
    x = g("1010101010")
    samples = 1_000_000
    total = clones = 0
    for _ in range(samples):
        y = mutate(x, params, rng)
        h = hamming(x, y)
        total += h
        clones += h == 0
    assert total / samples == pytest.approx(1.0, abs=0.01)
    assert clones / samples == pytest.approx(0.9 ** 10, abs=0.005)


def test_mutation_empirical_matches_closed_form():
    # the output law depends only on Hamming distance; enumerate n=4 exactly
    rng = Xoroshiro128pp(7)
    params = MutationParams(4, 1.0)
    x = g("1010")
    law = mutation_law(x, params)
    assert sum(law.values()) == pytest.approx(1.0)
    samples = 400_000
    counts = {}
    for _ in range(samples):
        y = mutate(x, params, rng)
        counts[y.value] = counts.get(y.value, 0) + 1
    tv = 0.5 * sum(abs(counts.get(v, 0) / samples - law[v]) for v in range(16))
    assert tv < 0.01


def test_crossover_identical_parents():
    rng = Xoroshiro128pp(8)
    x = g("110010")
    assert uniform_crossover(x, x, rng) == x


def test_crossover_rejects_length_mismatch():
    rng = Xoroshiro128pp(9)
    with pytest.raises(ValueError):
        uniform_crossover(g("10"), g("100"), rng)


def test_crossover_outcome_frequencies():
    # opposite parents of length 2: all four outcomes equally likely
    rng = Xoroshiro128pp(10)
    a, b = g("00"), g("11")
    samples = 1_000_000
    counts = [0, 0, 0, 0]
    for _ in range(samples):
        counts[uniform_crossover(a, b, rng).value] += 1
    for c in counts:
        assert c / samples == pytest.approx(0.25, abs=0.01)


def test_crossover_preserves_agreed_position():
    rng = Xoroshiro128pp(11)
    a, b = g("10"), g("11")
    for _ in range(2_000):
        assert uniform_crossover(a, b, rng).bit(1) == 1


@given(st.data())
@settings(max_examples=80, derandomize=True)
def test_crossover_is_respectful(data):
    n = data.draw(st.integers(min_value=1, max_value=100))
    vals = st.integers(min_value=0, max_value=(1 << n) - 1)
    a, b = Genome(n, data.draw(vals)), Genome(n, data.draw(vals))
    rng = Xoroshiro128pp(data.draw(st.integers(min_value=0, max_value=2**32)))
    child = uniform_crossover(a, b, rng)
    agreed = ~(a.value ^ b.value)
    assert (child.value ^ a.value) & agreed == 0


def test_select_parents_degenerate_probabilities():
    rng = Xoroshiro128pp(12)
    for _ in range(50):
        flag, idx = select_parents(3, 0.0, rng)
        assert not flag and len(idx) == 1 and 0 <= idx[0] < 3
    for _ in range(50):
        flag, idx = select_parents(2, 1.0, rng)
        assert flag and set(idx) == {0, 1}
    with pytest.raises(ValueError):
        select_parents(1, 0.5, rng)


def test_select_parents_frequencies():
    # p_c=0.5, mu=3: crossover half the time, the three pairs equally likely
    rng = Xoroshiro128pp(13)
    samples = 1_000_000
    crossed = 0
    pairs = {frozenset(p): 0 for p in itertools.combinations(range(3), 2)}
    for _ in range(samples):
        flag, idx = select_parents(3, 0.5, rng)
        if flag:
            crossed += 1
            pairs[frozenset(idx)] += 1
    assert crossed / samples == pytest.approx(0.5, abs=0.005)
    for c in pairs.values():
        assert c / crossed == pytest.approx(1 / 3, abs=0.005)


def test_break_tie_offspring_favoring_and_uniform():
    rng = Xoroshiro128pp(14)
    members = [g("000"), g("111")]
    assert break_tie(TieBreakKind.OFFSPRING_FAVORING, members, g("101"), 0, rng)
    wins = sum(
        break_tie(TieBreakKind.UNIFORM, members, g("101"), 0, rng) for _ in range(100_000)
    )
    assert wins / 100_000 == pytest.approx(0.5, abs=0.01)


def test_break_tie_diversity_example():
    # population {incumbent=100, rest=000}: offspring 111 is farther (3 vs 1)
    rng = Xoroshiro128pp(15)
    members = [g("100"), g("000")]
    assert break_tie(TieBreakKind.DIVERSITY_IMPROVING, members, g("111"), 0, rng)
    # equal distance sums resolve to the offspring
    assert break_tie(TieBreakKind.DIVERSITY_IMPROVING, members, g("100"), 0, rng)
    # strictly closer offspring loses
    assert not break_tie(TieBreakKind.DIVERSITY_IMPROVING, [g("100"), g("011")], g("010"), 0, rng)


@given(st.data())
@settings(max_examples=80, derandomize=True)
def test_diversity_tie_break_never_decreases_s(data):
    n = data.draw(st.integers(min_value=1, max_value=24))
    mu = data.draw(st.integers(min_value=2, max_value=5))
    vals = st.integers(min_value=0, max_value=(1 << n) - 1)
    members = [Genome(n, data.draw(vals)) for _ in range(mu)]
    offspring = Genome(n, data.draw(vals))
    z = data.draw(st.integers(min_value=0, max_value=mu - 1))
    rng = Xoroshiro128pp(0)
    before = s_of_population(members)
    if break_tie(TieBreakKind.DIVERSITY_IMPROVING, members, offspring, z, rng):
        after = s_of_population(members[:z] + [offspring] + members[z + 1:])
        assert after >= before


def test_offspring_expected_distance_sum():
    # E[S_Q(child)] over the parent-selection mix equals S(Q)/mu within 2%
    rng = Xoroshiro128pp(16)
    n = 32
    for mu in (2, 3, 4):
        members = [Genome(n, rng.next_u64() & ((1 << n) - 1)) for _ in range(mu)]
        expected = s_of_population(members) / mu
        for p_c in (0.0, 0.5, 1.0) if mu >= 2 else (0.0,):
            total = 0
            samples = 60_000
            for _ in range(samples):
                flag, idx = select_parents(mu, p_c, rng)
                if flag:
                    child = uniform_crossover(members[idx[0]], members[idx[1]], rng)
                else:
                    child = members[idx[0]]
                total += s_of_point(child, members)
            assert total / samples == pytest.approx(expected, rel=0.02)


def test_automorphism_preserves_hamming():
    rng = Xoroshiro128pp(17)
    for _ in range(30):
        n = 1 + rng.next_below(40)
        auto = Automorphism.random(n, rng)
        x = Genome(n, rng.next_u64() & ((1 << n) - 1))
        y = Genome(n, rng.next_u64() & ((1 << n) - 1))
        assert hamming(auto.apply(x), auto.apply(y)) == hamming(x, y)


def test_automorphism_validation():
    with pytest.raises(ValueError):
        Automorphism((0, 0), Genome(2, 0))


def test_check_unbiased_exact_mutation_zero_deviation():
    rng = Xoroshiro128pp(18)
    report = check_unbiased(mutation_operator(MutationParams(4, 1.0)), 4, 0, 1e-12, rng,
                            mode="exact")
    assert report.mode == "exact"
    assert report.max_deviation == 0.0
    assert report.passed


def test_check_unbiased_sampling_crossover():
    rng = Xoroshiro128pp(19)
    report = check_unbiased(crossover_operator(), 4, 40_000, 0.02, rng, mode="sampling")
    assert report.passed


def test_check_unbiased_exact_falls_back_for_crossover():
    rng = Xoroshiro128pp(20)
    report = check_unbiased(crossover_operator(), 4, 20_000, 0.03, rng, mode="exact")
    assert report.fell_back
    assert report.mode == "sampling"


def test_check_unbiased_exact_mode_requires_small_n():
    rng = Xoroshiro128pp(23)
    with pytest.raises(ValueError):
        check_unbiased(mutation_operator(MutationParams(20, 1.0)), 20, 0, 1e-9, rng,
                       mode="exact")


def test_check_unbiased_detects_biased_operator():
    # forcing position 1 to one is not invariant under XOR masks
    biased = KAryOperator(
        name="first-bit-setter",
        arity=1,
        sample=lambda xs, rng: Genome(xs[0].n, xs[0].value | 1),
    )
    rng = Xoroshiro128pp(21)
    report = check_unbiased(biased, 4, 5_000, 0.01, rng, mode="sampling")
    assert not report.passed


def test_check_unbiased_tiebreak_operator():
    rng = Xoroshiro128pp(22)
    report = check_unbiased(tiebreak_operator(TieBreakKind.DIVERSITY_IMPROVING, 2),
                            6, 5_000, 0.01, rng, mode="sampling")
    assert report.passed
