"""Deterministic 64-bit randomness: seed mixing and the generator used by all engines.

The exact draw protocol (which routine consumes how many raw draws, and in
which order) is part of the reproducibility contract: the compiled kernel in
`muga.kernel` re-implements the same stream, and runs must be bit-identical
across the two engines.  Any change here must be mirrored there.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# splitmix64 increment, also used to decorrelate per-run seeds.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_DOUBLE_SCALE = 2.0 ** -53


def mix64(x: int) -> int:
    """SplitMix64 finalizer: full-avalanche mix of a 64-bit value."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def run_seed(base_seed: int, run_index: int) -> int:
    """Seed for run `run_index` of an experiment with the given base seed."""
    return mix64((base_seed ^ (run_index * GOLDEN_GAMMA)) & MASK64)


def splitmix64_next(state: int) -> tuple[int, int]:
    """One step of splitmix64. Returns (new_state, output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, mix64(state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoroshiro128pp:
    """xoroshiro128++ generator, seeded through splitmix64.

    Small-range integers are produced by simple modulo reduction; the bias is
    at most m / 2**64, which is irrelevant for the population sizes and genome
    lengths this simulator targets and keeps the compiled mirror trivial.
    """

    __slots__ = ("s0", "s1")

    def __init__(self, seed: int):
        state = seed & MASK64
        state, self.s0 = splitmix64_next(state)
        state, self.s1 = splitmix64_next(state)

    def next_u64(self) -> int:
        s0, s1 = self.s0, self.s1
        result = (_rotl((s0 + s1) & MASK64, 17) + s0) & MASK64
        s1 ^= s0
        self.s0 = _rotl(s0, 49) ^ s1 ^ ((s1 << 21) & MASK64)
        self.s1 = _rotl(s1, 28)
        return result

    def next_double(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def next_below(self, m: int) -> int:
        """Uniform integer in [0, m)."""
        return self.next_u64() % m

    def binomial(self, n: int, p: float, p_zero: float, ratio: float) -> int:
        """Binomial(n, p) draw by CDF inversion; consumes exactly one double.

        `p_zero` must equal (1-p)**n and `ratio` p/(1-p), both precomputed by
        the caller so that the Python and compiled engines share bit-identical
        constants.
        """
        u = self.next_double()
        if p <= 0.0:
            return 0
        if p >= 1.0:
            return n
        pmf = p_zero
        cdf = pmf
        k = 0
        while u > cdf and k < n:
            k += 1
            pmf = pmf * ratio * (n - k + 1) / k
            cdf += pmf
        return k
