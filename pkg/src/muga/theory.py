"""Closed-form and numerically integrated runtime/diversity predictions.

These leading-order formulas serve as oracles for the acceptance suite and
are exposed through the `theory` CLI subcommand. Lower-order terms are
dropped; empirical tolerances absorb them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class RatePredicate:
    """Level-indexed extra-free-rider rate m(x) on [0, 1].

    Either a constant or a tabulated grid with linear interpolation. The same
    type serves the upper- and lower-bound runtime integrals; the direction is
    the caller's.
    """

    xs: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            raise ValueError("grid must pair xs with values, at least two points")
        if self.xs[0] != 0.0 or self.xs[-1] != 1.0:
            raise ValueError("grid must span [0, 1]")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("grid xs must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("rates must be non-negative")

    @classmethod
    def constant(cls, c: float) -> "RatePredicate":
        return cls((0.0, 1.0), (float(c), float(c)))

    @classmethod
    def tabulated(cls, xs: Sequence[float], values: Sequence[float]) -> "RatePredicate":
        return cls(tuple(float(x) for x in xs), tuple(float(v) for v in values))

    def __call__(self, x: float) -> float:
        if x <= 0.0:
            return self.values[0]
        if x >= 1.0:
            return self.values[-1]
        lo, hi = 0, len(self.xs) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.xs[mid] <= x:
                lo = mid
            else:
                hi = mid
        t = (x - self.xs[lo]) / (self.xs[hi] - self.xs[lo])
        return self.values[lo] + t * (self.values[hi] - self.values[lo])


def ea_runtime(n: int, chi: float) -> float:
    """Leading-order expected evaluations of the single-individual EA,
    (e**chi - 1) / (2 chi**2) * n**2."""
    if chi <= 0:
        raise ValueError("chi must be positive")
    return math.expm1(chi) / (2.0 * chi * chi) * n * n


def _simpson(f, nodes: int) -> float:
    # nodes = intervals + 1, intervals even
    h = 1.0 / (nodes - 1)
    total = f(0.0) + f(1.0)
    for k in range(1, nodes - 1):
        total += f(k * h) * (4 if k % 2 else 2)
    return total * h / 3.0


def runtime_integral(m: RatePredicate, n: int, chi: float) -> float:
    """(n**2 / chi) * integral of e**(chi x) / (2 + m(x)) over [0, 1].

    Composite Simpson starting at 1025 nodes, doubled until the value is
    stable to 1e-10 relative, so smooth inputs are good to well below the
    1e-8 tolerance the oracle tests demand.
    """
    if chi <= 0:
        raise ValueError("chi must be positive")

    def f(x: float) -> float:
        return math.exp(chi * x) / (2.0 + m(x))

    nodes = 1025
    value = _simpson(f, nodes)
    while nodes < (1 << 17) + 1:
        nodes = 2 * (nodes - 1) + 1
        refined = _simpson(f, nodes)
        if abs(refined - value) <= 1e-10 * max(abs(refined), 1e-300):
            value = refined
            break
        value = refined
    return n * n / chi * value


def tiebreak_speedup_bound(p_c: float) -> float:
    """Guaranteed runtime factor of the diversity tie-breaker, relative to the
    plain two-individual GA: 2 / (2 + p_c (1-p_c) / (12 - 8 p_c))."""
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must lie in [0, 1]")
    return 2.0 / (2.0 + p_c * (1.0 - p_c) / (12.0 - 8.0 * p_c))


def plateau_diversity_bound(p_c: float) -> float:
    """Lower bound (1-p_c)/(3-2 p_c) on the mean normalized diversity when a
    normal level is left, under the diversity tie-breaker with mu = 2."""
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must lie in [0, 1]")
    return (1.0 - p_c) / (3.0 - 2.0 * p_c)


def ef_probability_bound(p_c: float, d: float) -> float:
    """Lower bound p_c * d / 8 on the probability of at least one extra
    free-rider at a normal level, given leave-time diversity d."""
    if not 0.0 <= p_c <= 1.0 or not 0.0 <= d <= 1.0:
        raise ValueError("inputs must lie in [0, 1]")
    return p_c * d / 8.0


def flat_diversity_step(s: float, mu: int, chi: float, suffix_len: int) -> float:
    """Expected next pairwise-distance sum on a flat fitness landscape:
    (1 - 2/mu**2 - 4(mu-1)chi/(mu**2 N)) * S + 2(mu-1)chi."""
    if mu < 2 or suffix_len < 1:
        raise ValueError("need mu >= 2 and a positive suffix length")
    factor = 1.0 - 2.0 / mu**2 - 4.0 * (mu - 1) * chi / (mu**2 * suffix_len)
    return factor * s + 2.0 * (mu - 1) * chi


def flat_diversity_fixed_point(mu: int, chi: float, suffix_len: int) -> float:
    """Fixed point of the flat-fitness recursion,
    (mu-1) chi mu**2 N / (N + 2 (mu-1) chi)."""
    if mu < 2 or suffix_len < 1:
        raise ValueError("need mu >= 2 and a positive suffix length")
    return (mu - 1) * chi * mu**2 * suffix_len / (suffix_len + 2.0 * (mu - 1) * chi)


def flat_diversity_alpha(mu: int, chi: float, suffix_len: int) -> float:
    """Scale 2(mu-1) mu**2 chi N / (N + 4(mu-1) chi) of the flat-fitness
    equilibrium; the hitting time of S <= 2 alpha is O(mu**2 log N)."""
    if mu < 2 or suffix_len < 1:
        raise ValueError("need mu >= 2 and a positive suffix length")
    return 2.0 * (mu - 1) * mu**2 * chi * suffix_len / (suffix_len + 4.0 * (mu - 1) * chi)


def truncated_jump_mean(remaining: int) -> float:
    """Mean improvement size 2 - 2**-(remaining-1) under the halving tail law
    truncated at the remaining number of levels; the free-rider mean is one
    less."""
    if remaining < 1:
        raise ValueError("remaining levels must be positive")
    return 2.0 - 2.0 ** (-(remaining - 1))
