"""Bit-string genomes, the fitness functions, and Hamming geometry.

Genomes are immutable values. Bits are stored packed in a single Python
integer (bit position i-1 holds the 1-based position i), so Hamming distances
and prefix scans reduce to machine-word popcounts. Positions are 1-based in
every public interface; the leftmost character of the string form is
position 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

_WORD_BITS = 64


@dataclass(frozen=True, slots=True)
class Genome:
    """Fixed-length bit-string. `value` packs position i at bit i-1."""

    n: int
    value: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"genome length must be non-negative, got {self.n}")
        if not 0 <= self.value < (1 << self.n):
            raise ValueError("genome value has bits outside its length")

    @classmethod
    def zeros(cls, n: int) -> "Genome":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "Genome":
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_string(cls, s: str) -> "Genome":
        """Parse a 0/1 string, position 1 leftmost."""
        value = 0
        for i, ch in enumerate(s):
            if ch == "1":
                value |= 1 << i
            elif ch != "0":
                raise ValueError(f"invalid genome character {ch!r}")
        return cls(len(s), value)

    def to_string(self) -> str:
        return "".join("1" if self.value >> i & 1 else "0" for i in range(self.n))

    def bit(self, pos: int) -> int:
        """Bit at 1-based position `pos`."""
        if not 1 <= pos <= self.n:
            raise ValueError(f"position {pos} out of range 1..{self.n}")
        return self.value >> (pos - 1) & 1

    def __str__(self) -> str:
        return self.to_string()


def leading_ones(x: Genome) -> int:
    """Number of consecutive ones from the left (position 1 onward)."""
    v = x.value
    # v ^ (v+1) has the trailing ones of v plus the terminating zero set.
    return min((v ^ (v + 1)).bit_length() - 1, x.n)


def hamming(x: Genome, y: Genome) -> int:
    """Number of positions where x and y differ. Lengths must agree."""
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    return (x.value ^ y.value).bit_count()


def suffix(x: Genome, from_pos: int) -> Genome:
    """Sub-string from 1-based position `from_pos` to the end.

    `from_pos` may be n+1, yielding the empty genome.
    """
    if not 1 <= from_pos <= x.n + 1:
        raise ValueError(f"suffix start {from_pos} out of range 1..{x.n + 1}")
    return Genome(x.n - from_pos + 1, x.value >> (from_pos - 1))


class FitnessKind(Enum):
    LEADING_ONES = "leading_ones"
    FLAT = "flat"


def evaluate_fitness(kind: FitnessKind, x: Genome) -> int:
    if kind is FitnessKind.LEADING_ONES:
        return leading_ones(x)
    return 0


def optimum_fitness(kind: FitnessKind, n: int) -> int | None:
    """Fitness value that terminates a run, or None if no optimum exists.

    Flat fitness is constant, so a run on it can only stop at the iteration
    cap; every offspring ties and goes through the tie-breaker.
    """
    if kind is FitnessKind.LEADING_ONES:
        return n
    return None


def words_for(n: int) -> int:
    return (n + _WORD_BITS - 1) // _WORD_BITS


def genome_to_words(x: Genome) -> np.ndarray:
    """Pack a genome into little-endian uint64 words (kernel layout)."""
    w = words_for(x.n)
    out = np.zeros(max(w, 1), dtype=np.uint64)
    v = x.value
    mask = (1 << _WORD_BITS) - 1
    for i in range(w):
        out[i] = (v >> (_WORD_BITS * i)) & mask
    return out


def genome_from_words(words: np.ndarray, n: int) -> Genome:
    v = 0
    for i in range(words_for(n)):
        v |= int(words[i]) << (_WORD_BITS * i)
    return Genome(n, v & ((1 << n) - 1))
