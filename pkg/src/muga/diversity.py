"""Population diversity: pairwise Hamming sums and the normalized measure.

S(P) sums Hamming distances over all ordered pairs of population members, so
it is twice the unordered sum and always even. The normalized measure divides
the suffix-restricted sum by its maximum, giving a density in [0, 1] over the
part of the genome that selection has not yet fixed.
"""

from __future__ import annotations

from typing import Sequence

from .bitcore import Genome, hamming


def s_of_population(members: Sequence[Genome]) -> int:
    """S(P): sum of Hamming distances over all ordered pairs."""
    total = 0
    for i, x in enumerate(members):
        for y in members[i + 1:]:
            total += hamming(x, y)
    return 2 * total


def s_of_point(x: Genome, members: Sequence[Genome]) -> int:
    """Sum of Hamming distances from x to every member (empty sum is 0)."""
    return sum(hamming(x, y) for y in members)


def normalized_diversity(members: Sequence[Genome], best_fitness: int) -> float:
    """Average pairwise distance density of the non-optimized suffixes.

    The suffix starts two positions past the best fitness, skipping the bit
    whose flip would improve a fit individual. Returns 0.0 when that suffix is
    empty (best_fitness = n - 1), where the measure is undefined but unused.
    """
    mu = len(members)
    if mu < 2:
        raise ValueError("normalized diversity needs at least two individuals")
    n = members[0].n
    width = n - best_fitness - 1
    if width <= 0:
        return 0.0
    shift = best_fitness + 1
    total = 0
    for i, x in enumerate(members):
        for y in members[i + 1:]:
            total += ((x.value ^ y.value) >> shift).bit_count()
    return 2 * total / (mu * (mu - 1) * width)


class DiversityState:
    """Pairwise distance matrix with O(mu * n / w) single-replacement updates.

    The engine replaces one individual per accepted offspring; recomputing the
    full matrix each time would dominate the iteration cost, so only the
    affected row/column is refreshed.
    """

    __slots__ = ("mu", "pairwise", "total")

    def __init__(self, mu: int, pairwise: list[list[int]], total: int):
        self.mu = mu
        self.pairwise = pairwise
        self.total = total

    @classmethod
    def from_population(cls, members: Sequence[Genome]) -> "DiversityState":
        mu = len(members)
        pairwise = [[0] * mu for _ in range(mu)]
        total = 0
        for i in range(mu):
            for j in range(i + 1, mu):
                h = hamming(members[i], members[j])
                pairwise[i][j] = pairwise[j][i] = h
                total += 2 * h
        return cls(mu, pairwise, total)

    def row_sum(self, index: int) -> int:
        """S_P(member index): distances from one member to all others."""
        return sum(self.pairwise[index])

    def replace(self, index: int, new_genome: Genome, members: Sequence[Genome]) -> None:
        """Update for `members[index]` being replaced by `new_genome`.

        Call with `members` still holding the outgoing individual; only rows
        other than `index` are read.
        """
        row = self.pairwise[index]
        for w in range(self.mu):
            if w == index:
                continue
            h = hamming(new_genome, members[w])
            self.total += 2 * (h - row[w])
            row[w] = h
            self.pairwise[w][index] = h
