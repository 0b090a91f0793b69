"""Summary statistics shared by the instrumentation and the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class SummaryStats:
    """Mean, sample standard deviation, count, and 95% normal half-width."""

    mean: float
    sd: float
    count: int
    half_width: float

    @classmethod
    def from_moments(cls, count: int, total: float, sum_sq: float) -> "SummaryStats":
        if count == 0:
            return cls(math.nan, 0.0, 0, 0.0)
        mean = total / count
        if count < 2:
            return cls(mean, 0.0, count, 0.0)
        var = max(0.0, (sum_sq - count * mean * mean) / (count - 1))
        sd = math.sqrt(var)
        return cls(mean, sd, count, 1.96 * sd / math.sqrt(count))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "SummaryStats":
        total = float(sum(values))
        sum_sq = float(sum(v * v for v in values))
        return cls.from_moments(len(values), total, sum_sq)
