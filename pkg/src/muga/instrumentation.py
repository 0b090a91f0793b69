"""Per-level bookkeeping reconstructed online from the iteration events.

A fitness level i is *reached* when it is the population's best fitness at
some time. It is *essential* when the improvement that leaves it comes from
mutation: either no crossover was used in the leaving step, or the crossover
product before mutation was still below i+1. An essential level left before
the population ever consolidated on it (all fitnesses equal to i) is
*strange*; essential and not strange is *normal*.

Free-riders of level i count the levels skipped within the jump that leaves
it. Extra free-riders count the levels crossed between that jump's landing
point and the next essential level; those crossings are crossover's work.
The chain is closed at the optimum: when no essential level follows i, the
next-essential marker is n, so the per-run identity

    sum over essential i of (1 + free_riders_i + extra_free_riders_i)
        = n - (first essential level)

holds exactly for every run that ends in the optimum.

The tracker keeps O(n) state and never stores the event stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .stats import SummaryStats


@dataclass(frozen=True)
class LevelRecord:
    """Everything recorded about one fitness level of one run."""

    level: int
    reached: bool
    essential: bool
    strange: bool
    normal: bool
    t_in: int | None
    t_out: int | None
    t_cons: int | None
    succ: int | None
    esucc: int | None
    free_riders: int
    extra_free_riders: int
    d_leave: float | None


class LevelTable:
    """Compact per-run array form of the reached-level records.

    Rows are in leaving order, which for an elitist run is also ascending
    level order. Unreached levels are implicit.
    """

    COLUMNS = ("level", "t_in", "t_out", "t_cons", "succ", "used_crossover",
               "intermediate_fitness")

    def __init__(self, n: int, level, t_in, t_out, t_cons, succ,
                 used_crossover, intermediate_fitness, d_leave):
        self.n = n
        self.level = np.asarray(level, dtype=np.int64)
        self.t_in = np.asarray(t_in, dtype=np.int64)
        self.t_out = np.asarray(t_out, dtype=np.int64)
        self.t_cons = np.asarray(t_cons, dtype=np.int64)
        self.succ = np.asarray(succ, dtype=np.int64)
        self.used_crossover = np.asarray(used_crossover, dtype=np.int64)
        self.intermediate_fitness = np.asarray(intermediate_fitness, dtype=np.int64)
        self.d_leave = np.asarray(d_leave, dtype=np.float64)
        self._derive()

    @classmethod
    def from_rows(cls, n: int, rows: Sequence[tuple], d_leave: Sequence[float]) -> "LevelTable":
        ints = np.array(rows, dtype=np.int64).reshape(len(rows), 7)
        return cls(n, *(ints[:, c] for c in range(7)), d_leave)

    def _derive(self) -> None:
        self.essential = (self.used_crossover == 0) | (self.intermediate_fitness < self.level + 1)
        m = len(self.level)
        esucc = np.empty(m, dtype=np.int64)
        nxt = self.n
        for k in range(m - 1, -1, -1):
            esucc[k] = nxt
            if self.essential[k]:
                nxt = int(self.level[k])
        self.esucc = esucc
        self.strange = self.essential & (self.t_cons < 0)
        self.normal = self.essential & ~self.strange
        self.free_riders = np.where(self.essential, self.succ - self.level - 1, 0)
        self.extra_free_riders = np.where(self.essential, self.esucc - self.succ, 0)
        self.first_essential = int(self.level[self.essential].min()) if self.essential.any() else self.n

    def __len__(self) -> int:
        return len(self.level)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LevelTable):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.level, other.level)
                and np.array_equal(self.t_in, other.t_in)
                and np.array_equal(self.t_out, other.t_out)
                and np.array_equal(self.t_cons, other.t_cons)
                and np.array_equal(self.succ, other.succ)
                and np.array_equal(self.used_crossover, other.used_crossover)
                and np.array_equal(self.intermediate_fitness, other.intermediate_fitness)
                and np.array_equal(self.d_leave, other.d_leave))

    def telescoping_gap(self) -> int:
        """Left side minus right side of the per-run level-partition identity."""
        mask = self.essential
        lhs = int((1 + self.free_riders[mask] + self.extra_free_riders[mask]).sum())
        return lhs - (self.n - self.first_essential)

    def record_at(self, k: int) -> LevelRecord:
        t_cons = int(self.t_cons[k])
        return LevelRecord(
            level=int(self.level[k]),
            reached=True,
            essential=bool(self.essential[k]),
            strange=bool(self.strange[k]),
            normal=bool(self.normal[k]),
            t_in=int(self.t_in[k]),
            t_out=int(self.t_out[k]),
            t_cons=t_cons if t_cons >= 0 else None,
            succ=int(self.succ[k]),
            esucc=int(self.esucc[k]),
            free_riders=int(self.free_riders[k]),
            extra_free_riders=int(self.extra_free_riders[k]),
            d_leave=float(self.d_leave[k]),
        )

    def records(self, include_unreached: bool = False) -> list[LevelRecord]:
        reached = [self.record_at(k) for k in range(len(self))]
        if not include_unreached:
            return reached
        by_level = {r.level: r for r in reached}
        return [by_level.get(i, _unreached(i)) for i in range(self.n)]


def _unreached(level: int) -> LevelRecord:
    return LevelRecord(level, False, False, False, False,
                       None, None, None, None, None, 0, 0, None)


class LevelTracker:
    """Online observer turning the event stream into a LevelTable."""

    def __init__(self, n: int):
        self.n = n
        self._rows: list[tuple] = []
        self._d: list[float] = []
        self._level = 0
        self._t_in = 0
        self._t_cons = -1
        self._started = False

    def start(self, initial_fitness: int, consolidated: bool) -> None:
        self._level = initial_fitness
        self._t_in = 0
        self._t_cons = 0 if consolidated else -1
        self._started = True

    def on_event(self, event) -> None:
        if not self._started:
            raise RuntimeError("tracker not started")
        if event.new_max_fitness > self._level:
            inter = event.intermediate_fitness
            self._rows.append((
                self._level, self._t_in, event.t - 1, self._t_cons,
                event.new_max_fitness, int(event.used_crossover),
                inter if inter is not None else -1,
            ))
            self._d.append(event.d_before_replacement if event.d_before_replacement is not None else 0.0)
            self._level = event.new_max_fitness
            self._t_in = event.t
            self._t_cons = -1
        if event.consolidated and self._t_cons < 0:
            self._t_cons = event.t

    def finalize(self) -> LevelTable:
        return LevelTable.from_rows(self.n, self._rows, self._d)


@dataclass
class RunRecord:
    """Outcome of one run; bit-identical for identical (config, seed)."""

    run_index: int
    seed: int
    n: int
    evaluations: int
    censored: bool
    levels: LevelTable | None
    trace: list[tuple[int, int, int, float]]


def finalize_levels(
    events: Iterable,
    n: int,
    initial_fitness: int = 0,
    initially_consolidated: bool = True,
) -> list[LevelRecord]:
    """Replay a full event stream into one record per level 0..n-1.

    Rejects streams that do not end with the optimum reached (censored runs
    have no well-defined leaving data for their last level).
    """
    tracker = LevelTracker(n)
    tracker.start(initial_fitness, initially_consolidated)
    final = initial_fitness
    for event in events:
        tracker.on_event(event)
        final = event.new_max_fitness
    if final != n:
        raise ValueError("censored run: event stream does not reach the optimum")
    return tracker.finalize().records(include_unreached=True)


@dataclass
class LevelStats:
    """Window-restricted aggregates over many runs' level records."""

    window: tuple[int, int]
    reached_count: int
    essential_count: int
    strange_count: int
    normal_count: int
    strange_fraction: float
    consolidation: SummaryStats
    d_leave_normal: SummaryStats
    ef_normal: SummaryStats
    pr_ef_positive_normal: float
    free_riders_essential: SummaryStats
    jump_histogram: dict[int, int]

    def jump_tail_probability(self, j: int) -> float:
        """Pr(jump >= j | jump >= 1) from the pooled histogram."""
        total = sum(self.jump_histogram.values())
        if total == 0:
            return math.nan
        return sum(c for size, c in self.jump_histogram.items() if size >= j) / total

    def mean_jump(self) -> float:
        total = sum(self.jump_histogram.values())
        if total == 0:
            return math.nan
        return sum(size * c for size, c in self.jump_histogram.items()) / total


class LevelStatsAccumulator:
    """Streaming, order-independent accumulation of LevelStats."""

    def __init__(self, window: tuple[int, int]):
        lo, hi = window
        if lo > hi:
            raise ValueError("empty level window")
        self.window = (lo, hi)
        self.reached_count = 0
        self.essential_count = 0
        self.strange_count = 0
        self.normal_count = 0
        self._cons = [0, 0.0, 0.0]
        self._dlv = [0, 0.0, 0.0]
        self._ef = [0, 0.0, 0.0]
        self._fr = [0, 0.0, 0.0]
        self.ef_positive = 0
        self.jump_histogram: dict[int, int] = {}

    @staticmethod
    def _acc(moments: list, values) -> None:
        moments[0] += len(values)
        moments[1] += float(values.sum())
        moments[2] += float((values * values).sum())

    def add_table(self, table: LevelTable) -> None:
        lo, hi = self.window
        win = (table.level >= lo) & (table.level <= hi)
        ess = win & table.essential
        nor = win & table.normal
        self.reached_count += int(win.sum())
        self.essential_count += int(ess.sum())
        self.strange_count += int((win & table.strange).sum())
        self.normal_count += int(nor.sum())
        self._acc(self._cons, (table.t_cons[nor] - table.t_in[nor]).astype(np.float64))
        self._acc(self._dlv, table.d_leave[nor])
        self._acc(self._ef, table.extra_free_riders[nor].astype(np.float64))
        self._acc(self._fr, table.free_riders[ess].astype(np.float64))
        self.ef_positive += int((table.extra_free_riders[nor] >= 1).sum())
        jumps = (table.succ - table.level)[win]
        for size, count in zip(*np.unique(jumps, return_counts=True)):
            self.jump_histogram[int(size)] = self.jump_histogram.get(int(size), 0) + int(count)

    def add_record(self, r: LevelRecord) -> None:
        lo, hi = self.window
        if not r.reached or not lo <= r.level <= hi:
            return
        self.reached_count += 1
        if r.essential:
            self.essential_count += 1
            _bump(self._fr, r.free_riders)
        if r.strange:
            self.strange_count += 1
        if r.normal:
            self.normal_count += 1
            _bump(self._cons, r.t_cons - r.t_in)
            _bump(self._dlv, r.d_leave)
            _bump(self._ef, r.extra_free_riders)
            if r.extra_free_riders >= 1:
                self.ef_positive += 1
        jump = r.succ - r.level
        self.jump_histogram[jump] = self.jump_histogram.get(jump, 0) + 1

    def finalize(self) -> LevelStats:
        return LevelStats(
            window=self.window,
            reached_count=self.reached_count,
            essential_count=self.essential_count,
            strange_count=self.strange_count,
            normal_count=self.normal_count,
            strange_fraction=(self.strange_count / self.essential_count
                              if self.essential_count else math.nan),
            consolidation=SummaryStats.from_moments(*self._cons),
            d_leave_normal=SummaryStats.from_moments(*self._dlv),
            ef_normal=SummaryStats.from_moments(*self._ef),
            pr_ef_positive_normal=(self.ef_positive / self.normal_count
                                   if self.normal_count else math.nan),
            free_riders_essential=SummaryStats.from_moments(*self._fr),
            jump_histogram=dict(sorted(self.jump_histogram.items())),
        )


def _bump(moments: list, value: float) -> None:
    moments[0] += 1
    moments[1] += value
    moments[2] += value * value


def summarize(records: Iterable[LevelRecord], window: tuple[int, int]) -> LevelStats:
    """Aggregate pooled level records restricted to the given level window."""
    acc = LevelStatsAccumulator(window)
    empty = True
    for r in records:
        empty = False
        acc.add_record(r)
    if empty:
        raise ValueError("no level records supplied")
    return acc.finalize()
