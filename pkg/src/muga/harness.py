"""Experiment orchestration: seeded Monte Carlo, statistics, CSV emission.

Run k of an experiment uses the seed mix64(base_seed XOR (k * golden)), so
results are independent of worker scheduling and any worker count produces
byte-identical output. Censored runs are counted and reported separately and
never enter runtime averages.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .bitcore import FitnessKind
from .engine import GaConfig, InitKind, run as run_python
from .instrumentation import LevelStats, LevelStatsAccumulator, RunRecord
from .kernel import run_kernel, run_kernel_raw
from .operators import TieBreakKind
from .rng import run_seed
from .stats import SummaryStats
from .theory import flat_diversity_fixed_point, flat_diversity_step


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A batch of independent runs of one configuration."""

    config: GaConfig
    runs: int
    base_seed: int = 0
    trace_every: int | None = None  # None: n // 10; 0 disables tracing
    level_window: tuple[float, float] = (0.1, 0.9)
    out_dir: Path | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        lo, hi = self.level_window
        if not 0.0 <= lo < hi <= 1.0:
            raise ConfigError("level window must satisfy 0 <= lo < hi <= 1")

    @property
    def effective_trace_every(self) -> int:
        if self.trace_every is None:
            return max(1, self.config.n // 10)
        return self.trace_every

    @property
    def window_levels(self) -> tuple[int, int]:
        lo, hi = self.level_window
        return int(lo * self.config.n), int(hi * self.config.n)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    evaluations: SummaryStats
    censored_runs: int
    level_stats: LevelStats | None
    telescope_violations: int
    records: list[RunRecord] | None
    files: dict[str, Path]


RUNS_HEADER = "run_index,seed,n,mu,chi,pc,adaptive,tie_break,init,evaluations,censored"
LEVELS_HEADER = ("run_index,level,reached,essential,strange,normal,t_in,t_out,"
                 "t_cons,succ,esucc,free_riders,extra_free_riders,d_leave")
DIVERSITY_HEADER = "run_index,t,best_fitness,s_total,d"


def _one_run(spec: ExperimentSpec, k: int, engine: str) -> RunRecord:
    seed = run_seed(spec.base_seed, k)
    te = spec.effective_trace_every
    if engine == "kernel":
        return run_kernel(spec.config, seed=seed, trace_every=te, run_index=k)
    record = run_python(dataclasses.replace(spec.config, seed=seed), trace_every=te)
    record.run_index = k
    return record


def _runs_csv_line(spec: ExperimentSpec, rec: RunRecord) -> str:
    c = spec.config
    return (f"{rec.run_index},{rec.seed},{c.n},{c.mu},{c.chi!r},{c.p_c!r},"
            f"{int(c.adaptive_pc)},{c.tie_break.value},{c.init.value},"
            f"{rec.evaluations},{int(rec.censored)}")


def _levels_csv_lines(rec: RunRecord) -> Iterable[str]:
    table = rec.levels
    by_level = {int(table.level[k]): k for k in range(len(table))}
    for level in range(rec.n):
        k = by_level.get(level)
        if k is None:
            yield f"{rec.run_index},{level},0,0,0,0,,,,,,0,0,"
            continue
        t_cons = int(table.t_cons[k])
        yield (f"{rec.run_index},{level},1,{int(table.essential[k])},"
               f"{int(table.strange[k])},{int(table.normal[k])},"
               f"{int(table.t_in[k])},{int(table.t_out[k])},"
               f"{t_cons if t_cons >= 0 else ''},{int(table.succ[k])},"
               f"{int(table.esucc[k])},{int(table.free_riders[k])},"
               f"{int(table.extra_free_riders[k])},{float(table.d_leave[k])!r}")


def _diversity_csv_lines(rec: RunRecord) -> Iterable[str]:
    for t, best, s_total, d in rec.trace:
        yield f"{rec.run_index},{t},{best},{s_total},{d!r}"


def run_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    engine: str = "kernel",
    keep_records: bool = False,
    quiet: bool = True,
    out=None,
) -> ExperimentResult:
    """Execute the runs, aggregate, optionally write the CSV triple."""
    if engine not in ("kernel", "python"):
        raise ConfigError(f"unknown engine {engine!r}")
    if workers < 1:
        raise ConfigError("workers must be at least 1")

    files: dict[str, Path] = {}
    handles = {}
    if spec.out_dir is not None:
        out_dir = Path(spec.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, header in (("runs", RUNS_HEADER), ("levels", LEVELS_HEADER),
                             ("diversity", DIVERSITY_HEADER)):
            path = out_dir / f"{name}.csv"
            files[name] = path
            handles[name] = path.open("w")
            handles[name].write(header + "\n")

    acc = LevelStatsAccumulator(spec.window_levels)
    eval_moments = [0, 0.0, 0.0]
    censored_runs = 0
    telescope_violations = 0
    levels_seen = False
    records: list[RunRecord] | None = [] if keep_records else None

    def consume(rec: RunRecord) -> None:
        nonlocal censored_runs, telescope_violations, levels_seen
        if rec.censored:
            censored_runs += 1
        else:
            eval_moments[0] += 1
            eval_moments[1] += rec.evaluations
            eval_moments[2] += float(rec.evaluations) ** 2
            if rec.levels is not None:
                levels_seen = True
                acc.add_table(rec.levels)
                if rec.levels.telescoping_gap() != 0:
                    telescope_violations += 1
        if handles:
            handles["runs"].write(_runs_csv_line(spec, rec) + "\n")
            if not rec.censored and rec.levels is not None:
                for line in _levels_csv_lines(rec):
                    handles["levels"].write(line + "\n")
                for line in _diversity_csv_lines(rec):
                    handles["diversity"].write(line + "\n")
        if records is not None:
            records.append(rec)

    try:
        if workers == 1:
            for k in range(spec.runs):
                consume(_one_run(spec, k, engine))
        else:
            # results are consumed in run-index order regardless of completion order
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for rec in pool.map(lambda k: _one_run(spec, k, engine), range(spec.runs)):
                    consume(rec)
    finally:
        for h in handles.values():
            h.close()

    result = ExperimentResult(
        spec=spec,
        evaluations=SummaryStats.from_moments(*eval_moments),
        censored_runs=censored_runs,
        level_stats=acc.finalize() if levels_seen else None,
        telescope_violations=telescope_violations,
        records=records,
        files=files,
    )
    if not quiet:
        print_experiment_summary(result, out)
    return result


def print_experiment_summary(result: ExperimentResult, out=None) -> None:
    if out is None:
        out = sys.stdout
    spec = result.spec
    c = spec.config
    ev = result.evaluations
    print(f"config: n={c.n} mu={c.mu} chi={c.chi} pc={c.p_c} "
          f"tie={c.tie_break.value} init={c.init.value} adaptive={int(c.adaptive_pc)} "
          f"fitness={c.fitness.value}", file=out)
    print(f"runs: {spec.runs} (censored: {result.censored_runs})", file=out)
    if ev.count:
        print(f"evaluations: mean {ev.mean:.1f} +- {ev.half_width:.1f} "
              f"(sd {ev.sd:.1f}, n {ev.count}); mean/n^2 = {ev.mean / c.n**2:.4f}",
              file=out)
    if result.telescope_violations:
        print(f"WARNING: {result.telescope_violations} runs violate the "
              f"level-partition identity", file=out)
    ls = result.level_stats
    if ls is not None and ls.reached_count:
        print(f"level window {ls.window}: reached {ls.reached_count}, "
              f"essential {ls.essential_count}, strange {ls.strange_count}, "
              f"normal {ls.normal_count}", file=out)
        print(f"  strange fraction     : {ls.strange_fraction:.4f}", file=out)
        print(f"  consolidation time   : {ls.consolidation.mean:.2f} "
              f"+- {ls.consolidation.half_width:.2f}", file=out)
        print(f"  d_leave | normal     : {ls.d_leave_normal.mean:.4f} "
              f"+- {ls.d_leave_normal.half_width:.4f}", file=out)
        print(f"  EF | normal          : mean {ls.ef_normal.mean:.4f}, "
              f"Pr(EF>=1) {ls.pr_ef_positive_normal:.4f}", file=out)
        print(f"  free riders | ess.   : {ls.free_riders_essential.mean:.4f}", file=out)
        print(f"  mean jump            : {ls.mean_jump():.4f}", file=out)
    for name, path in result.files.items():
        print(f"wrote {name}: {path}", file=out)


@dataclass
class RatioCI:
    """Delta-method 95% interval for a ratio of two independent means."""

    ratio: float
    ci_low: float
    ci_high: float

    @property
    def significant(self) -> bool:
        """True when the interval excludes 1."""
        return self.ci_high < 1.0 or self.ci_low > 1.0


def mean_ratio_ci(a: SummaryStats, b: SummaryStats) -> RatioCI:
    if not a.count or not b.count:
        raise ConfigError("cannot form a ratio: a side has no samples")
    ratio = a.mean / b.mean
    var = ratio * ratio * (
        a.sd ** 2 / (a.count * a.mean * a.mean)
        + b.sd ** 2 / (b.count * b.mean * b.mean)
    )
    hw = 1.96 * math.sqrt(var)
    return RatioCI(ratio=ratio, ci_low=ratio - hw, ci_high=ratio + hw)


@dataclass
class CompareReport:
    ratio: float
    ci_low: float
    ci_high: float
    significant: bool
    a: ExperimentResult
    b: ExperimentResult


def compare(
    spec_a: ExperimentSpec,
    spec_b: ExperimentSpec,
    workers: int = 1,
    engine: str = "kernel",
) -> CompareReport:
    """Mean-runtime ratio A/B with a delta-method confidence interval.

    Flags significance when the 95% interval excludes 1. Both specs must
    share n so the ratio compares like with like.
    """
    if spec_a.config.n != spec_b.config.n:
        raise ConfigError("compared specs must share the same n")
    res_a = run_experiment(spec_a, workers=workers, engine=engine)
    res_b = run_experiment(spec_b, workers=workers, engine=engine)
    ci = mean_ratio_ci(res_a.evaluations, res_b.evaluations)
    return CompareReport(
        ratio=ci.ratio,
        ci_low=ci.ci_low,
        ci_high=ci.ci_high,
        significant=ci.significant,
        a=res_a,
        b=res_b,
    )


@dataclass
class FlatBin:
    s_lo: int
    width: int
    count: int
    mean_s: float
    mean_next: float
    predicted: float

    @property
    def relative_error(self) -> float:
        if self.predicted == 0.0:
            return 0.0 if self.mean_next == 0.0 else math.inf
        return abs(self.mean_next - self.predicted) / abs(self.predicted)


@dataclass
class FlatReport:
    n: int
    mu: int
    chi: float
    p_c: float
    steps: int
    runs: int
    bins: list[FlatBin]
    min_bin_count: int
    time_average_s: float
    fixed_point: float

    @property
    def heavy_bins(self) -> list[FlatBin]:
        return [b for b in self.bins if b.count >= self.min_bin_count]

    @property
    def max_heavy_relative_error(self) -> float:
        heavy = self.heavy_bins
        return max((b.relative_error for b in heavy), default=math.nan)

    @property
    def time_average_relative_error(self) -> float:
        return abs(self.time_average_s - self.fixed_point) / self.fixed_point


def flat_experiment(
    n: int,
    mu: int,
    chi: float,
    p_c: float,
    steps: int,
    runs: int = 1,
    base_seed: int = 0,
    min_bin_count: int = 10_000,
    bin_width: int | None = None,
) -> FlatReport:
    """Validate the one-step diversity recursion on a flat fitness landscape.

    Offspring always ties and enters through the offspring-favoring rule, so
    the replaced individual is uniform over the population: exactly the
    process whose conditional mean the recursion describes. Pools
    (S_t -> S_{t+1}) pairs into S_t bins and compares each bin's mean against
    the affine prediction evaluated at the bin's empirical mean (exact for an
    affine map, so bin width does not bias the check); also reports the
    time-average of S against the fixed point.

    The default bin width targets at most ~128 bins across the observed
    range, so large populations, whose S spreads over hundreds of values,
    still produce well-filled bins.
    """
    if mu < 2:
        raise ConfigError("flat experiment needs mu >= 2")
    config = GaConfig(
        n=n, mu=mu, chi=chi, p_c=p_c,
        tie_break=TieBreakKind.OFFSPRING_FAVORING,
        init=InitKind.ALL_ZEROS,
        fitness=FitnessKind.FLAT,
        max_iterations=steps,
    )
    series_list = []
    for k in range(runs):
        raw = run_kernel_raw(config, run_seed(base_seed, k), trace_every=1)
        series_list.append(raw[13])  # S trace, one entry per population state

    s_min = min(int(s.min()) for s in series_list)
    s_max = max(int(s.max()) for s in series_list)
    if bin_width is None:
        bin_width = max(1, -((s_min - s_max - 1) // 128))
    nbins = (s_max - s_min) // bin_width + 1

    counts = np.zeros(nbins, dtype=np.int64)
    sum_s = np.zeros(nbins, dtype=np.float64)
    sum_next = np.zeros(nbins, dtype=np.float64)
    s_total = 0.0
    s_count = 0
    for series in series_list:
        cur, nxt = series[:-1], series[1:]
        idx = (cur - s_min) // bin_width
        counts += np.bincount(idx, minlength=nbins)
        sum_s += np.bincount(idx, weights=cur.astype(np.float64), minlength=nbins)
        sum_next += np.bincount(idx, weights=nxt.astype(np.float64), minlength=nbins)
        s_total += float(nxt.sum())
        s_count += len(nxt)

    bins = []
    for b in range(nbins):
        if counts[b] == 0:
            continue
        mean_s = sum_s[b] / counts[b]
        bins.append(FlatBin(
            s_lo=s_min + b * bin_width, width=bin_width, count=int(counts[b]),
            mean_s=mean_s, mean_next=sum_next[b] / counts[b],
            predicted=flat_diversity_step(mean_s, mu, chi, n),
        ))
    return FlatReport(
        n=n, mu=mu, chi=chi, p_c=p_c, steps=steps, runs=runs,
        bins=bins, min_bin_count=min_bin_count,
        time_average_s=s_total / s_count,
        fixed_point=flat_diversity_fixed_point(mu, chi, n),
    )


def print_flat_report(report: FlatReport, out=None, max_rows: int = 0) -> None:
    if out is None:
        out = sys.stdout
    print(f"flat fitness: n={report.n} mu={report.mu} chi={report.chi} "
          f"pc={report.p_c} steps={report.steps} runs={report.runs}", file=out)
    print(f"time-average S: {report.time_average_s:.4f} "
          f"(fixed point {report.fixed_point:.4f}, "
          f"rel. err. {report.time_average_relative_error:.4f})", file=out)
    heavy = report.heavy_bins
    print(f"bins with >= {report.min_bin_count} samples: {len(heavy)} "
          f"(of {len(report.bins)}); max rel. err. "
          f"{report.max_heavy_relative_error:.4f}", file=out)
    rows = heavy if max_rows == 0 else heavy[:max_rows]
    for b in rows:
        print(f"  S in [{b.s_lo}, {b.s_lo + b.width}) count={b.count:>8} "
              f"mean_next={b.mean_next:.4f} predicted={b.predicted:.4f} "
              f"rel_err={b.relative_error:.4f}", file=out)


def parse_config_file(path: Path) -> dict[str, str]:
    """Flat `key = value` file mirroring the CLI flags; '#' starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value.strip()
    return values
