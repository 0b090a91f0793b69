"""Command-line interface.

Subcommands: run, flat, theory, check-unbiased, compare. Options may come
from a flat `key = value` config file (--config); explicit flags win. Exit
codes: 0 success, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bitcore import FitnessKind
from .engine import GaConfig, InitKind
from .harness import (
    ConfigError,
    ExperimentSpec,
    compare,
    flat_experiment,
    parse_config_file,
    print_experiment_summary,
    print_flat_report,
    run_experiment,
)
from .operators import (
    MutationParams,
    TieBreakKind,
    check_unbiased,
    crossover_operator,
    mutation_operator,
    tiebreak_operator,
)
from .rng import Xoroshiro128pp
from .theory import (
    RatePredicate,
    ea_runtime,
    ef_probability_bound,
    flat_diversity_alpha,
    flat_diversity_fixed_point,
    plateau_diversity_bound,
    runtime_integral,
    tiebreak_speedup_bound,
    truncated_jump_mean,
)

_TIE = {k.value: k for k in TieBreakKind}
_INIT = {k.value: k for k in InitKind}
_FITNESS = {k.value: k for k in FitnessKind}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; config errors are 1
        raise ConfigError(message)


def _add_ga_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value option file")
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--chi", type=float)
    p.add_argument("--pc", type=float)
    p.add_argument("--tie-break", choices=sorted(_TIE))
    p.add_argument("--init", choices=sorted(_INIT))
    p.add_argument("--adaptive-pc", action="store_true", default=None)
    p.add_argument("--fitness", choices=sorted(_FITNESS))
    p.add_argument("--max-iters", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace-every", type=int)
    p.add_argument("--window-lo", type=float)
    p.add_argument("--window-hi", type=float)
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)
    p.add_argument("--engine", choices=("kernel", "python"))


_GA_DEFAULTS = {
    "n": 100, "mu": 1, "chi": 1.0, "pc": 0.0,
    "tie_break": "offspring", "init": "zeros", "adaptive_pc": False,
    "fitness": "leading_ones", "max_iters": None,
    "runs": 1, "seed": 0, "trace_every": None,
    "window_lo": 0.1, "window_hi": 0.9, "out": None,
    "workers": 1, "engine": "kernel",
}

_CASTS = {
    "n": int, "mu": int, "chi": float, "pc": float, "max_iters": int,
    "runs": int, "seed": int, "trace_every": int,
    "window_lo": float, "window_hi": float, "workers": int,
}


def _merge_options(args: argparse.Namespace, config_path: Path | None) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(_GA_DEFAULTS)
    if config_path is not None:
        for key, raw in parse_config_file(config_path).items():
            if key not in merged:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "adaptive_pc":
                merged[key] = raw.lower() in ("1", "true", "yes", "on")
            elif key in _CASTS:
                try:
                    merged[key] = _CASTS[key](raw)
                except ValueError:
                    raise ConfigError(f"bad value for {key!r}: {raw!r}")
            else:
                merged[key] = raw
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _spec_from_options(opts: dict) -> ExperimentSpec:
    try:
        config = GaConfig(
            n=opts["n"], mu=opts["mu"], chi=opts["chi"], p_c=opts["pc"],
            tie_break=_TIE[opts["tie_break"]], init=_INIT[opts["init"]],
            adaptive_pc=opts["adaptive_pc"], fitness=_FITNESS[opts["fitness"]],
            max_iterations=opts["max_iters"],
        )
        return ExperimentSpec(
            config=config, runs=opts["runs"], base_seed=opts["seed"],
            trace_every=opts["trace_every"],
            level_window=(opts["window_lo"], opts["window_hi"]),
            out_dir=opts["out"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _cmd_run(args) -> int:
    opts = _merge_options(args, args.config)
    spec = _spec_from_options(opts)
    run_experiment(spec, workers=opts["workers"], engine=opts["engine"], quiet=False)
    return 0


def _cmd_compare(args) -> int:
    if args.config is not None:
        raise ConfigError("compare takes --config-a/--config-b, not --config")
    opts_a = _merge_options(args, args.config_a)
    opts_b = _merge_options(args, args.config_b)
    report = compare(
        _spec_from_options(opts_a),
        _spec_from_options(opts_b),
        workers=opts_a["workers"],
        engine=opts_a["engine"],
    )
    print("arm A:")
    print_experiment_summary(report.a)
    print("arm B:")
    print_experiment_summary(report.b)
    print(f"mean ratio A/B: {report.ratio:.6f} "
          f"(95% CI [{report.ci_low:.6f}, {report.ci_high:.6f}])")
    print(f"significant (CI excludes 1): {report.significant}")
    return 0


def _cmd_flat(args) -> int:
    opts = _merge_options(args, args.config)
    report = flat_experiment(
        n=opts["n"], mu=opts["mu"], chi=opts["chi"], p_c=opts["pc"],
        steps=args.steps, runs=opts["runs"], base_seed=opts["seed"],
    )
    print_flat_report(report, max_rows=args.show_bins)
    if opts["out"] is not None:
        out_dir = Path(opts["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "flat_bins.csv"
        with path.open("w") as fh:
            fh.write("s_lo,width,count,mean_s,mean_next,predicted\n")
            for b in report.bins:
                fh.write(f"{b.s_lo},{b.width},{b.count},{b.mean_s!r},"
                         f"{b.mean_next!r},{b.predicted!r}\n")
        print(f"wrote bins: {path}")
    return 0


def _cmd_theory(args) -> int:
    print(f"ea_runtime(n={args.n}, chi={args.chi}) = {ea_runtime(args.n, args.chi)!r}")
    m = RatePredicate.constant(args.m_const)
    print(f"runtime_integral(m={args.m_const}, n={args.n}, chi={args.chi}) = "
          f"{runtime_integral(m, args.n, args.chi)!r}")
    print(f"tiebreak_speedup_bound(pc={args.pc}) = {tiebreak_speedup_bound(args.pc)!r}")
    d = plateau_diversity_bound(args.pc)
    print(f"plateau_diversity_bound(pc={args.pc}) = {d!r}")
    print(f"ef_probability_bound(pc={args.pc}, d={d!r}) = {ef_probability_bound(args.pc, d)!r}")
    if args.mu >= 2:
        print(f"flat_diversity_fixed_point(mu={args.mu}, chi={args.chi}, N={args.n}) = "
              f"{flat_diversity_fixed_point(args.mu, args.chi, args.n)!r}")
        print(f"flat_diversity_alpha(mu={args.mu}, chi={args.chi}, N={args.n}) = "
              f"{flat_diversity_alpha(args.mu, args.chi, args.n)!r}")
    print(f"truncated_jump_mean(remaining={args.remaining}) = "
          f"{truncated_jump_mean(args.remaining)!r}")
    return 0


def _cmd_check_unbiased(args) -> int:
    rng = Xoroshiro128pp(args.seed)
    if args.op == "mutation":
        op = mutation_operator(MutationParams(args.n, args.chi))
    elif args.op == "crossover":
        op = crossover_operator()
    else:
        op = tiebreak_operator(_TIE[args.tie_break], args.mu)
    report = check_unbiased(op, args.n, args.samples, args.epsilon, rng,
                            mode=args.mode, automorphisms=args.automorphisms)
    print(f"operator: {report.operator}")
    print(f"mode: {report.mode}" + (" (fell back to sampling)" if report.fell_back else ""))
    print(f"max deviation: {report.max_deviation!r}")
    print(f"pass: {report.passed}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="muga",
                     description="(mu+1) GA on LeadingOnes: simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a seeded experiment, write CSVs")
    _add_ga_options(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_flat = sub.add_parser("flat", help="flat-fitness diversity recursion check")
    _add_ga_options(p_flat)
    p_flat.add_argument("--steps", type=int, default=100_000)
    p_flat.add_argument("--show-bins", type=int, default=10,
                        help="how many heavy bins to print (0 = all)")
    p_flat.set_defaults(func=_cmd_flat)

    p_th = sub.add_parser("theory", help="print closed-form predictions")
    p_th.add_argument("--n", type=int, default=1000)
    p_th.add_argument("--chi", type=float, default=1.0)
    p_th.add_argument("--pc", type=float, default=0.6)
    p_th.add_argument("--mu", type=int, default=2)
    p_th.add_argument("--m-const", type=float, default=0.0)
    p_th.add_argument("--remaining", type=int, default=3)
    p_th.set_defaults(func=_cmd_theory)

    p_cu = sub.add_parser("check-unbiased", help="operator invariance check")
    p_cu.add_argument("--op", choices=("mutation", "crossover", "tiebreak"),
                      required=True)
    p_cu.add_argument("--n", type=int, default=8)
    p_cu.add_argument("--chi", type=float, default=1.0)
    p_cu.add_argument("--mu", type=int, default=2)
    p_cu.add_argument("--tie-break", choices=sorted(_TIE), default="diversity")
    p_cu.add_argument("--samples", type=int, default=100_000)
    p_cu.add_argument("--epsilon", type=float, default=0.01)
    p_cu.add_argument("--mode", choices=("auto", "exact", "sampling"), default="auto")
    p_cu.add_argument("--automorphisms", type=int, default=3)
    p_cu.add_argument("--seed", type=int, default=0)
    p_cu.set_defaults(func=_cmd_check_unbiased)

    p_cmp = sub.add_parser("compare", help="runtime ratio of two configurations")
    p_cmp.add_argument("--config-a", type=Path, required=True)
    p_cmp.add_argument("--config-b", type=Path, required=True)
    _add_ga_options(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
