"""Simulator and analysis toolkit for the (mu+1) genetic algorithm on LeadingOnes.

Core pieces: bit-packed genomes and fitness (`bitcore`), population diversity
measures (`diversity`), variation operators and tie-breakers (`operators`),
the steady-state engine (`engine`) with a compiled twin (`kernel`), per-level
instrumentation (`instrumentation`), closed-form predictions (`theory`), and
the experiment harness plus CLI (`harness`, `cli`).
"""

from .bitcore import FitnessKind, Genome, hamming, leading_ones, suffix
from .engine import GaConfig, InitKind, IterationEvent, Population, run
from .instrumentation import LevelRecord, LevelStats, RunRecord, finalize_levels, summarize
from .operators import MutationParams, TieBreakKind
from .rng import Xoroshiro128pp, mix64, run_seed
from .stats import SummaryStats

__version__ = "0.1.0"

__all__ = [
    "FitnessKind", "Genome", "hamming", "leading_ones", "suffix",
    "GaConfig", "InitKind", "IterationEvent", "Population", "run",
    "LevelRecord", "LevelStats", "RunRecord", "finalize_levels", "summarize",
    "MutationParams", "TieBreakKind",
    "Xoroshiro128pp", "mix64", "run_seed",
    "SummaryStats",
    "__version__",
]
