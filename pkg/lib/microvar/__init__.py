from __future__ import annotations

from .config import CasePair, MicrovarConfig
from .constants import KnownExtent, KnownScenario
from .corpus import CorpusFilter, IngestReport, Tweet, ingest, parse_record
from .grid import CountGrid, DeltaGrid, Extent, FractionGrid, GridSpec, bin_counts, delta, normalize
from .logging import MicrovarLogger
from .pipeline import Comparison, RunConfig
from .stats import angle_histogram, frequency_comparison, linear_fit, noise_band, p_value, pearson
from .synth import Scenario, generate, planted_expectation
from .tokenmatch import MatchConfig, TokenSet, matches, select

__all__ = [
    "angle_histogram",
    "bin_counts",
    "CasePair",
    "Comparison",
    "CorpusFilter",
    "CountGrid",
    "delta",
    "DeltaGrid",
    "Extent",
    "FractionGrid",
    "frequency_comparison",
    "generate",
    "GridSpec",
    "ingest",
    "IngestReport",
    "KnownExtent",
    "KnownScenario",
    "linear_fit",
    "MatchConfig",
    "matches",
    "MicrovarConfig",
    "MicrovarLogger",
    "noise_band",
    "normalize",
    "p_value",
    "parse_record",
    "pearson",
    "planted_expectation",
    "RunConfig",
    "Scenario",
    "select",
    "TokenSet",
    "Tweet",
]
