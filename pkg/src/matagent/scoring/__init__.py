"""Completion and accuracy scoring for the four benchmark task types."""

from matagent.scoring.ratio import ratio_score, relative_error
from matagent.scoring.report import BenchmarkReport, aggregate_report
from matagent.scoring.soap import (
    SoapParams,
    SoapVector,
    soap_descriptor,
    soap_similarity,
    structure_similarity,
)
from matagent.scoring.tasks import (
    AE,
    BS,
    SR,
    TS,
    AeCompletionFlags,
    AeItem,
    BsItem,
    ItemScore,
    ScoreBreakdown,
    ScoringOptions,
    SrItem,
    TsCompletionFlags,
    TsItem,
    score_ae,
    score_bs,
    score_sr,
    score_ts,
)

__all__ = [
    "AE",
    "BS",
    "SR",
    "TS",
    "AeCompletionFlags",
    "AeItem",
    "BenchmarkReport",
    "BsItem",
    "ItemScore",
    "ScoreBreakdown",
    "ScoringOptions",
    "SoapParams",
    "SoapVector",
    "SrItem",
    "TsCompletionFlags",
    "TsItem",
    "aggregate_report",
    "ratio_score",
    "relative_error",
    "score_ae",
    "score_bs",
    "score_sr",
    "score_ts",
    "soap_descriptor",
    "soap_similarity",
    "structure_similarity",
]
