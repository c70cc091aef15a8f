"""Per-task completion and accuracy scores on 100-point scales.

Item weights: SR and BS items are worth ``100/n`` each (2.5 for 40 items,
100/24 for 24). AE and TS items are scored on 10 raw points and the sums
are rescaled by ``10/n``, which is 1 for the 10 AE items and 10/6 for the
6 TS items. A prediction of ``None`` (the run produced no value) earns no
accuracy points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from matagent.errors import NonFinite
from matagent.scoring.ratio import ratio_score, relative_error
from matagent.scoring.soap import SoapParams, structure_similarity

SR, BS, AE, TS = "SR", "BS", "AE", "TS"
TASK_TYPES = (SR, BS, AE, TS)
TS_GATE_RE = 0.1


@dataclass(frozen=True)
class ScoringOptions:
    # zero an item's accuracy unless every completion stage succeeded
    couple_accuracy: bool = False
    # zero a TS accuracy term whose relative error exceeds 10%
    ts_strict_gate: bool = False
    soap: SoapParams = SoapParams()


@dataclass(frozen=True)
class AeCompletionFlags:
    co_relaxed: bool = False
    surface_relaxed: bool = False
    adsorbed_relaxed: bool = False

    @property
    def points(self) -> int:
        return 2 * self.co_relaxed + 3 * self.surface_relaxed + 5 * self.adsorbed_relaxed

    @property
    def complete(self) -> bool:
        return self.co_relaxed and self.surface_relaxed and self.adsorbed_relaxed


@dataclass(frozen=True)
class TsCompletionFlags:
    is_done: bool = False
    fs_done: bool = False
    interp_done: bool = False
    neb_converged: bool = False

    @property
    def points(self) -> int:
        return self.is_done + self.fs_done + 2 * self.interp_done + 6 * self.neb_converged

    @property
    def complete(self) -> bool:
        return self.is_done and self.fs_done and self.interp_done and self.neb_converged


@dataclass(frozen=True)
class SrItem:
    item_id: str
    converged: bool
    pred: Optional[object]  # CrystalStructure
    ref: object


@dataclass(frozen=True)
class BsItem:
    item_id: str
    completed: bool
    gap_pred: Optional[float]
    gap_true: float


@dataclass(frozen=True)
class AeItem:
    item_id: str
    flags: AeCompletionFlags
    e_ads_pred: Optional[float]
    e_ads_true: float


@dataclass(frozen=True)
class TsItem:
    item_id: str
    flags: TsCompletionFlags
    de_pred: Optional[float]
    de_true: float
    barrier_pred: Optional[float]
    barrier_true: float


@dataclass(frozen=True)
class ItemScore:
    item_id: str
    completion: float
    accuracy: float
    max_points: float
    relative_error: Optional[float] = None
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreBreakdown:
    task_type: str
    items: tuple
    rescale: float = 1.0

    @property
    def completion_total(self) -> float:
        return self.rescale * math.fsum(i.completion for i in self.items)

    @property
    def accuracy_total(self) -> float:
        return self.rescale * math.fsum(i.accuracy for i in self.items)

    def to_dict(self) -> dict:
        return {
            "task_type": self.task_type,
            "n_items": len(self.items),
            "rescale": self.rescale,
            "completion_total": self.completion_total,
            "accuracy_total": self.accuracy_total,
            "items": [
                {
                    "id": i.item_id,
                    "completion": i.completion,
                    "accuracy": i.accuracy,
                    "max_points": i.max_points,
                    "relative_error": _json_number(i.relative_error),
                    **({"detail": i.detail} if i.detail else {}),
                }
                for i in self.items
            ],
        }


def _json_number(x):
    if x is None or math.isfinite(x):
        return x
    return "inf"


def _truth(x, what):
    if x is None or not math.isfinite(x):
        raise NonFinite(f"reference {what} must be finite, got {x!r}")


def _ratio(pred, truth):
    if pred is None:
        return 0.0, None
    return ratio_score(pred, truth), relative_error(pred, truth)


def _weight(items) -> float:
    return 100.0 / len(items) if items else 0.0


def score_sr(items, options: ScoringOptions = ScoringOptions()) -> ScoreBreakdown:
    w = _weight(items)
    out = []
    for it in items:
        sim = 0.0 if it.pred is None else structure_similarity(it.pred, it.ref, options.soap)
        acc = w * sim
        if options.couple_accuracy and not it.converged:
            acc = 0.0
        out.append(ItemScore(it.item_id, w if it.converged else 0.0, acc, w,
                             detail={"soap_similarity": sim}))
    return ScoreBreakdown(SR, tuple(out))


def score_bs(items, options: ScoringOptions = ScoringOptions()) -> ScoreBreakdown:
    w = _weight(items)
    out = []
    for it in items:
        _truth(it.gap_true, "gap")
        r, re = _ratio(it.gap_pred, it.gap_true)
        acc = w * r
        if options.couple_accuracy and not it.completed:
            acc = 0.0
        out.append(ItemScore(it.item_id, w if it.completed else 0.0, acc, w, re))
    return ScoreBreakdown(BS, tuple(out))


def score_ae(items, options: ScoringOptions = ScoringOptions()) -> ScoreBreakdown:
    out = []
    for it in items:
        _truth(it.e_ads_true, "adsorption energy")
        r, re = _ratio(it.e_ads_pred, it.e_ads_true)
        acc = 10.0 * r
        if options.couple_accuracy and not it.flags.complete:
            acc = 0.0
        out.append(ItemScore(it.item_id, float(it.flags.points), acc, 10.0, re))
    return ScoreBreakdown(AE, tuple(out), 10.0 / len(items) if items else 1.0)


def score_ts(items, options: ScoringOptions = ScoringOptions()) -> ScoreBreakdown:
    out = []
    for it in items:
        _truth(it.de_true, "reaction energy")
        _truth(it.barrier_true, "barrier")
        r_de, re_de = _ratio(it.de_pred, it.de_true)
        r_bar, re_bar = _ratio(it.barrier_pred, it.barrier_true)
        if options.ts_strict_gate:
            if re_de is not None and re_de > TS_GATE_RE:
                r_de = 0.0
            if re_bar is not None and re_bar > TS_GATE_RE:
                r_bar = 0.0
        acc = 2.0 * r_de + 8.0 * r_bar
        if options.couple_accuracy and not it.flags.complete:
            acc = 0.0
        detail = {"relative_error_delta_e": _json_number(re_de)}
        out.append(ItemScore(it.item_id, float(it.flags.points), acc, 10.0, re_bar, detail))
    return ScoreBreakdown(TS, tuple(out), 10.0 / len(items) if items else 1.0)


SCORERS = {SR: score_sr, BS: score_bs, AE: score_ae, TS: score_ts}
