"""The min/max ratio kernel shared by the band-gap, adsorption and barrier scores."""

from __future__ import annotations

import math

from matagent.errors import NonFinite


def _check(*values):
    for v in values:
        if v is None or not math.isfinite(v):
            raise NonFinite(f"non-finite value {v!r}")


def ratio_score(pred: float, truth: float) -> float:
    """min(|pred|, |truth|) / max(|pred|, |truth|).

    Both zero counts as perfect agreement (1.0); exactly one zero scores 0.0.
    """
    _check(pred, truth)
    a, b = abs(pred), abs(truth)
    if a == 0 and b == 0:
        return 1.0
    if a == 0 or b == 0:
        return 0.0
    return min(a, b) / max(a, b)


def relative_error(pred: float, truth: float) -> float:
    """|pred - truth| / |truth|; inf when truth is zero and pred is not."""
    _check(pred, truth)
    if truth == 0:
        return 0.0 if pred == 0 else math.inf
    return abs(pred - truth) / abs(truth)
