"""Rank-to-score conversion and composite scoring.

Judge replies are orderings, not absolute scores: asking for an ordering
cancels the run-to-run calibration drift that makes absolute judge scores
unreliable for selection.  Rank r in a batch of m maps to (m+1-r)/m, so the
best candidate scores 1.0 and the worst 1/m.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .types import DIMENSIONS


def rank_to_scores(ranks: Sequence[int]) -> list[float]:
    """Scores for candidates whose 1-based ranks are given positionally."""
    m = len(ranks)
    if sorted(ranks) != list(range(1, m + 1)):
        raise ValueError(f"invalid permutation: {list(ranks)}")
    return [(m + 1 - r) / m for r in ranks]


def composite(scores: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Weighted sum over all dimensions; every dimension must be present."""
    missing = [d for d in weights if d not in scores]
    if missing:
        raise ValueError(f"missing dimension scores: {missing}")
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    return sum(weights[d] * scores[d] for d in weights)


def weakest_dimension(scores: Mapping[str, float]) -> str:
    """Dimension with the minimum score; ties break in fixed dimension order."""
    for d in DIMENSIONS:
        if d not in scores:
            raise ValueError(f"missing dimension: {d}")
    return min(DIMENSIONS, key=lambda d: (scores[d], DIMENSIONS.index(d)))
