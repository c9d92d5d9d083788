"""Ranking accuracy: fraction of hits in the top k, and rank-discounted gain
normalized by the best attainable ordering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RecommendationList


def precision_at_k(rec: RecommendationList, test_items, k: int) -> float:
    """Hits among the first k recommendations, divided by k.

    The denominator stays k even when fewer than k candidates exist.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    test = set(int(j) for j in test_items)
    head = rec.items[:k]
    hits = sum(1 for j in head if int(j) in test)
    return hits / k


def ndcg_at_k(rec: RecommendationList, test_items, k: int) -> float | None:
    """Discounted gain of hits over positions 1..k, against the ideal list.

    Returns None for users without test interactions (0/0); callers skip
    them when averaging.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    test = set(int(j) for j in test_items)
    if not test:
        return None
    dcg = 0.0
    for pos, j in enumerate(rec.items[:k], start=1):
        if int(j) in test:
            dcg += 1.0 / np.log2(pos + 1)
    ideal_positions = np.arange(1, min(len(test), k) + 1)
    idcg = float(np.sum(1.0 / np.log2(ideal_positions + 1)))
    return dcg / idcg


@dataclass
class MetricReport:
    """Averages over evaluated users; users without test items are skipped."""

    precision: float
    ndcg: float
    k_precision: int
    k_ndcg: int
    users_evaluated: int
    per_user_precision: np.ndarray | None = None
    per_user_ndcg: np.ndarray | None = None


def aggregate_users(precisions, ndcgs, k_precision, k_ndcg,
                    keep_per_user: bool = False) -> MetricReport:
    precisions = np.asarray(precisions, dtype=float)
    ndcgs = np.asarray(ndcgs, dtype=float)
    count = precisions.size
    return MetricReport(
        precision=float(precisions.mean()) if count else 0.0,
        ndcg=float(ndcgs.mean()) if count else 0.0,
        k_precision=k_precision,
        k_ndcg=k_ndcg,
        users_evaluated=count,
        per_user_precision=precisions if keep_per_user else None,
        per_user_ndcg=ndcgs if keep_per_user else None,
    )
