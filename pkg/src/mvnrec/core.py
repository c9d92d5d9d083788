"""Shared recommender contract, ranked-list construction, trivial baselines."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .dataset import InteractionDataset
from .errors import NotFittedError
from .stats import mean_vector


@dataclass
class RecommendationList:
    """Ordered candidate items with scores, after excluding the seed set."""

    items: np.ndarray
    scores: np.ndarray
    excluded: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __len__(self):
        return len(self.items)


def top_n(scores: np.ndarray, exclude, n: int) -> RecommendationList:
    """Items with the n largest scores, excluding the given set.

    Descending score; ties break by ascending item index.
    """
    scores = np.asarray(scores, dtype=float)
    exclude = np.asarray(sorted(set(int(i) for i in exclude)), dtype=int)
    if exclude.size and (exclude.min() < 0 or exclude.max() >= scores.size):
        raise IndexError("exclude set contains out-of-range item indices")
    mask = np.ones(scores.size, dtype=bool)
    mask[exclude] = False
    candidates = np.flatnonzero(mask)
    n = max(0, min(int(n), candidates.size))
    if n == 0:
        return RecommendationList(np.empty(0, dtype=int), np.empty(0), exclude)
    # stable sort on negated scores keeps equal scores in index order
    order = np.argsort(-scores[candidates], kind="stable")[:n]
    chosen = candidates[order]
    return RecommendationList(chosen, scores[chosen], exclude)


class Recommender(ABC):
    """Fit on a training dataset, then score items for one user at a time.

    ``score_user`` receives the user's revealed interactions both as an
    index set and (optionally) as the full binary row, so models choosing
    to treat non-interactions as observed zeros can do so explicitly.
    """

    @abstractmethod
    def fit(self, train: InteractionDataset) -> "Recommender":
        ...

    @abstractmethod
    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        ...

    def _require_fitted(self, attr: str):
        if getattr(self, attr, None) is None:
            raise NotFittedError(f"{type(self).__name__} must be fit before scoring")


def _as_row(seed_items, full_row, n_items: int) -> np.ndarray:
    if full_row is not None:
        return np.asarray(full_row, dtype=float)
    row = np.zeros(n_items)
    seed = np.asarray(list(seed_items), dtype=int)
    if seed.size:
        if seed.min() < 0 or seed.max() >= n_items:
            raise IndexError("seed set contains out-of-range item indices")
        row[seed] = 1.0
    return row


class RandomRecommender(Recommender):
    """Scores are i.i.d. standard-normal draws, a random permutation in effect.

    Each user gets an independent stream derived from (rng_seed, user index),
    so scoring is reproducible and order-independent.
    """

    def __init__(self, rng_seed: int = 0):
        self.rng_seed = int(rng_seed)
        self.n_items_ = None

    def fit(self, train: InteractionDataset) -> "RandomRecommender":
        self.n_items_ = train.n_items
        return self

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        self._require_fitted("n_items_")
        stream = np.random.default_rng((self.rng_seed, 0 if user_index is None else int(user_index)))
        return stream.standard_normal(self.n_items_)


class PopularityRecommender(Recommender):
    """Every user gets the same list: items ranked by interaction fraction."""

    def __init__(self):
        self.mean_ = None

    def fit(self, train: InteractionDataset) -> "PopularityRecommender":
        self.mean_ = mean_vector(train)
        return self

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        self._require_fitted("mean_")
        return self.mean_.copy()
