"""Item-based nearest-neighbour recommender.

The similarity matrix is cosine over item columns (or the item correlation
matrix for popularity-free ranking), sparsified to the k largest entries per
column.  The unnormalized mode scores by summed similarity of the user's
seed items; the normalized mode divides by the neighbourhood similarity
mass, which is the classical weighted average.
"""

from __future__ import annotations

import numpy as np

from .core import Recommender, _as_row
from .dataset import InteractionDataset
from .errors import ConfigurationError
from .stats import (
    DEFAULT_MAX_ITEMS,
    check_item_capacity,
    correlation_matrix,
    covariance_matrix,
    mean_vector,
)


def cosine_similarity_matrix(ds: InteractionDataset,
                             max_items: int = DEFAULT_MAX_ITEMS) -> np.ndarray:
    """Cosine similarity of item columns; zero columns get zero rows/columns."""
    check_item_capacity(ds.n_items, max_items)
    r = ds.interactions
    gram = (r.T @ r).toarray()
    norms = np.sqrt(np.diag(gram))
    denom = np.outer(norms, norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, gram / denom, 0.0)
    np.fill_diagonal(s, np.where(norms > 0, 1.0, 0.0))
    return s


def sparsify_columns(s: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries per column, ties by ascending row index."""
    m = s.shape[0]
    if k >= m:
        return s.copy()
    # stable argsort on the negated matrix resolves ties toward lower indices
    order = np.argsort(-s, axis=0, kind="stable")
    keep_rows = order[:k, :]
    out = np.zeros_like(s)
    cols = np.broadcast_to(np.arange(m), (k, m))
    out[keep_rows, cols] = s[keep_rows, cols]
    return out


class KnnRecommender(Recommender):
    """Item-item kNN with columnwise top-k sparsification.

    Args:
        k: neighbourhood size; None means all items.
        normalized: divide by neighbourhood similarity mass (the weighted
            average).  Ranking works markedly better without it, which is
            the default.
        similarity: "cosine" or "correlation".
    """

    def __init__(self, k: int | None = None, normalized: bool = False,
                 similarity: str = "cosine", max_items: int = DEFAULT_MAX_ITEMS):
        if similarity not in ("cosine", "correlation"):
            raise ConfigurationError(f"unknown similarity kind {similarity!r}")
        self.k = k
        self.normalized = normalized
        self.similarity = similarity
        self.max_items = max_items
        self.similarity_full_ = None

    def fit(self, train: InteractionDataset) -> "KnnRecommender":
        m = train.n_items
        k = m if self.k is None else int(self.k)
        if not 1 <= k <= m:
            raise ConfigurationError(f"k must be in [1, {m}], got {k}")
        if self.similarity == "cosine":
            s = cosine_similarity_matrix(train, self.max_items)
        else:
            s = correlation_matrix(covariance_matrix(train, mean_vector(train),
                                                     self.max_items))
        self.k_effective_ = k
        self.similarity_full_ = s
        self.similarity_topk_ = sparsify_columns(s, k)
        self.column_mass_ = self.similarity_topk_.sum(axis=0)
        return self

    @property
    def n_items(self) -> int:
        self._require_fitted("similarity_full_")
        return self.similarity_full_.shape[0]

    def predict(self, seed_or_row) -> np.ndarray:
        """Score every item from a seed index set or a binary row.

        A float ndarray is read as a full binary row; any other sequence is
        read as seed item indices.
        """
        self._require_fitted("similarity_full_")
        arr = np.asarray(seed_or_row)
        if arr.ndim == 1 and arr.size and np.issubdtype(arr.dtype, np.floating):
            if arr.size != self.n_items:
                raise ValueError(f"row length {arr.size} != {self.n_items} items")
            row = arr
        else:
            row = _as_row(seed_or_row, None, self.n_items)
        scores = row @ self.similarity_topk_
        if self.normalized:
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(self.column_mass_ > 0,
                                  scores / self.column_mass_, 0.0)
        return scores

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        return self.predict(_as_row(seed_items, full_row, self.n_items))
