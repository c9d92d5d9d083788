"""Conditional-mean ranking under a multivariate normal item model.

A user's row is treated as a draw from N(mu, Sigma).  In the default
("missing") mode the user's non-interactions are unknowns predicted from the
seed interactions alone.  The "observed" mode predicts each item from all
other entries of the row, zeros included; it needs one full inversion, after
which every leave-one-out solve is a rank-one downdate read off the
precision matrix.
"""

from __future__ import annotations

import struct

import numpy as np
import scipy.linalg

from .core import Recommender, _as_row
from .dataset import InteractionDataset
from .errors import DataFormatError
from .stats import (
    DEFAULT_MAX_ITEMS,
    ItemStatistics,
    compute_statistics,
    correlation_matrix,
)

_MAGIC = b"MVNR"
_VERSION = 1


def _solve_spd(a: np.ndarray, b: np.ndarray, jitter: float):
    """Symmetric positive-definite solve with a one-shot jitter fallback.

    Duplicate item columns make exact singularity possible even on clean
    data, so failure adds a tiny diagonal jitter and retries; as a last
    resort a least-squares solve keeps scoring total.
    """
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(a), b)
    except np.linalg.LinAlgError:
        pass
    bumped = a + jitter * np.eye(a.shape[0])
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(bumped), b)
    except np.linalg.LinAlgError:
        return scipy.linalg.lstsq(bumped, b)[0]


def _invert_spd(a: np.ndarray, jitter: float) -> np.ndarray:
    return _solve_spd(a, np.eye(a.shape[0]), jitter)


def _truncate_eigenpairs(sigma: np.ndarray, d: int) -> np.ndarray:
    """Keep the d largest eigenpairs of a symmetric matrix."""
    w, v = np.linalg.eigh(sigma)
    keep = np.argsort(w)[::-1][:d]
    return (v[:, keep] * w[keep]) @ v[:, keep].T


class MvnRecommender(Recommender):
    """Multivariate-normal conditional-mean recommender.

    Args:
        alpha: covariance shrinkage coefficient in [0, 1].
        beta: mean shrinkage coefficient in [0, 1].
        ridge: diagonal regularization added to the seed submatrix.
        popularity_free: score with zero mean and the correlation matrix,
            equivalent to column-standardizing the training matrix first.
        variant: "missing" (predict from the seed only) or "observed"
            (leave-one-out prediction from the full row).
        n_components: optionally truncate the covariance to its largest
            eigenpairs before scoring.
    """

    def __init__(self, alpha: float = 0.0, beta: float = 0.0, ridge: float = 0.0,
                 popularity_free: bool = False, variant: str = "missing",
                 n_components: int | None = None, max_items: int = DEFAULT_MAX_ITEMS):
        if ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {ridge}")
        if variant not in ("missing", "observed"):
            raise ValueError(f"unknown variant {variant!r}")
        self.alpha = alpha
        self.beta = beta
        self.ridge = float(ridge)
        self.popularity_free = popularity_free
        self.variant = variant
        self.n_components = n_components
        self.max_items = max_items
        self.stats_ = None

    # -- fitting -----------------------------------------------------------

    def fit(self, train: InteractionDataset) -> "MvnRecommender":
        stats = compute_statistics(train, alpha=self.alpha, beta=self.beta,
                                   max_items=self.max_items)
        return self._finalize(stats)

    @classmethod
    def from_statistics(cls, stats: ItemStatistics, **kwargs) -> "MvnRecommender":
        """Model backed by externally supplied moments (already shrunk, if any)."""
        return cls(alpha=stats.alpha, beta=stats.beta, **kwargs)._finalize(stats)

    def _finalize(self, stats: ItemStatistics) -> "MvnRecommender":
        self.stats_ = stats
        if self.popularity_free:
            self._matrix = correlation_matrix(stats.covariance)
            sd = stats.stddev
            # observed seed value 1 maps to (1 - mu)/sd in standardized space
            with np.errstate(divide="ignore", invalid="ignore"):
                self._seed_value = np.where(sd > 0, (1.0 - stats.mean) / sd, 0.0)
            self._center = np.zeros_like(stats.mean)
            with np.errstate(divide="ignore", invalid="ignore"):
                self._row_scale = np.where(sd > 0, 1.0 / sd, 0.0)
        else:
            self._matrix = stats.covariance
            self._seed_value = 1.0 - stats.mean
            self._center = stats.mean
            self._row_scale = np.ones_like(stats.mean)
        if self.n_components is not None and self.n_components < self._matrix.shape[0]:
            self._matrix = _truncate_eigenpairs(self._matrix, self.n_components)
        self._jitter = 1e-10 * np.trace(self._matrix) / self._matrix.shape[0]
        self._precision = None
        if self.variant == "observed":
            self._prepare_observed()
        return self

    def _prepare_observed(self):
        a = self._matrix + self.ridge * np.eye(self._matrix.shape[0])
        self._precision = _invert_spd(a, self._jitter)
        diag = np.diag(self._precision).copy()
        diag[diag == 0] = np.inf
        self._precision_diag = diag

    @property
    def n_items(self) -> int:
        self._require_fitted("stats_")
        return self.stats_.n_items

    # -- prediction --------------------------------------------------------

    def predict_missing(self, seed_items) -> np.ndarray:
        """Conditional mean of all items given the seed interactions.

        Returns a full-length vector; seed positions carry their known
        value 1.  An empty seed predicts the mean (item popularity).
        """
        self._require_fitted("stats_")
        m = self.n_items
        seed = np.asarray(sorted(set(int(j) for j in seed_items)), dtype=int)
        if seed.size and (seed.min() < 0 or seed.max() >= m):
            raise IndexError("seed set contains out-of-range item indices")
        if seed.size == 0:
            return self._center.copy()
        a = self._matrix[np.ix_(seed, seed)]
        if self.ridge:
            a = a + self.ridge * np.eye(seed.size)
        w = _solve_spd(a, self._seed_value[seed], self._jitter)
        scores = self._center + w @ self._matrix[seed, :]
        scores[seed] = 1.0
        return scores

    def predict_observed(self, row) -> np.ndarray:
        """Leave-one-out conditional mean of each item given the rest of the row."""
        self._require_fitted("stats_")
        if self._precision is None:
            self._prepare_observed()
        row = np.asarray(row, dtype=float)
        if row.size != self.n_items:
            raise ValueError(f"row length {row.size} != {self.n_items} items")
        c = (row - self.stats_.mean) * self._row_scale
        return self._center + c - (self._precision @ c) / self._precision_diag

    def predict_observed_many(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized ``predict_observed`` over a stack of rows."""
        self._require_fitted("stats_")
        if self._precision is None:
            self._prepare_observed()
        c = (np.asarray(rows, dtype=float) - self.stats_.mean) * self._row_scale
        return self._center + c - (c @ self._precision) / self._precision_diag

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        if self.variant == "observed":
            return self.predict_observed(_as_row(seed_items, full_row, self.n_items))
        return self.predict_missing(seed_items)

    def score_users(self, seed_sets, rows, user_indices) -> np.ndarray | list:
        """Batch hook for the evaluation harness."""
        if self.variant == "observed":
            return self.predict_observed_many(rows)
        return [self.predict_missing(seed) for seed in seed_sets]

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        self._require_fitted("stats_")
        stats = self.stats_
        m = stats.n_items
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQ", _VERSION, m))
            fh.write(struct.pack("<dddB", self.ridge, self.alpha, self.beta,
                                 int(self.popularity_free)))
            fh.write(stats.mean.astype("<f8").tobytes())
            fh.write(stats.stddev.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(stats.covariance, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "MvnRecommender":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise DataFormatError(path, 0, f"bad magic {magic!r}")
            version, m = struct.unpack("<IQ", fh.read(12))
            if version != _VERSION:
                raise DataFormatError(path, 0, f"unsupported version {version}")
            ridge, alpha, beta, pop_free = struct.unpack("<dddB", fh.read(25))
            mean = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
            fh.read(8 * m)
            cov = np.frombuffer(fh.read(8 * m * m), dtype="<f8").reshape(m, m).copy()
        model = cls(alpha=alpha, beta=beta, ridge=ridge, popularity_free=bool(pop_free))
        return model._finalize(ItemStatistics(mean, cov, alpha=alpha, beta=beta))
