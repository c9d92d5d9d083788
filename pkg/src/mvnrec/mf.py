"""Matrix factorization on the complete interaction matrix.

Three losses over R ~ P G^T:

* least squares, fitted by alternating exact ridge solves (zeros count as
  observations);
* pairwise ranking (interaction scored above non-interaction), fitted by
  sampled stochastic gradient steps;
* Bernoulli likelihood of every cell, fitted by full-batch gradient descent.

The least-squares model additionally supports refitting a single user's
factor from seed items only, which treats that user's non-interactions as
missing instead of observed zeros.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import Recommender
from .dataset import InteractionDataset
from .errors import ConfigurationError, DataFormatError, NotFittedError

_MAGIC = b"MFAC"
_VERSION = 1
_LOSS_KINDS = ("LS", "BPR", "LOG")
_INIT_SCALE = 0.01
_DEFAULT_TOL = 1e-6


@dataclass
class MfModel:
    """Fitted factor matrices plus the settings that produced them."""

    P: np.ndarray
    G: np.ndarray
    loss_kind: str
    reg: float
    rng_seed: int
    item_bias: np.ndarray | None = None
    user_bias: np.ndarray | None = None
    learning_rate: float | None = None
    epochs_run: int = 0
    loss_history: list = field(default_factory=list)

    @property
    def n_users(self):
        return self.P.shape[0]

    @property
    def n_items(self):
        return self.G.shape[0]

    @property
    def d(self):
        return self.G.shape[1]


def _ridge_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve gram @ x = rhs; least-norm fallback when unregularized and singular."""
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram, rhs, rcond=None)[0]


def _ls_loss(r, p, g, reg, nnz):
    # ||R - P G^T||_F^2 without materializing the dense product
    cross = float(np.sum((r @ g) * p))
    gram = float(np.sum((p.T @ p) * (g.T @ g)))
    penalty = reg * (float(np.sum(p * p)) + float(np.sum(g * g)))
    return nnz - 2.0 * cross + gram + penalty


def fit_als(train: InteractionDataset, d: int, reg: float = 0.0,
            epochs: int = 100, rng_seed: int = 0,
            tol: float = _DEFAULT_TOL) -> MfModel:
    """Alternating ridge solves on the complete matrix until convergence.

    Each half-step is the exact minimizer for its factor, so the tracked
    loss never increases.  Stops early when the relative loss change drops
    below ``tol``.
    """
    if d < 1:
        raise ConfigurationError(f"latent dimension must be >= 1, got {d}")
    rng = np.random.default_rng(rng_seed)
    n, m = train.n_users, train.n_items
    r = train.interactions
    p = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(n, d))
    g = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(m, d))
    eye = np.eye(d)
    history = []
    prev = np.inf
    epoch = 0
    for epoch in range(1, epochs + 1):
        p = _ridge_solve(g.T @ g + reg * eye, (r @ g).T).T
        g = _ridge_solve(p.T @ p + reg * eye, (r.T @ p).T).T
        loss = _ls_loss(r, p, g, reg, r.nnz)
        history.append(loss)
        if prev - loss <= tol * max(prev, 1e-300) and np.isfinite(prev):
            break
        prev = loss
    return MfModel(P=p, G=g, loss_kind="LS", reg=reg, rng_seed=rng_seed,
                   epochs_run=epoch, loss_history=history)


def refit_user(model: MfModel, seed_items, reg: float | None = None) -> np.ndarray:
    """New user factor from seed items only; non-interactions stay missing.

    A single ridge solve on the seed rows of the item factors.  An empty
    seed yields the zero vector.
    """
    if model.loss_kind != "LS":
        raise ConfigurationError("user refit is defined for the least-squares loss")
    reg = model.reg if reg is None else reg
    seed = np.asarray(sorted(set(int(j) for j in seed_items)), dtype=int)
    if seed.size == 0:
        return np.zeros(model.d)
    if seed.min() < 0 or seed.max() >= model.n_items:
        raise IndexError("seed set contains out-of-range item indices")
    gs = model.G[seed, :]
    return _ridge_solve(gs.T @ gs + reg * np.eye(model.d), gs.sum(axis=0))


def predict_scores(model: MfModel, user) -> np.ndarray:
    """Scores for one user: a stored row index or an explicit factor vector."""
    if np.isscalar(user) or getattr(user, "ndim", 1) == 0:
        idx = int(user)
        if not 0 <= idx < model.n_users:
            raise IndexError(f"user index {idx} out of range [0, {model.n_users})")
        vec = model.P[idx]
        scores = vec @ model.G.T
        if model.user_bias is not None:
            scores = scores + model.user_bias[idx]
    else:
        scores = np.asarray(user, dtype=float) @ model.G.T
    if model.item_bias is not None:
        scores = scores + model.item_bias
    return scores


def _interaction_codes(train: InteractionDataset):
    coo = train.interactions.tocoo()
    codes = np.sort(coo.row.astype(np.int64) * train.n_items + coo.col)
    return coo.row.astype(np.int64), coo.col.astype(np.int64), codes


def _sample_negatives(rng, users, codes, m):
    """Uniform negative item per (user, positive) pair, rejecting interactions."""
    neg = rng.integers(0, m, size=users.size)
    key = users * m + neg
    pos = np.searchsorted(codes, key)
    pos = np.minimum(pos, codes.size - 1)
    bad = np.flatnonzero(codes[pos] == key) if codes.size else np.empty(0, int)
    while bad.size:
        neg[bad] = rng.integers(0, m, size=bad.size)
        key = users[bad] * m + neg[bad]
        p = np.minimum(np.searchsorted(codes, key), codes.size - 1)
        bad = bad[codes[p] == key]
    return neg


def fit_bpr(train: InteractionDataset, d: int, reg: float = 0.0,
            learning_rate: float = 0.05, epochs: int = 100, rng_seed: int = 0,
            use_item_bias: bool = True, batch_size: int = 256) -> MfModel:
    """Pairwise ranking loss via sampled stochastic gradient steps.

    Per epoch, as many (user, positive, negative) triples as there are
    interactions are drawn uniformly; negatives are rejection-sampled from
    the user's non-interactions.  Updates apply in fixed-size batches, so a
    fixed seed reproduces the model exactly.
    """
    if d < 1:
        raise ConfigurationError(f"latent dimension must be >= 1, got {d}")
    if learning_rate <= 0:
        raise ConfigurationError("learning rate must be positive")
    rng = np.random.default_rng(rng_seed)
    n, m = train.n_users, train.n_items
    rows, cols, codes = _interaction_codes(train)
    # users holding every item have no negatives to rank against
    counts = np.asarray(train.interactions.sum(axis=1)).ravel()
    usable = counts[rows] < m
    rows, cols = rows[usable], cols[usable]
    nnz = rows.size
    p = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(n, d))
    g = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(m, d))
    gb = np.zeros(m) if use_item_bias else None
    lr = learning_rate
    history = []
    epoch = 0
    for epoch in range(1, epochs + 1):
        if nnz == 0:
            break
        picks = rng.integers(0, nnz, size=nnz)
        neg = _sample_negatives(rng, rows[picks], codes, m)
        epoch_nll = 0.0
        for start in range(0, nnz, batch_size):
            b = picks[start:start + batch_size]
            u, j, s = rows[b], cols[b], neg[start:start + batch_size]
            pu, gj, gs = p[u], g[j], g[s]
            margin = np.sum(pu * (gj - gs), axis=1)
            if gb is not None:
                margin += gb[j] - gb[s]
            e = expit(-margin)  # 1 - sigmoid(margin)
            epoch_nll += float(np.sum(np.logaddexp(0.0, -margin)))
            np.add.at(p, u, lr * (e[:, None] * (gj - gs) - reg * pu))
            np.add.at(g, j, lr * (e[:, None] * pu - reg * gj))
            np.add.at(g, s, lr * (-e[:, None] * pu - reg * gs))
            if gb is not None:
                np.add.at(gb, j, lr * (e - reg * gb[j]))
                np.add.at(gb, s, lr * (-e - reg * gb[s]))
        history.append(epoch_nll / max(nnz, 1))
    return MfModel(P=p, G=g, loss_kind="BPR", reg=reg, rng_seed=rng_seed,
                   item_bias=gb, learning_rate=lr, epochs_run=epoch,
                   loss_history=history)


def fit_log(train: InteractionDataset, d: int, reg: float = 0.0,
            learning_rate: float = 0.05, epochs: int = 100, rng_seed: int = 0,
            row_batch: int | None = None, tol: float = _DEFAULT_TOL) -> MfModel:
    """Bernoulli likelihood over every cell, full-batch gradient descent.

    Gradients are averaged over the summed axis (items for the user step,
    users for the item step), which keeps the step size independent of the
    matrix shape while leaving the stationary points of the penalized
    likelihood unchanged.  ``row_batch`` optionally processes users in
    blocks to bound memory on large matrices.
    """
    if d < 1:
        raise ConfigurationError(f"latent dimension must be >= 1, got {d}")
    if learning_rate <= 0:
        raise ConfigurationError("learning rate must be positive")
    rng = np.random.default_rng(rng_seed)
    n, m = train.n_users, train.n_items
    r = train.interactions
    p = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(n, d))
    g = rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=(m, d))
    lr = learning_rate
    blocks = [slice(0, n)] if not row_batch else [
        slice(i, min(i + row_batch, n)) for i in range(0, n, row_batch)]
    history = []
    prev = np.inf
    epoch = 0
    for epoch in range(1, epochs + 1):
        nll = 0.0
        grad_g = np.zeros_like(g)
        for blk in blocks:
            scores = p[blk] @ g.T
            rb = r[blk].toarray()
            # log(1 + exp(-score)) for ones, log(1 + exp(score)) for zeros
            nll += float(np.sum(np.logaddexp(0.0, scores) - rb * scores))
            diff = expit(scores) - rb
            grad_g += diff.T @ p[blk]
            p[blk] -= lr * ((diff @ g) + 2.0 * reg * p[blk]) / m
        g -= lr * (grad_g + 2.0 * reg * g) / n
        loss = nll + reg * (float(np.sum(p * p)) + float(np.sum(g * g)))
        history.append(loss)
        if abs(prev - loss) <= tol * max(abs(prev), 1e-300) and np.isfinite(prev):
            break
        prev = loss
    return MfModel(P=p, G=g, loss_kind="LOG", reg=reg, rng_seed=rng_seed,
                   learning_rate=lr, epochs_run=epoch, loss_history=history)


def save_model(model: MfModel, path) -> None:
    """Binary dump: header, then P, G and biases as little-endian doubles."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        kind = _LOSS_KINDS.index(model.loss_kind)
        flags = (1 if model.item_bias is not None else 0) | (
            2 if model.user_bias is not None else 0)
        fh.write(struct.pack("<IBQQQdB", _VERSION, kind, model.n_users,
                             model.n_items, model.d, model.reg, flags))
        fh.write(np.ascontiguousarray(model.P, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.G, dtype="<f8").tobytes())
        if model.user_bias is not None:
            fh.write(model.user_bias.astype("<f8").tobytes())
        if model.item_bias is not None:
            fh.write(model.item_bias.astype("<f8").tobytes())


def load_model(path) -> MfModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DataFormatError(path, 0, "bad magic")
        version, kind, n, m, d, reg, flags = struct.unpack("<IBQQQdB", fh.read(38))
        if version != _VERSION:
            raise DataFormatError(path, 0, f"unsupported version {version}")
        p = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
        g = np.frombuffer(fh.read(8 * m * d), dtype="<f8").reshape(m, d).copy()
        user_bias = item_bias = None
        if flags & 2:
            user_bias = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
        if flags & 1:
            item_bias = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
    return MfModel(P=p, G=g, loss_kind=_LOSS_KINDS[kind], reg=reg, rng_seed=0,
                   item_bias=item_bias, user_bias=user_bias)


class LeastSquaresRecommender(Recommender):
    """ALS-fitted factorization; scores from the trained row ("observed")
    or from a factor refit on the seed alone ("missing")."""

    def __init__(self, d: int = 64, reg: float = 0.0, epochs: int = 100,
                 rng_seed: int = 0, variant: str = "missing"):
        if variant not in ("missing", "observed"):
            raise ValueError(f"unknown variant {variant!r}")
        self.d = d
        self.reg = reg
        self.epochs = epochs
        self.rng_seed = rng_seed
        self.variant = variant
        self.model_ = None

    def fit(self, train: InteractionDataset) -> "LeastSquaresRecommender":
        self.model_ = fit_als(train, self.d, self.reg, self.epochs, self.rng_seed)
        return self

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        self._require_fitted("model_")
        if self.variant == "missing":
            return predict_scores(self.model_, refit_user(self.model_, seed_items))
        if user_index is None:
            raise NotFittedError("observed variant scores stored training rows; "
                                 "pass user_index")
        return predict_scores(self.model_, int(user_index))


class BprRecommender(Recommender):
    def __init__(self, d: int = 64, reg: float = 0.0, learning_rate: float = 0.05,
                 epochs: int = 100, rng_seed: int = 0, use_item_bias: bool = True):
        self.d = d
        self.reg = reg
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.rng_seed = rng_seed
        self.use_item_bias = use_item_bias
        self.model_ = None

    def fit(self, train: InteractionDataset) -> "BprRecommender":
        self.model_ = fit_bpr(train, self.d, self.reg, self.learning_rate,
                              self.epochs, self.rng_seed, self.use_item_bias)
        return self

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        self._require_fitted("model_")
        if user_index is None:
            raise NotFittedError("ranking factors are stored per training row; "
                                 "pass user_index")
        return predict_scores(self.model_, int(user_index))


class LogisticRecommender(Recommender):
    def __init__(self, d: int = 64, reg: float = 0.0, learning_rate: float = 0.05,
                 epochs: int = 100, rng_seed: int = 0):
        self.d = d
        self.reg = reg
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.rng_seed = rng_seed
        self.model_ = None

    def fit(self, train: InteractionDataset) -> "LogisticRecommender":
        self.model_ = fit_log(train, self.d, self.reg, self.learning_rate,
                              self.epochs, self.rng_seed)
        return self

    def score_user(self, seed_items, full_row=None, user_index=None) -> np.ndarray:
        self._require_fitted("model_")
        if user_index is None:
            raise NotFittedError("factors are stored per training row; pass user_index")
        return predict_scores(self.model_, int(user_index))
