"""Inspection helpers working with item display names: co-occurrence slices,
labeled recommendation lists, and the popularity-bias on/off comparison."""

from __future__ import annotations

import difflib
from dataclasses import dataclass

import numpy as np

from .core import top_n
from .dataset import InteractionDataset, append_user_row
from .errors import ConfigurationError, LabelLookupError
from .models import ModelSpec
from .stats import cooccurrence_matrix

BIAS_MODES = ("item_bias", "no_item_bias")


def resolve_labels(ds: InteractionDataset, labels) -> np.ndarray:
    """Map display names (or raw item ids) to column indices.

    Lookup is exact; a miss raises with close-match suggestions.
    """
    names = ds.item_labels if ds.item_labels is not None else [str(v) for v in ds.item_ids]
    index = {name: j for j, name in enumerate(names)}
    out = []
    for label in labels:
        j = index.get(label)
        if j is None and label in ds.item_index:
            j = ds.item_index[label]
        if j is None:
            suggestions = difflib.get_close_matches(label, names, n=3, cutoff=0.4)
            raise LabelLookupError(label, suggestions)
        out.append(j)
    return np.asarray(out, dtype=int)


def cooccurrence_submatrix(ds: InteractionDataset, labels) -> np.ndarray:
    """Pairwise interaction fractions restricted to the named items."""
    idx = resolve_labels(ds, labels)
    f = cooccurrence_matrix(ds)
    return f[np.ix_(idx, idx)]


@dataclass
class NamedRecommendation:
    seed_labels: list
    model: str
    bias_mode: str
    items: list        # (label, score) pairs, best first
    seed_indices: np.ndarray


def apply_bias_mode(spec: ModelSpec, bias_mode: str) -> ModelSpec:
    """Translate the bias switch into each family's own mechanism.

    Removing the popularity component means: zero mean plus correlation
    blocks for the conditional-mean model, correlation similarity for kNN,
    and dropping the item intercepts for the pairwise-ranking loss.
    """
    if bias_mode not in BIAS_MODES:
        raise ConfigurationError(f"unknown bias mode {bias_mode!r}")
    remove = bias_mode == "no_item_bias"
    if spec.family == "mvn":
        return spec.with_params(popularity_free=remove)
    if spec.family == "knn":
        return spec.with_params(similarity="correlation" if remove else "cosine")
    if spec.family == "mf-bpr":
        return spec.with_params(use_item_bias=not remove)
    if remove:
        raise ConfigurationError(
            f"model family {spec.family!r} has no item-bias switch")
    return spec


def _scores_by_user_row(spec: ModelSpec) -> bool:
    """Families whose scores live on trained user rows need a fold-in user."""
    if spec.family in ("mf-bpr", "mf-log"):
        return True
    return spec.family == "mf-ls" and spec.param_dict.get("variant") == "observed"


def recommend_named(ds: InteractionDataset, spec: ModelSpec, seed_labels,
                    n: int = 20, bias_mode: str = "item_bias",
                    rng_seed: int = 0) -> NamedRecommendation:
    """Fit on the full dataset and return a labeled Top-n list for a named seed.

    Models that only score trained rows get the seed appended as one extra
    user before fitting.
    """
    seed = resolve_labels(ds, seed_labels)
    spec = apply_bias_mode(spec, bias_mode)
    model = spec.build(rng_seed=rng_seed)
    row = np.zeros(ds.n_items)
    row[seed] = 1.0
    if _scores_by_user_row(spec):
        train = append_user_row(ds, seed)
        model.fit(train)
        scores = model.score_user(seed, full_row=row, user_index=ds.n_users)
    else:
        model.fit(ds)
        scores = model.score_user(seed, full_row=row, user_index=None)
    rec = top_n(scores, seed, n)
    names = ds.item_labels if ds.item_labels is not None else [str(v) for v in ds.item_ids]
    items = [(names[j], float(s)) for j, s in zip(rec.items, rec.scores)]
    return NamedRecommendation(list(seed_labels), spec.label(), bias_mode, items, seed)
