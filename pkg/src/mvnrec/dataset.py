"""Loading, binarization and filtering of user/item interaction files.

Interactions live in a complete binary matrix: a stored entry means 1,
absence means 0.  External user/item ids are mapped to dense row/column
indices in order of first occurrence in the source file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DataFormatError

RULE_KINDS = ("identity", "threshold_gt", "equals_zero")


@dataclass(frozen=True)
class ProcessingRule:
    """How a parsed (user, item[, rating]) row becomes a binary interaction."""

    kind: str = "identity"
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigurationError(f"unknown processing rule {self.kind!r}")
        if self.kind == "threshold_gt" and self.threshold is None:
            raise ConfigurationError("threshold_gt rule requires a threshold value")

    @property
    def needs_rating(self) -> bool:
        return self.kind != "identity"

    def accepts(self, rating: float | None) -> bool:
        if self.kind == "identity":
            return True
        if self.kind == "threshold_gt":
            return rating > self.threshold
        return rating == 0

    def describe(self) -> str:
        if self.kind == "threshold_gt":
            return f"rating > {self.threshold:g}"
        if self.kind == "equals_zero":
            return "rating == 0"
        return "every row"

    @classmethod
    def parse(cls, text: str) -> "ProcessingRule":
        """Parse a rule spec such as ``identity``, ``gt:3`` or ``eq0``."""
        text = text.strip().lower()
        if text in ("", "identity", "none"):
            return cls("identity")
        if text in ("eq0", "equals_zero"):
            return cls("equals_zero")
        if text.startswith("gt:") or text.startswith("threshold_gt:"):
            return cls("threshold_gt", float(text.split(":", 1)[1]))
        raise ConfigurationError(f"cannot parse processing rule {text!r}")


@dataclass(frozen=True)
class FileFormat:
    """Shape of a delimited interaction file.

    ``separator=None`` splits on any whitespace.  Multi-character separators
    (MovieLens "::") are supported.  Columns beyond ``rating_col`` (e.g.
    timestamps) are ignored.
    """

    separator: str | None = None
    has_header: bool = False
    user_col: int = 0
    item_col: int = 1
    rating_col: int | None = 2


@dataclass
class InteractionDataset:
    """Complete binary interaction matrix with stable id maps."""

    interactions: sp.csr_matrix
    user_ids: list[str]
    item_ids: list[str]
    item_labels: list[str] | None = None
    _csc: sp.csc_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.interactions = self.interactions.tocsr()
        self.interactions.data[:] = 1.0
        self.user_index = {u: i for i, u in enumerate(self.user_ids)}
        self.item_index = {v: j for j, v in enumerate(self.item_ids)}

    @property
    def n_users(self) -> int:
        return self.interactions.shape[0]

    @property
    def n_items(self) -> int:
        return self.interactions.shape[1]

    @property
    def n_interactions(self) -> int:
        return self.interactions.nnz

    @property
    def by_columns(self) -> sp.csc_matrix:
        if self._csc is None:
            self._csc = self.interactions.tocsc()
        return self._csc

    def row_items(self, user: int) -> np.ndarray:
        """Column indices the user interacted with."""
        r = self.interactions
        return r.indices[r.indptr[user]:r.indptr[user + 1]]

    def dense_row(self, user: int) -> np.ndarray:
        row = np.zeros(self.n_items)
        row[self.row_items(user)] = 1.0
        return row

    def same_matrix(self, other: "InteractionDataset") -> bool:
        if self.interactions.shape != other.interactions.shape:
            return False
        return (self.interactions != other.interactions).nnz == 0

    def __repr__(self):
        return (f"InteractionDataset({self.n_users} users, {self.n_items} items, "
                f"{self.n_interactions} interactions)")


def _iter_rows(path: Path, fmt: FileFormat):
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            if fmt.has_header and lineno == 1:
                continue
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split(fmt.separator)
            yield lineno, parts


def load_interactions(path, fmt: FileFormat | None = None,
                      rule: ProcessingRule | None = None,
                      labels_path=None) -> InteractionDataset:
    """Load a delimited interaction file into a binary dataset.

    Rows failing the processing rule are dropped; duplicate (user, item)
    pairs collapse to a single interaction.  Id maps follow first
    occurrence in the file.
    """
    path = Path(path)
    fmt = fmt or FileFormat()
    rule = rule or ProcessingRule()

    users: list[str] = []
    items: list[str] = []
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []

    needed = max(fmt.user_col, fmt.item_col)
    for lineno, parts in _iter_rows(path, fmt):
        if len(parts) <= needed:
            raise DataFormatError(path, lineno,
                                  f"expected at least {needed + 1} columns, got {len(parts)}")
        user = parts[fmt.user_col].strip()
        item = parts[fmt.item_col].strip()
        rating = None
        if rule.needs_rating:
            if fmt.rating_col is None or len(parts) <= fmt.rating_col:
                raise ConfigurationError(
                    f"rule ({rule.describe()}) needs a rating column, "
                    f"but {path} has none at position {fmt.rating_col}")
            try:
                rating = float(parts[fmt.rating_col])
            except ValueError:
                raise DataFormatError(path, lineno,
                                      f"rating {parts[fmt.rating_col]!r} is not numeric")
        if not rule.accepts(rating):
            continue
        u = user_index.setdefault(user, len(users))
        if u == len(users):
            users.append(user)
        v = item_index.setdefault(item, len(items))
        if v == len(items):
            items.append(item)
        rows.append(u)
        cols.append(v)

    mat = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                        shape=(len(users), len(items)))
    mat.sum_duplicates()
    ds = InteractionDataset(mat, users, items)
    if labels_path is not None:
        attach_labels(ds, labels_path, fmt.separator)
    return ds


def attach_labels(ds: InteractionDataset, path, separator: str | None = "::") -> None:
    """Attach display names from a (item_id, label) delimited file."""
    labels = [str(v) for v in ds.item_ids]
    found = 0
    path = Path(path)
    fmt = FileFormat(separator=separator, rating_col=None)
    for lineno, parts in _iter_rows(path, fmt):
        if len(parts) < 2:
            raise DataFormatError(path, lineno, "expected item_id and label columns")
        item = parts[0].strip()
        j = ds.item_index.get(item)
        if j is not None:
            labels[j] = parts[1].strip()
            found += 1
    ds.item_labels = labels


def save_interactions(ds: InteractionDataset, path) -> None:
    """Write the canonical tab-separated form, one interaction per line."""
    with open(path, "w", encoding="utf-8") as fh:
        coo = ds.interactions.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for i, j in zip(coo.row[order], coo.col[order]):
            fh.write(f"{ds.user_ids[i]}\t{ds.item_ids[j]}\n")


def filter_dataset(ds: InteractionDataset, min_users_per_item: int,
                   min_items_per_user: int) -> InteractionDataset:
    """Single filtering pass: items first, then users.

    Keeps columns with at least ``min_users_per_item`` ones, then rows with
    at least ``min_items_per_user`` ones among the kept columns.  Not
    iterated to a fixpoint.  Id maps are re-indexed densely, preserving
    order.
    """
    if min_users_per_item < 0 or min_items_per_user < 0:
        raise ConfigurationError("filter thresholds must be >= 0")
    mat = ds.interactions
    col_counts = np.asarray(mat.sum(axis=0)).ravel()
    keep_items = np.flatnonzero(col_counts >= min_users_per_item)
    mat = mat[:, keep_items].tocsr()
    row_counts = np.asarray(mat.sum(axis=1)).ravel()
    keep_users = np.flatnonzero(row_counts >= min_items_per_user)
    mat = mat[keep_users, :]

    labels = None
    if ds.item_labels is not None:
        labels = [ds.item_labels[j] for j in keep_items]
    return InteractionDataset(
        mat.tocsr(),
        [ds.user_ids[i] for i in keep_users],
        [ds.item_ids[j] for j in keep_items],
        item_labels=labels,
    )


def subset_users(ds: InteractionDataset, user_rows: np.ndarray) -> InteractionDataset:
    """Dataset restricted to the given user rows; the item space is kept."""
    user_rows = np.asarray(user_rows, dtype=int)
    mat = ds.interactions[user_rows, :].tocsr()
    return InteractionDataset(mat, [ds.user_ids[i] for i in user_rows],
                              list(ds.item_ids), item_labels=ds.item_labels)


def append_user_row(ds: InteractionDataset, items, user_id: str = "__probe__") -> InteractionDataset:
    """Dataset with one extra user holding the given items (fold-in helper)."""
    items = np.asarray(sorted(set(int(j) for j in items)), dtype=int)
    extra = sp.csr_matrix((np.ones(items.size), (np.zeros(items.size, dtype=int), items)),
                          shape=(1, ds.n_items))
    mat = sp.vstack([ds.interactions, extra]).tocsr()
    return InteractionDataset(mat, list(ds.user_ids) + [user_id], list(ds.item_ids),
                              item_labels=ds.item_labels)


def from_dense(dense, user_ids=None, item_ids=None, item_labels=None) -> InteractionDataset:
    """Build a dataset from a dense 0/1 array (test and toy-data helper)."""
    dense = np.asarray(dense)
    n, m = dense.shape
    users = user_ids if user_ids is not None else [str(i) for i in range(n)]
    items = item_ids if item_ids is not None else [str(j) for j in range(m)]
    return InteractionDataset(sp.csr_matrix(dense.astype(float)), list(users),
                              list(items), item_labels=item_labels)
