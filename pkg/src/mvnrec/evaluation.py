"""Cross-validation protocol, hyperparameter sweeps, and study drivers.

Folds split users, not interactions: each fold holds out 20% of users whose
rows are reduced to s revealed seed interactions in the training matrix;
their remaining interactions form the test set.  Every reported number is
deterministic given (dataset, rng_seed, model spec).
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import time
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import top_n
from .dataset import InteractionDataset, subset_users
from .errors import ConfigurationError
from .metrics import MetricReport, aggregate_users, ndcg_at_k, precision_at_k
from .models import ModelSpec

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - optional dependency
    threadpool_limits = None


def _thread_guard(threads):
    if threads and threadpool_limits is not None:
        return threadpool_limits(limits=int(threads))
    return nullcontext()


# ---------------------------------------------------------------------------
# fold construction


@dataclass
class FoldSplit:
    """One fold: held-out users with their revealed seed and hidden test items."""

    fold: int
    train_users: np.ndarray
    test_users: np.ndarray
    seed_items: dict
    test_items: dict
    s: int
    rng_seed: int


def make_folds(ds: InteractionDataset, folds: int = 5, s: int = 3,
               rng_seed: int = 0) -> list[FoldSplit]:
    """Partition users into test folds and sample seed interactions.

    Users with at most s interactions contribute everything as seed and end
    up with an empty test set (they are skipped by the metrics).
    """
    if folds < 2:
        raise ConfigurationError(f"need at least 2 folds, got {folds}")
    if folds > ds.n_users:
        raise ConfigurationError(f"{folds} folds exceed {ds.n_users} users")
    if s < 0:
        raise ConfigurationError(f"seed size must be >= 0, got {s}")
    rng = np.random.default_rng(rng_seed)
    groups = np.array_split(rng.permutation(ds.n_users), folds)
    out = []
    all_users = np.arange(ds.n_users)
    for f, group in enumerate(groups):
        test_users = np.sort(group)
        train_users = np.setdiff1d(all_users, test_users)
        seeds = {}
        tests = {}
        for u in test_users:
            items = ds.row_items(u)
            take = min(s, items.size)
            chosen = np.sort(rng.choice(items, size=take, replace=False))
            seeds[int(u)] = chosen
            tests[int(u)] = np.setdiff1d(items, chosen)
        out.append(FoldSplit(f, train_users, test_users, seeds, tests, s, rng_seed))
    return out


def build_train_matrix(ds: InteractionDataset, split: FoldSplit) -> InteractionDataset:
    """Training view: full rows for train users, seed-only rows for test users."""
    mat = ds.interactions
    keep = np.ones(mat.nnz, dtype=bool)
    for u in split.test_users:
        lo, hi = mat.indptr[u], mat.indptr[u + 1]
        keep[lo:hi] = np.isin(mat.indices[lo:hi], split.seed_items[int(u)])
    coo = mat.tocoo()
    pruned = sp.csr_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=mat.shape)
    return InteractionDataset(pruned, list(ds.user_ids), list(ds.item_ids),
                              item_labels=ds.item_labels)


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class FoldResult:
    fold: int
    metrics: MetricReport
    fit_seconds: float
    score_seconds: float


@dataclass
class EvalReport:
    spec: ModelSpec
    k_precision: int
    k_ndcg: int
    fold_results: list = field(default_factory=list)

    @property
    def precision(self) -> float:
        return float(np.mean([r.metrics.precision for r in self.fold_results]))

    @property
    def ndcg(self) -> float:
        return float(np.mean([r.metrics.ndcg for r in self.fold_results]))


def _score_fold(model, ds, split, k_prec, k_ndcg):
    """Metric vectors over one fold's evaluable test users."""
    users = [int(u) for u in split.test_users if split.test_items[int(u)].size > 0]
    seeds = [split.seed_items[u] for u in users]
    rows = np.zeros((len(users), ds.n_items))
    for i, seed in enumerate(seeds):
        rows[i, seed] = 1.0
    score_fn = getattr(model, "score_users", None)
    if score_fn is not None:
        all_scores = score_fn(seeds, rows, users)
    else:
        all_scores = (model.score_user(seed, full_row=rows[i], user_index=u)
                      for i, (u, seed) in enumerate(zip(users, seeds)))
    precisions = []
    ndcgs = []
    for (u, seed), scores in zip(zip(users, seeds), all_scores):
        rec = top_n(scores, seed, ds.n_items)
        test = split.test_items[u]
        precisions.append(precision_at_k(rec, test, k_prec))
        value = ndcg_at_k(rec, test, k_ndcg)
        ndcgs.append(value)
    return precisions, ndcgs


def evaluate_model(spec: ModelSpec, ds: InteractionDataset, folds: list[FoldSplit],
                   k_prec: int = 20, k_ndcg: int | None = None, rng_seed: int = 0,
                   threads: int | None = None, keep_per_user: bool = False) -> EvalReport:
    """Fit on each fold's training matrix and score its held-out users.

    Models that predict from missing non-interactions receive the seed set;
    observed-variant models receive the full training row (seed plus zeros).
    The recommendation list always excludes the seed items.
    """
    k_ndcg = ds.n_items if k_ndcg is None else k_ndcg
    report = EvalReport(spec, k_prec, k_ndcg)
    for split in folds:
        train = build_train_matrix(ds, split)
        model = spec.build(rng_seed=rng_seed + split.fold)
        with _thread_guard(threads):
            t0 = time.perf_counter()
            model.fit(train)
            t1 = time.perf_counter()
            precisions, ndcgs = _score_fold(model, ds, split, k_prec, k_ndcg)
            t2 = time.perf_counter()
        metrics = aggregate_users(precisions, ndcgs, k_prec, k_ndcg, keep_per_user)
        report.fold_results.append(FoldResult(split.fold, metrics, t1 - t0, t2 - t1))
    return report


# ---------------------------------------------------------------------------
# hyperparameter sweep


def lambda_grid(start: float = -5.0, stop: float = 5.0, step: float = 0.25) -> list[float]:
    """The exponential regularization grid 10^start .. 10^stop."""
    exponents = np.arange(start, stop + step / 2, step)
    return [float(10.0 ** e) for e in exponents]


def neighbourhood_grid(m: int) -> list[int]:
    """Powers of two 1, 2, 4, ... capped at and including m."""
    out = []
    k = 1
    while k < m:
        out.append(k)
        k *= 2
    out.append(m)
    return out


def default_grid(family: str, m: int) -> dict:
    if family == "knn":
        return {"k": neighbourhood_grid(m)}
    if family == "mvn":
        return {"ridge": lambda_grid()}
    if family in ("mf-ls", "mf-bpr", "mf-log"):
        return {"d": [256], "reg": lambda_grid()}
    return {}


@dataclass
class SweepGrid:
    """Cartesian parameter grid over a base model spec."""

    base: ModelSpec
    grid: dict

    def combinations(self) -> list[ModelSpec]:
        if not self.grid:
            return [self.base]
        keys = list(self.grid.keys())
        combos = []
        for values in itertools.product(*(self.grid[k] for k in keys)):
            combos.append(self.base.with_params(**dict(zip(keys, values))))
        return combos


@dataclass
class SweepFoldOutcome:
    fold: int
    best: ModelSpec
    validation_precision: float
    test_result: FoldResult
    validation_table: list = field(default_factory=list)


@dataclass
class SweepReport:
    grid: SweepGrid
    k_precision: int
    k_ndcg: int
    outcomes: list = field(default_factory=list)

    @property
    def precision(self) -> float:
        return float(np.mean([o.test_result.metrics.precision for o in self.outcomes]))

    @property
    def ndcg(self) -> float:
        return float(np.mean([o.test_result.metrics.ndcg for o in self.outcomes]))


def _validation_split(ds: InteractionDataset, split: FoldSplit,
                      validation_fraction: float, rng_seed: int) -> FoldSplit:
    """Carve validation users out of one fold's training users."""
    rng = np.random.default_rng((rng_seed, 7, split.fold))
    train_users = split.train_users
    n_val = max(1, int(round(validation_fraction * train_users.size)))
    val_users = np.sort(rng.choice(train_users, size=n_val, replace=False))
    seeds = {}
    tests = {}
    for u in val_users:
        items = ds.row_items(u)
        take = min(split.s, items.size)
        chosen = np.sort(rng.choice(items, size=take, replace=False))
        seeds[int(u)] = chosen
        tests[int(u)] = np.setdiff1d(items, chosen)
    inner_train = np.setdiff1d(train_users, val_users)
    return FoldSplit(split.fold, inner_train, val_users, seeds, tests,
                     split.s, rng_seed)


def sweep(grid: SweepGrid, ds: InteractionDataset, folds: list[FoldSplit],
          k_prec: int = 20, k_ndcg: int | None = None, rng_seed: int = 0,
          validation_fraction: float = 0.2, threads: int | None = None) -> SweepReport:
    """Pick hyperparameters on a validation slice, refit, evaluate on the fold.

    Per fold, 20% of the training users become validation users (reduced to
    seed rows in the inner training matrix).  The combination maximizing
    validation precision is refit on the whole training matrix and scored
    on the fold's test users.  Ties keep the earliest grid entry.
    """
    k_ndcg = ds.n_items if k_ndcg is None else k_ndcg
    report = SweepReport(grid, k_prec, k_ndcg)
    combos = grid.combinations()
    if not combos:
        raise ConfigurationError("empty sweep grid")
    for split in folds:
        outer_train = build_train_matrix(ds, split)
        val_split = _validation_split(outer_train, split, validation_fraction, rng_seed)
        inner_train = build_train_matrix(outer_train, val_split)
        best_spec = None
        best_prec = -1.0
        table = []
        for combo in combos:
            model = combo.build(rng_seed=rng_seed + split.fold)
            with _thread_guard(threads):
                model.fit(inner_train)
                precisions, _ = _score_fold(model, outer_train, val_split,
                                            k_prec, k_ndcg)
            prec = float(np.mean(precisions)) if precisions else 0.0
            table.append((combo, prec))
            if prec > best_prec:
                best_prec = prec
                best_spec = combo
        model = best_spec.build(rng_seed=rng_seed + split.fold)
        with _thread_guard(threads):
            t0 = time.perf_counter()
            model.fit(outer_train)
            t1 = time.perf_counter()
            precisions, ndcgs = _score_fold(model, ds, split, k_prec, k_ndcg)
            t2 = time.perf_counter()
        metrics = aggregate_users(precisions, ndcgs, k_prec, k_ndcg)
        report.outcomes.append(SweepFoldOutcome(
            split.fold, best_spec, best_prec,
            FoldResult(split.fold, metrics, t1 - t0, t2 - t1), table))
    return report


# ---------------------------------------------------------------------------
# studies


def seed_size_study(ds: InteractionDataset, specs: list[ModelSpec],
                    s_values=range(0, 11), folds: int = 5, rng_seed: int = 0,
                    k_prec: int = 20, threads: int | None = None) -> list[dict]:
    """Precision as a function of the revealed seed size.

    The user partition is identical across s values (same rng_seed), so the
    curves differ only in how much of each test user is revealed.
    """
    rows = []
    for s in s_values:
        fold_splits = make_folds(ds, folds, int(s), rng_seed)
        for spec in specs:
            rep = evaluate_model(spec, ds, fold_splits, k_prec=k_prec,
                                 rng_seed=rng_seed, threads=threads)
            rows.append({
                "model": spec.label(),
                "variant": spec.variant(),
                "s": int(s),
                "precision": rep.precision,
                "ndcg": rep.ndcg,
            })
    return rows


def benchmark_runtime(ds: InteractionDataset, specs: list[ModelSpec],
                      user_counts: list[int], rng_seed: int = 0, s: int = 3,
                      k_prec: int = 20, threads: int | None = None) -> list[dict]:
    """Wall-clock fit/score timing on random user subsamples.

    Timing covers the fit and score calls only; one 80/20 split per subsample.
    """
    rows = []
    rng = np.random.default_rng((rng_seed, 11))
    for count in user_counts:
        count = int(count)
        if count < 1:
            raise ConfigurationError(f"subsample size must be >= 1, got {count}")
        if count > ds.n_users:
            raise ConfigurationError(
                f"subsample size {count} exceeds {ds.n_users} users")
        sample = np.sort(rng.choice(ds.n_users, size=count, replace=False))
        sub = subset_users(ds, sample)
        split = make_folds(sub, min(5, max(2, count)), s, rng_seed)[0]
        for spec in specs:
            rep = evaluate_model(spec, sub, [split], k_prec=k_prec,
                                 rng_seed=rng_seed, threads=threads)
            fold = rep.fold_results[0]
            rows.append({
                "model": spec.label(),
                "n_users": count,
                "fit_seconds": fold.fit_seconds,
                "score_seconds": fold.score_seconds,
                "precision": rep.precision,
            })
    return rows


# ---------------------------------------------------------------------------
# tabular output


def format_float(x: float) -> str:
    return f"{x:.6f}"


def eval_csv_rows(dataset_name: str, spec: ModelSpec, report: EvalReport) -> list[list]:
    """Rows of the canonical result schema, one per fold plus the mean."""
    hyper = ";".join(f"{k}={v}" for k, v in spec.params) or "-"
    rows = []
    for fr in report.fold_results:
        rows.append([dataset_name, spec.family, spec.variant(), hyper, str(fr.fold),
                     format_float(fr.metrics.precision), format_float(fr.metrics.ndcg),
                     f"{fr.fit_seconds:.3f}", f"{fr.score_seconds:.3f}"])
    total_fit = sum(fr.fit_seconds for fr in report.fold_results)
    total_score = sum(fr.score_seconds for fr in report.fold_results)
    rows.append([dataset_name, spec.family, spec.variant(), hyper, "mean",
                 format_float(report.precision), format_float(report.ndcg),
                 f"{total_fit:.3f}", f"{total_score:.3f}"])
    return rows


EVAL_CSV_HEADER = ["dataset", "model", "variant", "hyperparameters", "fold",
                   "precision_at_20", "ndcg_at_m", "fit_seconds", "score_seconds"]


def write_csv(path, header: list[str], rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([str(c) for c in row])


def dataset_checksum(ds: InteractionDataset) -> str:
    """Checksum of the canonical interaction listing, for run manifests."""
    digest = hashlib.sha256()
    coo = ds.interactions.tocoo()
    order = np.lexsort((coo.col, coo.row))
    digest.update(np.stack([coo.row[order], coo.col[order]]).tobytes())
    digest.update(f"{ds.n_users}x{ds.n_items}".encode())
    return digest.hexdigest()


def write_manifest(path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")
