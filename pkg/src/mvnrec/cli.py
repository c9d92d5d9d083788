"""Command-line entry point.

Subcommands: ingest, evaluate, sweep, seed-study, bench, verify, recommend.
Tabular results are CSV; study commands also render a PNG figure next to the
CSV unless figures are disabled.  Every command writes its resolved
configuration into the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluation, oracles, plots
from .config import RunConfig, load_config, resolve_config, write_resolved
from .dataset import attach_labels, filter_dataset, load_interactions
from .errors import MvnrecError
from .evaluation import (
    EVAL_CSV_HEADER,
    SweepGrid,
    dataset_checksum,
    default_grid,
    eval_csv_rows,
    evaluate_model,
    format_float,
    make_folds,
    write_csv,
    write_manifest,
)
from .models import ModelSpec
from .qualitative import recommend_named


def _add_common(parser):
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--dataset", help="interaction file path")
    parser.add_argument("--labels", help="item label file path")
    parser.add_argument("--separator", help="column separator (literal, 'tab' or 'ws')")
    parser.add_argument("--rule", help="processing rule: identity, gt:<v>, eq0")
    parser.add_argument("--model", help="model spec, e.g. mvn or knn:k=256")
    parser.add_argument("--models", help="';'-separated list of model specs")
    parser.add_argument("--rng-seed", dest="rng_seed", type=int)
    parser.add_argument("--folds", type=int)
    parser.add_argument("--seed-size", dest="seed_size", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--no-figures", dest="figures", action="store_const",
                        const=False, help="skip PNG rendering")
    parser.add_argument("--min-users-per-item", dest="min_users_per_item", type=int)
    parser.add_argument("--min-items-per-user", dest="min_items_per_user", type=int)


def _config_from_args(args) -> RunConfig:
    file_values = load_config(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "func")}
    return resolve_config(file_values, overrides)


def _load_dataset(cfg: RunConfig):
    if not cfg.dataset:
        raise MvnrecError("no dataset path given (--dataset or config)")
    ds = load_interactions(cfg.dataset, cfg.file_format, cfg.processing_rule)
    if cfg.min_users_per_item or cfg.min_items_per_user:
        ds = filter_dataset(ds, cfg.min_users_per_item, cfg.min_items_per_user)
    if cfg.labels:
        attach_labels(ds, cfg.labels, cfg.file_format.separator)
    return ds


def _prepare_out(cfg: RunConfig, command: str) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(cfg, out / f"{command}.config")
    return out


def _manifest(cfg: RunConfig, ds, out: Path, command: str, extra=None):
    entries = {
        "command": command,
        "dataset": cfg.dataset,
        "dataset_checksum": dataset_checksum(ds),
        "users": ds.n_users,
        "items": ds.n_items,
        "interactions": ds.n_interactions,
        "rng_seed": cfg.rng_seed,
        "folds": cfg.folds,
        "seed_size": cfg.seed_size,
    }
    if extra:
        entries.update(extra)
    write_manifest(out / f"{command}.manifest", entries)


def cmd_ingest(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    print(f"{ds.n_users} users, {ds.n_items} items, {ds.n_interactions} interactions")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    out = _prepare_out(cfg, "evaluate")
    folds = make_folds(ds, cfg.folds, cfg.seed_size, cfg.rng_seed)
    name = Path(cfg.dataset).stem
    rows = []
    reports = []
    for text in cfg.model_list():
        spec = ModelSpec.parse(text)
        rep = evaluate_model(spec, ds, folds, k_prec=cfg.k_precision,
                             k_ndcg=cfg.k_ndcg, rng_seed=cfg.rng_seed,
                             threads=cfg.threads)
        reports.append((spec, rep))
        rows.extend(eval_csv_rows(name, spec, rep))
        print(f"{spec.label()}: Precision@{cfg.k_precision} "
              f"{format_float(rep.precision)}, nDCG {format_float(rep.ndcg)}")
    write_csv(out / "evaluate.csv", EVAL_CSV_HEADER, rows)
    _manifest(cfg, ds, out, "evaluate", {"models": ";".join(cfg.model_list())})
    if cfg.figures:
        _render(lambda: plots.render_evaluation(reports, out / "evaluate.png"))
    print(f"wrote {out / 'evaluate.csv'}")
    return 0


def _render(fn):
    try:
        fn()
    except Exception as exc:  # figures are auxiliary to the CSV output
        print(f"figure rendering failed: {exc}", file=sys.stderr)


def _parse_grid_values(text: str):
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        try:
            out.append(int(piece))
        except ValueError:
            out.append(float(piece))
    return out


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    out = _prepare_out(cfg, "sweep")
    folds = make_folds(ds, cfg.folds, cfg.seed_size, cfg.rng_seed)
    spec = ModelSpec.parse(cfg.model)
    if cfg.grid_param and cfg.grid_values:
        grid = {cfg.grid_param: _parse_grid_values(cfg.grid_values)}
    else:
        grid = default_grid(spec.family, ds.n_items)
    sweep_grid = SweepGrid(spec, grid)
    report = evaluation.sweep(sweep_grid, ds, folds, k_prec=cfg.k_precision,
                              k_ndcg=cfg.k_ndcg, rng_seed=cfg.rng_seed,
                              threads=cfg.threads)
    name = Path(cfg.dataset).stem
    rows = []
    for outcome in report.outcomes:
        fr = outcome.test_result
        hyper = ";".join(f"{k}={v}" for k, v in outcome.best.params) or "-"
        rows.append([name, outcome.best.family, outcome.best.variant(), hyper,
                     str(outcome.fold), format_float(fr.metrics.precision),
                     format_float(fr.metrics.ndcg), f"{fr.fit_seconds:.3f}",
                     f"{fr.score_seconds:.3f}"])
    rows.append([name, spec.family, spec.variant(), "selected-per-fold", "mean",
                 format_float(report.precision), format_float(report.ndcg), "", ""])
    write_csv(out / "sweep.csv", EVAL_CSV_HEADER, rows)
    grid_desc = ";".join(f"{k}={v}" for k, v in grid.items())
    _manifest(cfg, ds, out, "sweep", {"model": spec.label(), "grid": grid_desc})
    if cfg.figures:
        param = cfg.grid_param or (list(grid.keys())[0] if grid else None)
        tables = [(o.fold, o.validation_table) for o in report.outcomes]
        _render(lambda: plots.render_sweep(tables, out / "sweep.png", param))
    for outcome in report.outcomes:
        print(f"fold {outcome.fold}: best {outcome.best.label()} "
              f"(validation {format_float(outcome.validation_precision)})")
    print(f"mean test Precision@{cfg.k_precision}: {format_float(report.precision)}")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_seed_study(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    out = _prepare_out(cfg, "seed_study")
    specs = [ModelSpec.parse(t) for t in cfg.model_list()]
    s_values = [int(v) for v in cfg.s_values.split(",")]
    rows = evaluation.seed_size_study(ds, specs, s_values, cfg.folds,
                                      cfg.rng_seed, cfg.k_precision, cfg.threads)
    table = [[r["model"], r["variant"], r["s"], format_float(r["precision"]),
              format_float(r["ndcg"])] for r in rows]
    write_csv(out / "seed_study.csv",
              ["model", "variant", "s", "precision_at_20", "ndcg_at_m"], table)
    _manifest(cfg, ds, out, "seed_study",
              {"models": ";".join(s.label() for s in specs),
               "s_values": cfg.s_values})
    if cfg.figures:
        _render(lambda: plots.render_seed_study(rows, out / "seed_study.png"))
    print(f"wrote {out / 'seed_study.csv'} ({len(rows)} rows)")
    return 0


def cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    out = _prepare_out(cfg, "bench")
    specs = [ModelSpec.parse(t) for t in cfg.model_list()]
    if cfg.user_counts:
        counts = [int(v) for v in cfg.user_counts.split(",")]
    else:
        counts = [n for n in (1000, 2000, 4000, 8000) if n <= ds.n_users] or [ds.n_users]
    rows = evaluation.benchmark_runtime(ds, specs, counts, cfg.rng_seed,
                                        cfg.seed_size, cfg.k_precision, cfg.threads)
    table = [[r["model"], r["n_users"], f"{r['fit_seconds']:.3f}",
              f"{r['score_seconds']:.3f}", format_float(r["precision"])] for r in rows]
    write_csv(out / "bench.csv",
              ["model", "n_users", "fit_seconds", "score_seconds", "precision_at_20"],
              table)
    _manifest(cfg, ds, out, "bench", {"user_counts": ",".join(map(str, counts))})
    if cfg.figures:
        _render(lambda: plots.render_bench(rows, out / "bench.png"))
    print(f"wrote {out / 'bench.csv'} ({len(rows)} rows)")
    return 0


def cmd_verify(args) -> int:
    rng_seed = args.rng_seed if args.rng_seed is not None else 0
    return oracles.main(rng_seed=rng_seed)


def cmd_recommend(args) -> int:
    cfg = _config_from_args(args)
    ds = _load_dataset(cfg)
    if not cfg.seed_labels:
        raise MvnrecError("recommend needs --seed-labels ('|'-separated item names)")
    seed = [s.strip() for s in cfg.seed_labels.split("|") if s.strip()]
    spec = ModelSpec.parse(cfg.model)
    rec = recommend_named(ds, spec, seed, n=cfg.top_n, bias_mode=cfg.bias_mode,
                          rng_seed=cfg.rng_seed)
    print(f"model: {rec.model} ({rec.bias_mode})")
    print(f"seed: {', '.join(rec.seed_labels)}")
    width = max((len(label) for label, _ in rec.items), default=10)
    for rank, (label, score) in enumerate(rec.items, start=1):
        print(f"{rank:3d}  {label:<{width}}  {score:10.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvnrec",
        description="Implicit-feedback Top-N recommendation benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "ingest": (cmd_ingest, "load a dataset and print its size"),
        "evaluate": (cmd_evaluate, "cross-validated metrics for one or more models"),
        "sweep": (cmd_sweep, "validation-set hyperparameter search"),
        "seed-study": (cmd_seed_study, "precision as a function of seed size"),
        "bench": (cmd_bench, "fit/score timings on user subsamples"),
        "verify": (cmd_verify, "run the independent-oracle check suite"),
        "recommend": (cmd_recommend, "labeled Top-N list for a named seed"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=fn)
        if name == "recommend":
            p.add_argument("--seed-labels", dest="seed_labels",
                           help="'|'-separated item display names")
            p.add_argument("--bias-mode", dest="bias_mode",
                           choices=["item_bias", "no_item_bias"])
            p.add_argument("--top-n", dest="top_n", type=int)
        if name == "sweep":
            p.add_argument("--grid-param", dest="grid_param")
            p.add_argument("--grid-values", dest="grid_values",
                           help="comma list of values for --grid-param")
        if name == "seed-study":
            p.add_argument("--s-values", dest="s_values",
                           help="comma list of seed sizes")
        if name == "bench":
            p.add_argument("--user-counts", dest="user_counts",
                           help="comma list of subsample sizes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MvnrecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
