"""Figure rendering for the CLI report paths.

Each study command writes a PNG next to its CSV.  Figures are a convenience
view; the CSV stays the canonical output, so any rendering failure is
reported but never fatal to the run.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_evaluation(reports: list, path) -> None:
    """Bar chart of mean precision and ndcg per model."""
    labels = [spec.label() for spec, _ in reports]
    prec = [rep.precision for _, rep in reports]
    ndcg = [rep.ndcg for _, rep in reports]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(labels)), 4))
    width = 0.38
    ax.bar([i - width / 2 for i in x], prec, width, label=f"Precision@{reports[0][1].k_precision}")
    ax.bar([i + width / 2 for i in x], ndcg, width, label="nDCG@m")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("metric")
    ax.set_ylim(0, 1)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)


def render_seed_study(rows: list[dict], path) -> None:
    """Precision vs seed size, one curve per model."""
    models = sorted({r["model"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for model in models:
        pts = sorted((r["s"], r["precision"]) for r in rows if r["model"] == model)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=model)
    ax.set_xlabel("seed size s")
    ax.set_ylabel("Precision@20")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)


def render_bench(rows: list[dict], path) -> None:
    """Train/test seconds vs user count, log-log, one curve pair per model."""
    models = sorted({r["model"] for r in rows})
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True)
    for model in models:
        pts = sorted((r["n_users"], r["fit_seconds"], r["score_seconds"])
                     for r in rows if r["model"] == model)
        ns = [p[0] for p in pts]
        axes[0].plot(ns, [p[1] for p in pts], marker="o", label=model)
        axes[1].plot(ns, [p[2] for p in pts], marker="o", label=model)
    for ax, title in zip(axes, ("train seconds", "test seconds")):
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("users")
        ax.set_title(title)
        ax.grid(alpha=0.3, which="both")
    axes[0].legend(fontsize=8)
    _save(fig, path)


def render_sweep(tables: list, path, param: str | None = None) -> None:
    """Validation precision over the swept grid, one curve per fold.

    ``param`` names the grid axis to plot against; multi-parameter grids
    fall back to the combination index.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    log_x = False
    for fold, table in tables:
        if param is not None:
            xs = [combo.param_dict.get(param, 0) for combo, _ in table]
            log_x = all(isinstance(x, (int, float)) and x > 0 for x in xs)
        else:
            xs = list(range(len(table)))
        ys = [prec for _, prec in table]
        ax.plot(xs, ys, marker=".", label=f"fold {fold}")
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(param or "grid combination")
    ax.set_ylabel("validation Precision@20")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)
