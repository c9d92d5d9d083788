"""Run configuration: plain key=value files with command-line overrides.

Every command writes its fully-resolved configuration next to its results,
so a run can be reproduced from the output directory alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .dataset import FileFormat, ProcessingRule
from .errors import ConfigurationError

THREADS_ENV = "MVNREC_THREADS"


@dataclass
class RunConfig:
    dataset: str | None = None
    labels: str | None = None
    separator: str | None = None       # literal separator; "tab" and "ws" accepted
    header: bool = False
    rule: str = "identity"
    user_col: int = 0
    item_col: int = 1
    rating_col: int = 2
    model: str = "mvn"
    models: str | None = None          # ';'-separated list for multi-model commands
    folds: int = 5
    seed_size: int = 3
    rng_seed: int = 0
    k_precision: int = 20
    k_ndcg: int | None = None
    min_users_per_item: int = 0
    min_items_per_user: int = 0
    out: str = "results"
    threads: int | None = None
    figures: bool = True
    grid_param: str | None = None      # sweep: parameter to vary
    grid_values: str | None = None     # sweep: comma list; default per family
    s_values: str = "0,1,2,3,4,5,6,7,8,9,10"
    user_counts: str | None = None     # bench subsample sizes
    seed_labels: str | None = None     # recommend: "|"-separated item names
    bias_mode: str = "item_bias"
    top_n: int = 20

    def __post_init__(self):
        if self.threads is None:
            env = os.environ.get(THREADS_ENV)
            if env:
                self.threads = int(env)

    @property
    def file_format(self) -> FileFormat:
        sep = self.separator
        if sep in (None, "", "ws", "whitespace"):
            sep = None
        elif sep == "tab":
            sep = "\t"
        return FileFormat(separator=sep, has_header=self.header,
                          user_col=self.user_col, item_col=self.item_col,
                          rating_col=self.rating_col)

    @property
    def processing_rule(self) -> ProcessingRule:
        return ProcessingRule.parse(self.rule)

    def model_list(self) -> list[str]:
        if self.models:
            return [m.strip() for m in self.models.split(";") if m.strip()]
        return [self.model]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL_FIELDS = {"header", "figures"}
_INT_FIELDS = {"user_col", "item_col", "rating_col", "folds", "seed_size",
               "rng_seed", "k_precision", "k_ndcg", "min_users_per_item",
               "min_items_per_user", "threads", "top_n"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_FIELDS:
        return raw.lower() in ("1", "true", "yes", "on")
    if key in _INT_FIELDS:
        return int(raw)
    return raw


def load_config(path) -> dict:
    """Read a key=value file; '#' starts a comment, blank lines are skipped."""
    values = {}
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def resolve_config(file_values: dict, overrides: dict) -> RunConfig:
    """Merge config-file values with non-None command-line overrides."""
    merged = dict(file_values)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return RunConfig(**merged)


def write_resolved(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in fields(RunConfig):
            value = getattr(config, f.name)
            if value is None:
                continue
            fh.write(f"{f.name} = {value}\n")
