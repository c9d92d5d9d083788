"""Model registry: build any recommender from a family name plus parameters.

Spec strings look like ``mvn``, ``mvn:variant=observed``, ``knn:k=256``,
``mf-ls:d=64,reg=0.1``.  Unknown keys raise instead of being ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import PopularityRecommender, RandomRecommender
from .errors import ConfigurationError
from .knn import KnnRecommender
from .mf import BprRecommender, LeastSquaresRecommender, LogisticRecommender
from .mvn import MvnRecommender

FAMILIES = ("random", "popularity", "mvn", "knn", "mf-ls", "mf-bpr", "mf-log")

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(value: str):
    low = value.strip().lower()
    if low in _BOOL:
        return _BOOL[low]
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value.strip()


@dataclass(frozen=True)
class ModelSpec:
    """A buildable model description; hashable so sweeps can key on it."""

    family: str
    params: tuple = field(default_factory=tuple)  # sorted (key, value) pairs

    @classmethod
    def make(cls, family: str, **params) -> "ModelSpec":
        if family not in FAMILIES:
            raise ConfigurationError(
                f"unknown model family {family!r}; choose from {', '.join(FAMILIES)}")
        return cls(family, tuple(sorted(params.items())))

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        text = text.strip()
        family, _, rest = text.partition(":")
        params = {}
        if rest:
            for pair in rest.split(","):
                key, sep, value = pair.partition("=")
                if not sep:
                    raise ConfigurationError(f"bad model parameter {pair!r} in {text!r}")
                params[key.strip()] = _coerce(value)
        return cls.make(family.strip().lower(), **params)

    def with_params(self, **overrides) -> "ModelSpec":
        merged = dict(self.params)
        merged.update(overrides)
        return ModelSpec.make(self.family, **merged)

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.family}:{inner}"

    def variant(self) -> str:
        """Missing/observed scoring style, for report columns."""
        p = self.param_dict
        if self.family == "knn":
            return "observed" if p.get("normalized", False) else "missing"
        if self.family in ("mvn", "mf-ls"):
            return p.get("variant", "missing")
        return "-"

    def build(self, rng_seed: int = 0):
        """Instantiate a fresh unfitted recommender.

        ``rng_seed`` seeds stochastic models unless the spec pins its own.
        """
        p = self.param_dict
        seed = p.pop("rng_seed", rng_seed)
        try:
            if self.family == "random":
                return RandomRecommender(rng_seed=seed, **p)
            if self.family == "popularity":
                return PopularityRecommender(**p)
            if self.family == "mvn":
                return MvnRecommender(**p)
            if self.family == "knn":
                return KnnRecommender(**p)
            if self.family == "mf-ls":
                return LeastSquaresRecommender(rng_seed=seed, **p)
            if self.family == "mf-bpr":
                return BprRecommender(rng_seed=seed, **p)
            if self.family == "mf-log":
                return LogisticRecommender(rng_seed=seed, **p)
        except TypeError as exc:
            raise ConfigurationError(f"bad parameters for {self.family}: {exc}") from exc
        raise ConfigurationError(f"unknown model family {self.family!r}")
