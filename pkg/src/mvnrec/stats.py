"""Item-level moment estimates of the interaction matrix.

Mean, covariance and correlation use maximum-likelihood (1/n) normalization.
Shrinkage interpolates covariance toward an isotropic target and the mean
toward uniform popularity; both preserve the total (trace / sum).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dataset import InteractionDataset
from .errors import CapacityError, DataFormatError, UndefinedStatisticsError

DEFAULT_MAX_ITEMS = 40_000

_MAGIC = b"ISTA"
_VERSION = 1


def check_item_capacity(n_items: int, max_items: int = DEFAULT_MAX_ITEMS) -> None:
    """Refuse dense m*m allocations above the configured cap."""
    if n_items > max_items:
        raise CapacityError(
            f"{n_items} items exceed the dense-matrix cap of {max_items}; "
            f"a dense {n_items}x{n_items} matrix would need "
            f"{n_items * n_items * 8 / 2**30:.1f} GiB")


def mean_vector(ds: InteractionDataset) -> np.ndarray:
    """Per-item interaction fraction (column means)."""
    if ds.n_users == 0:
        raise UndefinedStatisticsError("mean of an empty dataset is undefined")
    return np.asarray(ds.interactions.sum(axis=0)).ravel() / ds.n_users


def cooccurrence_matrix(ds: InteractionDataset,
                        max_items: int = DEFAULT_MAX_ITEMS) -> np.ndarray:
    """Pairwise interaction fractions (1/n) R^T R; diagonal equals the mean."""
    if ds.n_users == 0:
        raise UndefinedStatisticsError("co-occurrence of an empty dataset is undefined")
    check_item_capacity(ds.n_items, max_items)
    r = ds.interactions
    f = (r.T @ r).toarray() / ds.n_users
    return f


def covariance_matrix(ds: InteractionDataset, mu: np.ndarray,
                      max_items: int = DEFAULT_MAX_ITEMS) -> np.ndarray:
    """ML covariance of the item columns: co-occurrence minus the mean outer product."""
    f = cooccurrence_matrix(ds, max_items)
    sigma = f - np.outer(mu, mu)
    # exact symmetry, cheap insurance against float asymmetry in the product
    sigma = (sigma + sigma.T) / 2.0
    return sigma


def correlation_matrix(sigma: np.ndarray) -> np.ndarray:
    """Normalized covariance; zero-variance items get an all-zero row/column."""
    sd = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
    denom = np.outer(sd, sd)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(denom > 0, sigma / denom, 0.0)
    zero = sd == 0
    c[zero, :] = 0.0
    c[:, zero] = 0.0
    return c


def _check_unit_interval(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def shrink_covariance(sigma: np.ndarray, alpha: float) -> np.ndarray:
    """Interpolate toward the isotropic matrix with the same trace."""
    _check_unit_interval(alpha, "alpha")
    m = sigma.shape[0]
    target = np.trace(sigma) / m
    out = (1.0 - alpha) * sigma
    out[np.diag_indices(m)] += alpha * target
    return out


def shrink_mean(mu: np.ndarray, beta: float) -> np.ndarray:
    """Interpolate toward items being equally popular (same total)."""
    _check_unit_interval(beta, "beta")
    return (1.0 - beta) * mu + beta * (mu.sum() / mu.size)


@dataclass
class ItemStatistics:
    """Mean/covariance bundle of a fitted dataset, after any shrinkage."""

    mean: np.ndarray
    covariance: np.ndarray
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def stddev(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def correlation(self) -> np.ndarray:
        return correlation_matrix(self.covariance)

    @property
    def n_items(self) -> int:
        return self.mean.size


def compute_statistics(ds: InteractionDataset, alpha: float = 0.0, beta: float = 0.0,
                       max_items: int = DEFAULT_MAX_ITEMS) -> ItemStatistics:
    _check_unit_interval(alpha, "alpha")
    mu = mean_vector(ds)
    sigma = covariance_matrix(ds, mu, max_items)
    if alpha > 0:
        sigma = shrink_covariance(sigma, alpha)
    mu = shrink_mean(mu, beta)
    return ItemStatistics(mu, sigma, alpha=alpha, beta=beta)


def save_statistics(stats: ItemStatistics, path) -> None:
    """Dump in the versioned little-endian layout: magic, version, m, mu, sd, Sigma."""
    m = stats.n_items
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQ", _VERSION, m))
        fh.write(struct.pack("<dd", stats.alpha, stats.beta))
        fh.write(stats.mean.astype("<f8").tobytes())
        fh.write(stats.stddev.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(stats.covariance, dtype="<f8").tobytes())


def load_statistics(path) -> ItemStatistics:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataFormatError(path, 0, f"bad magic {magic!r}")
        version, m = struct.unpack("<IQ", fh.read(12))
        if version != _VERSION:
            raise DataFormatError(path, 0, f"unsupported version {version}")
        alpha, beta = struct.unpack("<dd", fh.read(16))
        mean = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        fh.read(8 * m)  # stddev is derivable; stored for external readers
        cov = np.frombuffer(fh.read(8 * m * m), dtype="<f8").reshape(m, m).copy()
    return ItemStatistics(mean, cov, alpha=alpha, beta=beta)
