import os
from pathlib import Path

import numpy as np
import pytest

from mvnrec.dataset import from_dense

# Real datasets are optional: place MovieLens files under $MVNREC_DATA or
# <repo>/data (see README) to enable the full-scale benchmark tests.
DATA_DIR = Path(os.environ.get("MVNREC_DATA", Path(__file__).resolve().parent.parent / "data"))

ML100K = DATA_DIR / "ml-100k" / "u.data"
ML1M_RATINGS = DATA_DIR / "ml-1m" / "ratings.dat"
ML1M_MOVIES = DATA_DIR / "ml-1m" / "movies.dat"

requires_ml100k = pytest.mark.skipif(
    not ML100K.exists(),
    reason=f"ml-100k not available (expected at {ML100K}); see README for placement")
requires_ml1m = pytest.mark.skipif(
    not ML1M_RATINGS.exists(),
    reason=f"ml-1m not available (expected at {ML1M_RATINGS}); see README for placement")


def make_clustered(n_users=200, n_items=40, rng_seed=7):
    """Two taste groups with shared popular items; enough signal that
    similarity-based models clearly beat popularity ranking."""
    rng = np.random.default_rng(rng_seed)
    half_u = n_users // 2
    pool = n_items // 2
    probs = np.full((n_users, n_items), 0.03)
    probs[:half_u, :pool] = 0.55
    probs[half_u:, pool:] = 0.55
    probs[:, :4] = 0.65  # globally popular head items
    r = (rng.random((n_users, n_items)) < probs).astype(float)
    # no empty rows: give everyone at least two in-group items
    for u in range(n_users):
        own = np.arange(0, pool) if u < half_u else np.arange(pool, n_items)
        r[u, rng.choice(own, size=2, replace=False)] = 1.0
    return from_dense(r)


@pytest.fixture(scope="session")
def clustered_ds():
    return make_clustered()


@pytest.fixture
def tiny_ds():
    return from_dense([[1, 0], [0, 1]])


# Worked three-movie example: co-occurrence fractions and means for
# (Terminator 2, Toy Story, The Terminator) in MovieLens 1M.
MOVIE_F = np.array([
    [0.44, 0.21, 0.28],
    [0.21, 0.34, 0.17],
    [0.28, 0.17, 0.35],
])
MOVIE_MU = np.array([0.44, 0.34, 0.35])
MOVIE_SIGMA = MOVIE_F - np.outer(MOVIE_MU, MOVIE_MU)
