import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvnrec.core import PopularityRecommender, RandomRecommender, top_n
from mvnrec.dataset import from_dense
from mvnrec.errors import NotFittedError


def test_top_n_sorts_and_excludes():
    rec = top_n(np.array([0.9, 0.1, 0.8]), {0}, 2)
    assert list(rec.items) == [2, 1]
    assert list(rec.scores) == [0.8, 0.1]


def test_top_n_zero_length():
    rec = top_n(np.array([1.0, 2.0]), set(), 0)
    assert len(rec) == 0


def test_top_n_tie_break_by_index():
    rec = top_n(np.array([0.5, 0.5, 0.5]), set(), 3)
    assert list(rec.items) == [0, 1, 2]


def test_top_n_caps_at_candidates():
    rec = top_n(np.array([3.0, 2.0, 1.0]), {1}, 10)
    assert list(rec.items) == [0, 2]


def test_top_n_out_of_range_exclude():
    with pytest.raises(IndexError):
        top_n(np.zeros(3), {5}, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_top_n_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal(12)
    exclude = set(rng.choice(12, size=3, replace=False).tolist())
    base = top_n(scores, exclude, 5)
    shifted = top_n(3.0 * scores + 7.0, exclude, 5)
    assert list(base.items) == list(shifted.items)


def test_random_recommender_deterministic(tiny_ds):
    a = RandomRecommender(rng_seed=42).fit(tiny_ds)
    b = RandomRecommender(rng_seed=42).fit(tiny_ds)
    assert np.array_equal(a.score_user([], user_index=3), b.score_user([], user_index=3))
    assert not np.array_equal(a.score_user([], user_index=0), a.score_user([], user_index=1))


def test_random_recommender_unfitted():
    with pytest.raises(NotFittedError):
        RandomRecommender().score_user([])


def test_popularity_column_means():
    ds = from_dense([[1, 0], [1, 1]])
    model = PopularityRecommender().fit(ds)
    assert np.allclose(model.score_user([]), [1.0, 0.5])
    # identical for every user
    assert np.allclose(model.score_user([0], user_index=1), [1.0, 0.5])


def test_popularity_unfitted():
    with pytest.raises(NotFittedError):
        PopularityRecommender().score_user([])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_popularity_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    r = (rng.random((9, 6)) < 0.5).astype(float)
    perm = rng.permutation(6)
    base = PopularityRecommender().fit(from_dense(r)).score_user([])
    permuted = PopularityRecommender().fit(from_dense(r[:, perm])).score_user([])
    assert np.allclose(base[perm], permuted)
