"""Implicit-feedback Top-N recommendation.

The central model ranks a user's unseen items by the conditional mean of a
multivariate normal fitted to the binary interaction matrix; kNN, matrix
factorization, popularity and random baselines share the same contract, and
an evaluation harness reproduces the user-split cross-validation protocol.
"""

from .core import (
    PopularityRecommender,
    RandomRecommender,
    Recommender,
    RecommendationList,
    top_n,
)
from .dataset import (
    FileFormat,
    InteractionDataset,
    ProcessingRule,
    filter_dataset,
    from_dense,
    load_interactions,
    save_interactions,
)
from .evaluation import (
    FoldSplit,
    SweepGrid,
    benchmark_runtime,
    build_train_matrix,
    evaluate_model,
    make_folds,
    seed_size_study,
    sweep,
)
from .knn import KnnRecommender
from .metrics import MetricReport, ndcg_at_k, precision_at_k
from .mf import (
    BprRecommender,
    LeastSquaresRecommender,
    LogisticRecommender,
    MfModel,
    fit_als,
    fit_bpr,
    fit_log,
    refit_user,
)
from .models import ModelSpec
from .mvn import MvnRecommender
from .qualitative import cooccurrence_submatrix, recommend_named
from .stats import (
    ItemStatistics,
    compute_statistics,
    cooccurrence_matrix,
    correlation_matrix,
    covariance_matrix,
    mean_vector,
    shrink_covariance,
    shrink_mean,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
