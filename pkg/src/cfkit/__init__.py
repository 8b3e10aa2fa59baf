"""Collaborative filtering experimentation kit.

Sparse rating data handling, factorization models (truncated SVD, ALS,
FunkSVD), Bayesian factorization machines with regression and ordered probit
heads, similarity-based neighborhood models with stochastic similarity
reinforcement, linear blending of base models, and a batch CLI.
"""

from .blending import (
    BlendDataset,
    BlendModel,
    LinearBlender,
    blend_base_predictions,
    blend_predict,
    fit_blender,
    make_blend_dataset,
    read_blend_csv,
    write_blend_csv,
)
from .data import (
    DataSplit,
    NormalizationState,
    PredictionSet,
    RatingMatrix,
    load_ratings,
    normalize_ratings,
    read_predictions,
    read_query_pairs,
    rmse,
    rmse_values,
    split_ratings,
    submission_text,
    write_submission,
)
from .errors import (
    CfkitError,
    ConfigError,
    DuplicateRatingError,
    NumericError,
    ParseError,
    RatingRangeError,
)
from .factorization import (
    ALS,
    AlsConfig,
    FactorModel,
    FunkConfig,
    FunkSVD,
    SVDBaseline,
    als_train,
    funk_train,
    load_factor_model,
    save_factor_model,
    svd_baseline,
    truncated_svd,
)
from .fm import (
    BayesianFM,
    FeatureMatrix,
    FeatureSchema,
    FMModel,
    GibbsResult,
    GibbsRun,
    bfm_fit_ordered_probit,
    bfm_fit_regression,
    build_features,
    build_features_for_pairs,
    fm_predict,
    fm_predict_batch,
    probit_category_probs,
    probit_expected_rating,
)
from .presets import (
    blend_preset_names,
    canonical_name,
    is_blend_preset,
    model_preset_names,
    resolve_blend,
    resolve_preset,
)
from .scsr import (
    ReinforcedSimilarities,
    ScsrConfig,
    StochasticCSR,
    csr_update_reference,
    pair_weight,
    scsr_train,
    to_unit_ratings,
)
from .similarity import (
    SimilarityConfig,
    SimilarityKNN,
    SimilarityMatrix,
    apply_weighting,
    compute_similarity,
    default_beta,
    predict_combined,
    predict_knn,
    predict_knn_many,
)

__version__ = "0.1.0"

__all__ = [
    "ALS",
    "AlsConfig",
    "BayesianFM",
    "BlendDataset",
    "BlendModel",
    "CfkitError",
    "ConfigError",
    "DataSplit",
    "DuplicateRatingError",
    "FMModel",
    "FactorModel",
    "FeatureMatrix",
    "FeatureSchema",
    "FunkConfig",
    "FunkSVD",
    "GibbsResult",
    "GibbsRun",
    "LinearBlender",
    "NormalizationState",
    "NumericError",
    "ParseError",
    "PredictionSet",
    "RatingMatrix",
    "RatingRangeError",
    "ReinforcedSimilarities",
    "SVDBaseline",
    "ScsrConfig",
    "SimilarityConfig",
    "SimilarityKNN",
    "SimilarityMatrix",
    "StochasticCSR",
    "als_train",
    "apply_weighting",
    "bfm_fit_ordered_probit",
    "bfm_fit_regression",
    "blend_base_predictions",
    "blend_predict",
    "blend_preset_names",
    "build_features",
    "build_features_for_pairs",
    "canonical_name",
    "compute_similarity",
    "csr_update_reference",
    "default_beta",
    "fit_blender",
    "fm_predict",
    "fm_predict_batch",
    "funk_train",
    "is_blend_preset",
    "load_factor_model",
    "load_ratings",
    "make_blend_dataset",
    "model_preset_names",
    "normalize_ratings",
    "pair_weight",
    "predict_combined",
    "predict_knn",
    "predict_knn_many",
    "probit_category_probs",
    "probit_expected_rating",
    "read_blend_csv",
    "read_predictions",
    "read_query_pairs",
    "resolve_blend",
    "resolve_preset",
    "rmse",
    "rmse_values",
    "save_factor_model",
    "scsr_train",
    "split_ratings",
    "submission_text",
    "svd_baseline",
    "to_unit_ratings",
    "truncated_svd",
    "write_blend_csv",
    "write_submission",
]
