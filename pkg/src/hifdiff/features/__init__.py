"""Windowed feature extraction and information-gain selection."""

from .catalog import (
    CATALOG_VERSION,
    FeatureVector,
    InvalidWindowError,
    extract_features,
    feature_names,
)
from .selection import (
    FeatureRanking,
    FeatureTable,
    entropy_bits,
    information_gain,
    rank_features,
    select_top,
)
from .wavelet import CwtResult, WaveletParams, cwt, discrete_mean, mexican_hat

__all__ = [
    "CATALOG_VERSION",
    "CwtResult",
    "FeatureRanking",
    "FeatureTable",
    "FeatureVector",
    "InvalidWindowError",
    "WaveletParams",
    "cwt",
    "discrete_mean",
    "entropy_bits",
    "extract_features",
    "feature_names",
    "information_gain",
    "mexican_hat",
    "rank_features",
    "select_top",
]
