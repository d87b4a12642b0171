"""Attribute probing toolkit: Python bindings over the C++ core."""

from ._core import (
    AttrprobeError,
    Attribute,
    ConfigError,
    EmbeddingClient,
    KgStore,
    NormDataset,
    ParseError,
    __version__,
    bootstrap_linreg,
    contextualize,
    f1_score,
    filter_attributes,
    fusion_train,
    is_related,
    load_norms,
    loo_fit_score,
    loo_predictions,
    median,
    normalize,
    parse_fit_csv,
    parse_norms,
    per_attribute_accuracy,
    pluralize,
    porter2_stem,
    run_probe,
    select_subset,
    split_words,
    stem,
    tokenize,
    train_logistic,
)

__all__ = [
    "AttrprobeError",
    "Attribute",
    "ConfigError",
    "EmbeddingClient",
    "KgStore",
    "NormDataset",
    "ParseError",
    "__version__",
    "bootstrap_linreg",
    "contextualize",
    "f1_score",
    "filter_attributes",
    "fusion_train",
    "is_related",
    "load_norms",
    "loo_fit_score",
    "loo_predictions",
    "median",
    "normalize",
    "parse_fit_csv",
    "parse_norms",
    "per_attribute_accuracy",
    "pluralize",
    "porter2_stem",
    "run_probe",
    "select_subset",
    "split_words",
    "stem",
    "tokenize",
    "train_logistic",
]
