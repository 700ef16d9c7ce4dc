"""Scam-page categorization: reputation filter, toll-free extraction, Naive
Bayes classification and the aggressive/passive split."""

from .categorize import (
    AGGRESSIVE,
    PASSIVE,
    Categorizer,
    ListingLabel,
    NonTssRules,
    PageCategory,
    ReputationList,
    categorize_aggressiveness,
    categorize_listing,
    filter_reputation,
)
from .naive_bayes import (
    NON_TSS,
    TSS,
    FeatureVector,
    LabelResult,
    Metrics,
    TrainedModel,
    auc_trapezoid,
    classify_page,
    featurize,
    featurize_html,
    read_labeled,
    roc_curve,
    train_classifier,
)
from .phones import TOLL_FREE_PREFIXES, TollFreeNumber, extract_phone_numbers, normalize_phone
