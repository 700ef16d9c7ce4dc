"""Campaign discovery: network-level then content-level clustering, and labels."""

from .features import ContentFeatureVector, NetworkFeatureVector, network_features, tfidf_matrix, tfidf_vectors
from .labels import DEFAULT_COMMON_WORDS, CampaignLabel, label_cluster, top_keywords
from .segment import Lexicon, campaign_words, default_lexicon, segment_words, viterbi_segment
from .svd import choose_rank, reduce_svd
from .tree import CAMPAIGN_COLUMNS, Campaign, ClusterParams, ClusterTree, acl, build_tree, ncl
from .xmeans import bic, xmeans

__all__ = [
    "CAMPAIGN_COLUMNS", "DEFAULT_COMMON_WORDS", "Campaign", "CampaignLabel", "ClusterParams", "ClusterTree",
    "ContentFeatureVector", "Lexicon", "NetworkFeatureVector", "acl", "bic", "build_tree", "campaign_words",
    "choose_rank", "default_lexicon", "label_cluster", "ncl", "network_features", "reduce_svd",
    "segment_words", "tfidf_matrix", "tfidf_vectors", "top_keywords", "viterbi_segment", "xmeans",
]
