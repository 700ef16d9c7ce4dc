"""Measurement reports over pipeline outputs."""

from .build import ReportInputs, generate_reports
from .reports import (
    BlacklistFeed,
    DomainObservationLog,
    NumberMeta,
    ReportError,
    band_of,
    blacklist_overlap,
    domain_lifetime,
    identify_support_domains,
    lifetime_report,
    load_feeds,
    load_phone_meta,
    observation_logs,
    phone_age_report,
    pollution_by_popularity,
    position_distribution,
    quartiles,
    tld_ranking,
)

__all__ = [
    "BlacklistFeed", "DomainObservationLog", "NumberMeta", "ReportError", "ReportInputs", "band_of",
    "blacklist_overlap", "domain_lifetime", "generate_reports", "identify_support_domains",
    "lifetime_report", "load_feeds", "load_phone_meta", "observation_logs", "phone_age_report",
    "pollution_by_popularity", "position_distribution", "quartiles", "tld_ranking",
]
