"""Passive-DNS expansion of confirmed scam domains."""

from .expand import (
    DEFAULT_LAMBDA,
    AmplificationResult,
    PageOracle,
    PageOracleError,
    TssSets,
    candidates_of,
    expand,
    read_domains,
    read_results,
    summary,
    write_results,
)
from .store import DEFAULT_DELTA, DnsStore, Window, rhdn, rhip

__all__ = [
    "DEFAULT_DELTA", "DEFAULT_LAMBDA", "AmplificationResult", "DnsStore", "PageOracle", "PageOracleError",
    "TssSets", "Window", "candidates_of", "expand", "read_domains", "read_results", "rhdn", "rhip",
    "summary", "write_results",
]
