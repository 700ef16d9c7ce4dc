"""Search-listing ingestion: SERP parsing, redirect tracking, page capture, DNS."""

from .capture import SnapshotConflict, SnapshotStore, capture_page, snapshot_chain
from .cloaking import CloakingReport, detect_cloaking
from .crawl import CrawlResult, SerpFixtures, TrackedListing, crawl, read_listings, read_tracked
from .dns import FixtureResolver, ResolveResult, SystemResolver, resolve_domain
from .fetch import FetchError, Fetcher, FixtureFetcher, FixtureMiss, LiveFetcher, RateLimiter
from .models import (
    AD,
    SR,
    DnsObservation,
    FetcherConfig,
    Hop,
    ListingRecord,
    PageSnapshot,
    Query,
    RedirectChain,
)
from .serp import EngineDescriptor, default_engines, load_engines, parse_serp
from .tracker import track_listing, track_uri, tracking_start

__all__ = [
    "AD", "SR", "CloakingReport", "CrawlResult", "DnsObservation", "EngineDescriptor",
    "FetchError", "Fetcher", "FetcherConfig", "FixtureFetcher", "FixtureMiss", "FixtureResolver",
    "Hop", "ListingRecord", "LiveFetcher", "PageSnapshot", "Query", "RateLimiter", "RedirectChain",
    "ResolveResult", "SerpFixtures", "SnapshotConflict", "SnapshotStore", "SystemResolver",
    "TrackedListing", "capture_page", "crawl", "default_engines", "detect_cloaking", "load_engines",
    "parse_serp", "read_listings", "read_tracked", "resolve_domain", "snapshot_chain",
    "track_listing", "track_uri", "tracking_start",
]
