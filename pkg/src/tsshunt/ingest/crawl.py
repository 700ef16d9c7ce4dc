from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Optional

from .capture import SnapshotStore, snapshot_chain
from .dns import resolve_domain, write_observations
from .fetch import FetchError, Fetcher, RateLimiter
from .models import DnsObservation, FetcherConfig, ListingRecord, Query, RedirectChain, format_time, parse_time
from .serp import EngineDescriptor, parse_serp
from .tracker import DEFAULT_AD_NETWORK_HOSTS, DEFAULT_MAX_HOPS, track_listing

log = logging.getLogger(__name__)


class SerpFixtures:
    """Directory of SERP HTML files described by ``manifest.jsonl``
    rows of {"engine", "phrase", "file", "issued_at"}."""

    def __init__(self, root):
        self.root = Path(root)
        self._rows = {}
        with (self.root / "manifest.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    self._rows[(row["engine"], row["phrase"])] = row

    def get(self, engine: str, phrase: str) -> Optional[tuple[bytes, datetime]]:
        row = self._rows.get((engine, phrase))
        if row is None:
            return None
        return (self.root / row["file"]).read_bytes(), parse_time(row["issued_at"])

    def phrases(self) -> list[str]:
        return sorted({p for _, p in self._rows})


@dataclass
class TrackedListing:
    listing: ListingRecord
    chain: RedirectChain
    fetched_at: datetime

    def to_json(self) -> dict:
        return {"listing": self.listing.to_json(), "chain": self.chain.to_json(), "fetched_at": format_time(self.fetched_at)}

    @classmethod
    def from_json(cls, d: dict) -> "TrackedListing":
        return cls(ListingRecord.from_json(d["listing"]), RedirectChain.from_json(d["chain"]), parse_time(d["fetched_at"]))


@dataclass
class CrawlResult:
    listings: list[ListingRecord] = field(default_factory=list)
    tracked: list[TrackedListing] = field(default_factory=list)
    observations: list[DnsObservation] = field(default_factory=list)
    dns_status: dict = field(default_factory=dict)
    skipped: list[tuple[str, str, str]] = field(default_factory=list)

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        (out / "listings").mkdir(parents=True, exist_ok=True)
        (out / "dns").mkdir(parents=True, exist_ok=True)
        paths = {
            "listings": out / "listings" / "listings.jsonl",
            "chains": out / "listings" / "chains.jsonl",
            "dns": out / "dns" / "observations.jsonl",
        }
        with paths["listings"].open("w", encoding="utf-8") as fh:
            for rec in self.listings:
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
        with paths["chains"].open("w", encoding="utf-8") as fh:
            for tr in self.tracked:
                fh.write(json.dumps(tr.to_json(), sort_keys=True) + "\n")
        write_observations(self.observations, paths["dns"])
        return paths


def read_tracked(path) -> list[TrackedListing]:
    with open(path, encoding="utf-8") as fh:
        return [TrackedListing.from_json(json.loads(line)) for line in fh if line.strip()]


def read_listings(path) -> list[ListingRecord]:
    with open(path, encoding="utf-8") as fh:
        return [ListingRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def crawl(
    phrases: Iterable[str],
    engines: dict[str, EngineDescriptor],
    *,
    fetcher: Fetcher,
    resolver,
    store: SnapshotStore,
    config: FetcherConfig,
    serp_fixtures: Optional[SerpFixtures] = None,
    start: Optional[datetime] = None,
    max_hops: int = DEFAULT_MAX_HOPS,
    ad_network_hosts: Iterable[str] = DEFAULT_AD_NETWORK_HOSTS,
    workers: int = 4,
) -> CrawlResult:
    """Query every engine with every phrase, then track, capture and resolve.

    Fixture mode reads SERPs from ``serp_fixtures``; live mode fetches the
    engine's search URL and respects the per-engine daily cap.
    """
    result = CrawlResult()
    limiter = RateLimiter(config.daily_rate_cap)
    start = parse_time(start or datetime(2016, 4, 1))
    ad_hosts = tuple(ad_network_hosts)

    qi = 0
    for phrase in phrases:
        for name in sorted(engines):
            engine = engines[name]
            issued_at = start + timedelta(minutes=qi)
            qi += 1
            if config.mode == "fixture":
                got = serp_fixtures.get(name, phrase) if serp_fixtures else None
                if got is None:
                    result.skipped.append((name, phrase, "no fixture"))
                    continue
                html, issued_at = got
            else:
                if not limiter.acquire(name, issued_at.date()):
                    result.skipped.append((name, phrase, "rate cap"))
                    continue
                try:
                    html = fetcher.fetch(engine.search_url(phrase), referer="", user_agent=config.user_agent).body
                except FetchError as exc:
                    result.skipped.append((name, phrase, str(exc)))
                    continue
            query = Query(phrase, name, issued_at)
            listings = parse_serp(html, engine, query.issued_at, phrase)
            result.listings.extend(listings)

            def work(i_rec):
                i, rec = i_rec
                chain = track_listing(
                    rec, engine.referer, config.user_agent,
                    fetcher=fetcher, max_hops=max_hops, ad_network_hosts=ad_hosts,
                )
                return TrackedListing(rec, chain, query.issued_at + timedelta(seconds=i + 1))

            with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
                tracked = list(pool.map(work, enumerate(listings)))
            for tr in tracked:
                snapshot_chain(tr.chain, store, tr.fetched_at)
                for fqdn in dict.fromkeys(tr.chain.fqdns):
                    res = resolve_domain(fqdn, resolver, tr.fetched_at)
                    result.dns_status[fqdn] = res.status
                    result.observations.extend(res.observations)
            result.tracked.extend(tracked)
    return result
