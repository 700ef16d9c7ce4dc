from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

SR = "SR"
AD = "AD"

ORIGIN = "origin"
HTTP_3XX = "http-3xx"
META_REFRESH = "meta-refresh"
JS_LOCATION = "js-location"
TERMINAL = "terminal"
REDIRECT_METHODS = (HTTP_3XX, META_REFRESH, JS_LOCATION)


def parse_time(value) -> datetime:
    """Accept RFC3339 strings, epoch seconds or datetimes; always returns UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)):
        dt = datetime.fromtimestamp(value, tz=timezone.utc)
    else:
        text = str(value).strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_time(dt: datetime) -> str:
    return parse_time(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Query:
    phrase: str
    engine: str
    issued_at: datetime

    def __post_init__(self):
        if not self.phrase.strip():
            raise ValueError("query phrase must be non-empty")


@dataclass
class ListingRecord:
    kind: str
    title: str
    display_domain: str
    uri: str
    snippet: str
    engine: str
    position: int
    observed_at: datetime
    phrase: str = ""
    extensions: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["observed_at"] = format_time(self.observed_at)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ListingRecord":
        d = dict(d)
        d["observed_at"] = parse_time(d["observed_at"])
        return cls(**d)


@dataclass
class Hop:
    uri: str
    fqdn: str
    method: str
    http_status: Optional[int]
    via: str = ORIGIN
    error: Optional[str] = None


@dataclass
class RedirectChain:
    """Hops from a listing's start URI to the landing page.

    ``method`` follows the chain contract (origin first, terminal last when
    completed); ``via`` always holds how the hop was reached.
    """

    origin_uri: str
    hops: list[Hop]
    final_domain: str
    completed: bool
    reason: Optional[str] = None
    listing_kind: str = SR
    engine: str = ""
    bodies: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def fqdns(self) -> list[str]:
        return [h.fqdn for h in self.hops]

    def to_json(self) -> dict:
        return {
            "origin_uri": self.origin_uri,
            "hops": [asdict(h) for h in self.hops],
            "final_domain": self.final_domain,
            "completed": self.completed,
            "reason": self.reason,
            "listing_kind": self.listing_kind,
            "engine": self.engine,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RedirectChain":
        return cls(
            origin_uri=d["origin_uri"],
            hops=[Hop(**h) for h in d["hops"]],
            final_domain=d["final_domain"],
            completed=d["completed"],
            reason=d.get("reason"),
            listing_kind=d.get("listing_kind", SR),
            engine=d.get("engine", ""),
        )


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class PageSnapshot:
    fqdn: str
    fetched_at: datetime
    html: bytes = field(repr=False)
    content_hash: str = ""
    uri: str = ""

    def __post_init__(self):
        digest = content_hash(self.html)
        if not self.content_hash:
            object.__setattr__(self, "content_hash", digest)
        elif self.content_hash != digest:
            raise ValueError(f"content hash mismatch for {self.fqdn}")

    @property
    def key(self) -> tuple[str, str]:
        return self.fqdn, format_time(self.fetched_at)


@dataclass(frozen=True, order=True)
class DnsObservation:
    d: str
    ip: str
    t: datetime

    def to_json(self) -> dict:
        return {"d": self.d, "ip": self.ip, "t": format_time(self.t)}

    @classmethod
    def from_json(cls, row: dict) -> "DnsObservation":
        return cls(row["d"].lower(), row["ip"], parse_time(row["t"]))


@dataclass
class FetcherConfig:
    user_agent: str = "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Chrome/57.0"
    referer: str = ""
    daily_rate_cap: dict = field(default_factory=dict)
    mode: str = "fixture"
    retries: int = 2

    def __post_init__(self):
        if self.mode not in ("fixture", "live"):
            raise ValueError(f"unknown fetch mode {self.mode!r}")
        if self.mode == "live":
            for engine, cap in self.daily_rate_cap.items():
                if int(cap) < 1:
                    raise ValueError(f"rate cap for {engine} must be >= 1 in live mode")
