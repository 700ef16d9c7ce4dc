"""Historic (domain, ip, time) resolutions indexed by domain, ip and /24."""

from __future__ import annotations

import bisect
import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional

from ..domains import slash24
from ..ingest.models import DnsObservation, parse_time

DEFAULT_DELTA = timedelta(days=7)


@dataclass(frozen=True)
class Window:
    start: datetime
    end: datetime
    delta: timedelta = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "start", parse_time(self.start))
        object.__setattr__(self, "end", parse_time(self.end))
        if self.start > self.end:
            raise ValueError("window start must not be after its end")
        if self.delta < timedelta(0):
            raise ValueError("window delta must be >= 0")

    def widened(self, delta: Optional[timedelta] = None) -> tuple[datetime, datetime]:
        d = self.delta if delta is None else delta
        return self.start - d, self.end + d


def _epoch(dt: datetime) -> int:
    return int(parse_time(dt).timestamp())


class _Posting:
    """Time-sorted (t, value) pairs for one key."""

    __slots__ = ("times", "values")

    def __init__(self):
        self.times: list[int] = []
        self.values: list[str] = []

    def between(self, lo: int, hi: int) -> list[str]:
        i = bisect.bisect_left(self.times, lo)
        j = bisect.bisect_right(self.times, hi)
        return self.values[i:j]


def _build(pairs) -> dict[str, _Posting]:
    grouped = defaultdict(list)
    for key, t, value in pairs:
        grouped[key].append((t, value))
    out = {}
    for key, rows in grouped.items():
        rows.sort()
        p = _Posting()
        p.times = [t for t, _ in rows]
        p.values = [v for _, v in rows]
        out[key] = p
    return out


class DnsStore:
    """Build-once, read-many store. Window queries use closed intervals."""

    def __init__(self, observations: Iterable[DnsObservation]):
        self._index(sorted({(o.d.lower(), o.ip, _epoch(o.t)) for o in observations}))

    def _index(self, rows):
        self._rows = rows
        self.by_domain = _build((d, t, ip) for d, ip, t in rows)
        self.by_ip = _build((ip, t, d) for d, ip, t in rows)
        self.by_subnet = _build((slash24(ip), t, d) for d, ip, t in rows)

    def __len__(self):
        return len(self._rows)

    @property
    def time_range(self) -> Optional[tuple[datetime, datetime]]:
        if not self._rows:
            return None
        ts = [t for _, _, t in self._rows]
        return datetime.fromtimestamp(min(ts), tz=timezone.utc), datetime.fromtimestamp(max(ts), tz=timezone.utc)

    def observations(self) -> list[DnsObservation]:
        return [DnsObservation(d, ip, parse_time(t)) for d, ip, t in self._rows]

    def ips_of(self, d: str, start: datetime, end: datetime) -> list[str]:
        p = self.by_domain.get(d.lower())
        return p.between(_epoch(start), _epoch(end)) if p else []

    def domains_on_ip(self, ip: str, start: datetime, end: datetime) -> list[str]:
        p = self.by_ip.get(ip)
        return p.between(_epoch(start), _epoch(end)) if p else []

    def domains_on_subnet(self, ip: str, start: datetime, end: datetime) -> list[str]:
        p = self.by_subnet.get(slash24(ip))
        return p.between(_epoch(start), _epoch(end)) if p else []

    @classmethod
    def from_jsonl(cls, path, use_sidecar: bool = True) -> "DnsStore":
        path = Path(path)
        raw = path.read_bytes()
        digest = hashlib.sha256(raw).hexdigest()
        sidecar = path.with_suffix(path.suffix + ".idx.json")
        if use_sidecar and sidecar.exists():
            meta = json.loads(sidecar.read_text("utf-8"))
            if meta.get("sha256") == digest:
                return cls._from_rows([tuple(r) for r in meta["rows"]])
        obs = [DnsObservation.from_json(json.loads(line)) for line in raw.decode("utf-8").splitlines() if line.strip()]
        store = cls(obs)
        if use_sidecar:
            sidecar.write_text(json.dumps({"sha256": digest, "count": len(store), "rows": store._rows}), "utf-8")
        return store

    @classmethod
    def _from_rows(cls, rows) -> "DnsStore":
        store = cls.__new__(cls)
        store._index(rows)
        return store


def rhip(store: DnsStore, d: str, T: Window) -> set[str]:
    """IPs the domain resolved to during the window."""
    return set(store.ips_of(d, T.start, T.end))


def rhdn(store: DnsStore, ip: str, T: Window, delta: Optional[timedelta] = None, subnet_mode: str = "slash24") -> set[str]:
    """Domains seen on the ip (or anywhere in its /24) during T widened by delta."""
    lo, hi = T.widened(delta)
    if subnet_mode == "slash24":
        return set(store.domains_on_subnet(ip, lo, hi))
    if subnet_mode == "exact":
        return set(store.domains_on_ip(ip, lo, hi))
    raise ValueError(f"unknown subnet mode {subnet_mode!r}")
