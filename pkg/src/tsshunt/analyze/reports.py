"""Measurement reports over pipeline outputs. Every function here is pure:
identical inputs give identical (and identically ordered) outputs."""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..classify.phones import normalize_phone
from ..domains import host_of, registered_domain, tld
from ..ingest.models import SR, ListingRecord, RedirectChain, parse_time
from ..ingest.tracker import DEFAULT_AD_NETWORK_HOSTS

FINAL_LANDING = "final_landing"
SUPPORT = "support"
HOSTING_TSS = "hosting_tss"
REDIRECTING_TO_TSS = "redirecting_to_tss"
_EVIDENCE_FOR_ROLE = {FINAL_LANDING: HOSTING_TSS, SUPPORT: REDIRECTING_TO_TSS}

FQDN, TLD1, PHONE = "fqdn", "tld1", "phone"
ENTRY_KINDS = (FQDN, TLD1, PHONE)

POSITION_BRACKETS = ((1, 25), (26, 50), (51, 75), (76, 100))
POPULARITY_BANDS = ("<100", "101-1,000", "1,001-10,000", "10,001-100,000", ">100,000")
PRE_2014 = "pre-2014"
UNKNOWN = "unknown"


class ReportError(ValueError):
    pass


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return parse_time(value).date()
    if isinstance(value, date):
        return value
    return parse_time(value).date()


def _pct(num: int, den: int) -> Optional[float]:
    return round(100.0 * num / den, 2) if den else None


# lifetimes

@dataclass
class DomainObservationLog:
    fqdn: str
    role: str
    observations: list[tuple[date, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.role not in _EVIDENCE_FOR_ROLE:
            raise ReportError(f"unknown role {self.role!r}")
        want = _EVIDENCE_FOR_ROLE[self.role]
        obs = sorted((_as_date(d), ev) for d, ev in self.observations)
        for _, ev in obs:
            if ev != want:
                raise ReportError(f"{self.fqdn}: evidence {ev!r} does not fit role {self.role!r}")
        self.observations = obs


def domain_lifetime(log: DomainObservationLog) -> int:
    """Days between the first and last observation."""
    if not log.observations:
        raise ReportError(f"{log.fqdn}: empty observation log")
    return (log.observations[-1][0] - log.observations[0][0]).days


def observation_logs(tracked, final_tss: Iterable[str], support: Iterable[str],
                     extra: Iterable[tuple[str, object]] = ()) -> list[DomainObservationLog]:
    """Logs from tracked listings: a final landing domain is seen on the date
    its chain was fetched, a support domain on the date it redirected there.
    ``extra`` adds (fqdn, date) sightings of final domains from other sources,
    such as archived pages."""
    final_tss, support = set(final_tss), set(support)
    seen = defaultdict(set)
    for tr in tracked:
        chain = tr.chain
        if not chain.completed or chain.final_domain not in final_tss:
            continue
        day = _as_date(tr.fetched_at)
        seen[(chain.final_domain, FINAL_LANDING)].add(day)
        for h in chain.hops[:-1]:
            if h.fqdn in support:
                seen[(h.fqdn, SUPPORT)].add(day)
    for fqdn, when in extra:
        if fqdn in final_tss:
            seen[(fqdn, FINAL_LANDING)].add(_as_date(when))
    return [
        DomainObservationLog(fqdn, role, [(d, _EVIDENCE_FOR_ROLE[role]) for d in days])
        for (fqdn, role), days in sorted(seen.items())
    ]


def lifetime_report(logs: Iterable[DomainObservationLog], groups: Optional[dict[str, str]] = None) -> dict:
    """Lifetimes per domain plus median per group. ``groups`` maps a final
    landing fqdn to a sub-type (aggressive/passive); support domains form
    their own group."""
    groups = groups or {}
    per_domain, by_group = [], defaultdict(list)
    for log in logs:
        days = domain_lifetime(log)
        group = SUPPORT if log.role == SUPPORT else groups.get(log.fqdn, FINAL_LANDING)
        per_domain.append({"fqdn": log.fqdn, "role": log.role, "group": group, "lifetime_days": days,
                           "first_seen": log.observations[0][0].isoformat(),
                           "last_seen": log.observations[-1][0].isoformat()})
        by_group[group].append(days)
    summary = {
        g: {"count": len(v), "median_days": float(np.median(v)), "max_days": max(v)}
        for g, v in sorted(by_group.items())
    }
    return {"domains": per_domain, "groups": summary}


# blacklists

@dataclass
class BlacklistFeed:
    name: str
    entries: set = field(default_factory=set)              # {(kind, value)}
    entry_dates: dict = field(default_factory=dict)        # (kind, value) -> date
    kinds: frozenset = frozenset()                         # kinds the feed covers

    def __post_init__(self):
        clean = set()
        for kind, value in self.entries:
            if kind not in ENTRY_KINDS:
                raise ReportError(f"feed {self.name}: unknown entry kind {kind!r}")
            clean.add((kind, _normalize_entry(kind, value)))
        self.entries = clean
        self.entry_dates = {(k, _normalize_entry(k, v)): _as_date(d) for (k, v), d in self.entry_dates.items()}
        if not self.kinds:
            self.kinds = frozenset(k for k, _ in self.entries)

    def values(self, kind: str) -> set[str]:
        return {v for k, v in self.entries if k == kind}

    @classmethod
    def load(cls, path) -> "BlacklistFeed":
        """CSV with a ``kind,value,first_listed`` header; ``first_listed`` may
        be blank. A ``# kinds: fqdn,phone`` first line declares coverage."""
        path = Path(path)
        lines = path.read_text("utf-8").splitlines()
        kinds = frozenset()
        if lines and lines[0].startswith("# kinds:"):
            kinds = frozenset(k.strip() for k in lines[0].split(":", 1)[1].split(",") if k.strip())
            lines = lines[1:]
        entries, dates = set(), {}
        for row in csv.DictReader(lines):
            key = (row["kind"].strip(), row["value"].strip())
            entries.add(key)
            if row.get("first_listed"):
                dates[key] = row["first_listed"].strip()
        return cls(path.stem, entries, dates, kinds)


def load_feeds(directory) -> list[BlacklistFeed]:
    return [BlacklistFeed.load(p) for p in sorted(Path(directory).glob("*.csv"))]


def _normalize_entry(kind: str, value: str) -> str:
    if kind == PHONE:
        return normalize_phone(value)
    return value.strip().lower().rstrip(".")


def blacklist_overlap(final_domains: Iterable[str], phones: Iterable[str], feeds: list[BlacklistFeed],
                      detection_dates: Optional[dict] = None) -> dict:
    """Coverage of our domains and numbers by each feed and by their union.

    Coverage is |ours & feed| / |ours| in percent, or None when the feed does
    not list that kind. For FQDNs with both dates, a feed listing dated after
    our detection counts as detected in advance (lead time = the difference);
    otherwise the entry was already listed. ``detection_dates`` maps our
    FQDNs to the date we first flagged them.
    """
    ours = {
        FQDN: {_normalize_entry(FQDN, d) for d in final_domains},
        PHONE: {_normalize_entry(PHONE, p) for p in phones},
    }
    ours[TLD1] = {registered_domain(d) for d in ours[FQDN]}
    detection = {_normalize_entry(FQDN, k): _as_date(v) for k, v in (detection_dates or {}).items()}

    def coverage(matched: dict[str, set], covered: set[str]) -> dict:
        return {kind: (_pct(len(matched[kind]), len(ours[kind])) if kind in covered else None)
                for kind in ENTRY_KINDS}

    def timing(fqdns: set[str], listed: dict[str, date]) -> dict:
        leads, already = [], 0
        for d in sorted(fqdns):
            ours_at, theirs = detection.get(d), listed.get(d)
            if ours_at is None or theirs is None:
                continue
            if ours_at < theirs:
                leads.append((theirs - ours_at).days)
            else:
                already += 1
        return {
            "in_advance_pct": _pct(len(leads), len(ours[FQDN])),
            "already_listed_pct": _pct(already, len(ours[FQDN])),
            "mean_lead_days": round(sum(leads) / len(leads), 2) if leads else None,
        }

    rows = []
    union = {kind: set() for kind in ENTRY_KINDS}
    union_listed: dict[str, date] = {}
    covered_any = set()
    for feed in feeds:
        matched = {kind: ours[kind] & feed.values(kind) for kind in ENTRY_KINDS}
        listed = {v: feed.entry_dates[(FQDN, v)] for v in matched[FQDN] if (FQDN, v) in feed.entry_dates}
        rows.append({"feed": feed.name, **coverage(matched, feed.kinds), **timing(matched[FQDN], listed)})
        for kind in ENTRY_KINDS:
            union[kind] |= matched[kind]
        for v, d in listed.items():
            union_listed[v] = min(d, union_listed.get(v, d))
        covered_any |= feed.kinds
    cumulative = {"feed": "cumulative", **coverage(union, covered_any), **timing(union[FQDN], union_listed)}
    return {"feeds": rows, "cumulative": cumulative,
            "ours": {kind: len(ours[kind]) for kind in ENTRY_KINDS}}


# search positions

def bracket_of(position: int) -> str:
    for lo, hi in POSITION_BRACKETS:
        if lo <= position <= hi:
            return f"{lo}-{hi}"
    raise ReportError(f"position {position} outside 1..100")


def position_distribution(listings: Iterable[ListingRecord]) -> dict[str, dict[str, int]]:
    """Per engine, each distinct URI is counted once, at its best (numerically
    lowest) position."""
    best: dict[tuple[str, str], int] = {}
    for rec in listings:
        if rec.kind != SR:
            continue
        bracket_of(rec.position)
        key = (rec.engine, rec.uri)
        best[key] = min(rec.position, best.get(key, rec.position))
    out: dict[str, dict[str, int]] = {}
    for (engine, _), pos in sorted(best.items()):
        hist = out.setdefault(engine, {f"{lo}-{hi}": 0 for lo, hi in POSITION_BRACKETS})
        hist[bracket_of(pos)] += 1
    return out


# popularity vs pollution

def band_of(monthly_searches: float) -> str:
    if monthly_searches < 100:
        return POPULARITY_BANDS[0]
    if monthly_searches <= 1000:
        return POPULARITY_BANDS[1]
    if monthly_searches <= 10000:
        return POPULARITY_BANDS[2]
    if monthly_searches <= 100000:
        return POPULARITY_BANDS[3]
    return POPULARITY_BANDS[4]


def quartiles(values) -> dict[str, float]:
    v = np.asarray(sorted(values), dtype=float)
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return {"min": float(q[0]), "q1": float(q[1]), "median": float(q[2]), "q3": float(q[3]), "max": float(q[4])}


def pollution_by_popularity(data: dict[str, tuple[str, int]]) -> dict[str, dict]:
    """Quartiles of per-phrase TSS URI counts, per popularity band. The
    lowest band is ignored; empty bands are omitted."""
    by_band = defaultdict(list)
    for phrase, (band, count) in data.items():
        if band not in POPULARITY_BANDS:
            raise ReportError(f"unknown popularity band {band!r}")
        if count < 0:
            raise ReportError(f"negative count for {phrase!r}")
        if band == POPULARITY_BANDS[0]:
            continue
        by_band[band].append(count)
    return {b: {"phrases": len(by_band[b]), **quartiles(by_band[b])} for b in POPULARITY_BANDS if by_band[b]}


def pollution_counts(tracked, tss_domains: set[str]) -> Counter:
    """Distinct TSS URIs per search phrase."""
    uris = defaultdict(set)
    for tr in tracked:
        if tr.chain.completed and tr.chain.final_domain in tss_domains:
            uris[tr.listing.phrase].add(tr.listing.uri)
    return Counter({p: len(u) for p, u in uris.items()})


# phone numbers

@dataclass(frozen=True)
class NumberMeta:
    year_last_owned: Optional[int]
    provider: Optional[str]
    active: bool = True


def load_phone_meta(path) -> dict[str, NumberMeta]:
    rows = json.loads(Path(path).read_text("utf-8"))
    return {normalize_phone(k): NumberMeta(v.get("year_last_owned"), v.get("provider"), bool(v.get("active", True)))
            for k, v in rows.items()}


def phone_age_report(numbers: Iterable[str], registration_meta: dict) -> dict:
    """Share of numbers by the year they last changed owner, and by provider.
    Years before 2014 share one bucket; numbers without metadata (or without
    a year/provider) fall in the unknown bucket."""
    nums = sorted({normalize_phone(n) for n in numbers})
    meta = {normalize_phone(k): v for k, v in registration_meta.items()}
    years, providers = Counter(), Counter()
    for n in nums:
        m = meta.get(n)
        year = getattr(m, "year_last_owned", None) if m else None
        if year is None:
            years[UNKNOWN] += 1
        elif year < 2014:
            years[PRE_2014] += 1
        else:
            years[str(year)] += 1
        prov = getattr(m, "provider", None) if m else None
        providers[prov or UNKNOWN] += 1
    total = len(nums)
    year_keys = [PRE_2014] + sorted(k for k in years if k not in (PRE_2014, UNKNOWN)) + [UNKNOWN]
    return {
        "numbers": total,
        "years": {k: _pct(years[k], total) for k in year_keys if years[k]},
        "providers": [{"provider": p, "share_pct": _pct(c, total)}
                      for p, c in sorted(providers.items(), key=lambda pc: (-pc[1], pc[0]))],
    }


# support domains and TLDs

def identify_support_domains(chains: Iterable[RedirectChain], final_tss: Iterable[str],
                             ad_network_hosts: Iterable[str] = DEFAULT_AD_NETWORK_HOSTS) -> set[str]:
    """Intermediate domains on completed chains that end on a TSS domain,
    minus TSS domains themselves and ad-network hosts."""
    final_tss = set(final_tss)
    ad_hosts = tuple(h.lower() for h in ad_network_hosts)
    out = set()
    for c in chains:
        if not c.completed or c.final_domain not in final_tss:
            continue
        for h in c.hops[:-1]:
            fqdn = h.fqdn or host_of(h.uri)
            if not fqdn or fqdn in final_tss or fqdn == c.final_domain:
                continue
            if any(fqdn == a or fqdn.endswith("." + a) for a in ad_hosts):
                continue
            out.add(fqdn)
    return out


def tld_ranking(domains: Iterable[str], top: Optional[int] = None) -> list[dict]:
    domains = sorted(set(domains))
    counts = Counter(tld(d) for d in domains)
    ranked = sorted(counts.items(), key=lambda tc: (-tc[1], tc[0]))[:top]
    return [{"tld": t, "count": c, "share_pct": _pct(c, len(domains))} for t, c in ranked]


# output

def write_json(obj, path, sort_keys: bool = True) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=sort_keys) + "\n", "utf-8")
    return path


def write_csv(rows: list[dict], columns: list[str], path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row.get(c) is None else _cell(row.get(c)) for c in columns])
    return path


def _cell(value) -> str:
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return str(value)
