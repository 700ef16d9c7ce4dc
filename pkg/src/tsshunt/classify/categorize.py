"""Listing categorization: reputation filter, toll-free gate, classifier,
then the aggressive/passive split (or a rule-table bucket for non-scams)."""

from __future__ import annotations

import fnmatch
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from bs4 import BeautifulSoup

from ..domains import normalize_fqdn, registered_domain
from ..ingest.models import PageSnapshot, RedirectChain
from ..text import decode_html
from .naive_bayes import NON_TSS, TSS, TrainedModel, classify_page
from .phones import extract_phone_numbers

AGGRESSIVE = "aggressive"
PASSIVE = "passive"
LEGITIMATE = "legitimate"
BLOG_FORUM = "blog_forum"
COMPLAINT = "complaint"
NEWS = "news"
UNCATEGORIZED = "uncategorized"
TSS_MINORS = (AGGRESSIVE, PASSIVE)
NON_TSS_MINORS = (LEGITIMATE, BLOG_FORUM, COMPLAINT, NEWS, UNCATEGORIZED)

_DIALOG_CALL = re.compile(r"(?:\bwindow\s*\.\s*)?\b(?:alert|confirm|prompt)\s*\(")
_WINDOW_DIALOG = re.compile(r"\bwindow\s*\.\s*(?:alert|confirm|prompt)\s*\(")
_AUDIO_TAG = re.compile(r"<\s*audio\b", re.I)


@dataclass(frozen=True)
class PageCategory:
    major: str
    minor: str
    reason: str = ""

    def __post_init__(self):
        allowed = TSS_MINORS if self.major == TSS else NON_TSS_MINORS
        if self.major not in (TSS, NON_TSS) or self.minor not in allowed:
            raise ValueError(f"invalid category {self.major}/{self.minor}")


class ReputationList:
    """High-reputation registered domains (e.g. a top-sites ranking)."""

    def __init__(self, domains):
        self.ranked = [registered_domain(d) for d in domains]
        self._set = frozenset(self.ranked)

    @classmethod
    def load(cls, path, top: Optional[int] = None) -> "ReputationList":
        names = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                # accepts "rank,domain" rows or bare domains
                names.append(line.split(",")[-1].strip())
        return cls(names[:top] if top else names)

    def __contains__(self, fqdn: str) -> bool:
        return registered_domain(fqdn) in self._set

    def __len__(self):
        return len(self._set)


def filter_reputation(fqdn: str, reputation_list: ReputationList) -> bool:
    """True when the fqdn's registered domain is on the list (drop it)."""
    return normalize_fqdn(fqdn) in reputation_list


def _script_code(soup: BeautifulSoup) -> str:
    parts = [s.get_text() for s in soup.find_all("script")]
    for tag in soup.find_all(True):
        for attr, value in tag.attrs.items():
            if attr.lower().startswith("on") and isinstance(value, str):
                parts.append(value)
            elif attr.lower() == "href" and isinstance(value, str) and value.lower().startswith("javascript:"):
                parts.append(value)
    return "\n".join(parts)


def categorize_aggressiveness(html: bytes | str) -> str:
    """Aggressive when the page raises browser dialogs or carries an <audio> tag."""
    raw = decode_html(html)
    if _AUDIO_TAG.search(raw) or _WINDOW_DIALOG.search(raw):
        return AGGRESSIVE
    soup = BeautifulSoup(raw, "html.parser")
    if soup.find("audio") or _DIALOG_CALL.search(_script_code(soup)):
        return AGGRESSIVE
    return PASSIVE


@dataclass
class NonTssRules:
    """Host-pattern tables (fnmatch globs) for bucketing non-scam pages."""

    legitimate: list[str] = field(default_factory=list)
    blog_forum: list[str] = field(default_factory=list)
    complaint: list[str] = field(default_factory=list)
    news: list[str] = field(default_factory=list)

    @classmethod
    def load(cls, path=None) -> "NonTssRules":
        if path is None:
            text = resources.files("tsshunt.data").joinpath("nontss_rules.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls(**json.loads(text))

    def bucket(self, fqdn: str) -> str:
        for name in (LEGITIMATE, COMPLAINT, NEWS, BLOG_FORUM):
            if any(fnmatch.fnmatch(fqdn, pat) for pat in getattr(self, name)):
                return name
        return UNCATEGORIZED


@dataclass
class ListingLabel:
    category: PageCategory
    final_domain: str
    score: Optional[float]
    phones: list[str]


class Categorizer:
    """Runs the categorization steps in order and logs which domains reached
    the classifier (``classified``)."""

    def __init__(self, model: TrainedModel, reputation: ReputationList, rules: NonTssRules | None = None):
        self.model = model
        self.reputation = reputation
        self.rules = rules or NonTssRules()
        self.classified: list[str] = []

    def categorize_page(self, fqdn: str, html: Optional[bytes]) -> ListingLabel:
        fqdn = normalize_fqdn(fqdn)
        if fqdn in self.reputation:
            return ListingLabel(PageCategory(NON_TSS, LEGITIMATE, "reputation list"), fqdn, None, [])
        if html is None:
            return ListingLabel(PageCategory(NON_TSS, UNCATEGORIZED, "missing snapshot"), fqdn, None, [])
        phones = [p.digits for p in extract_phone_numbers(html)]
        if not phones:
            return ListingLabel(PageCategory(NON_TSS, self.rules.bucket(fqdn), "no toll-free number"), fqdn, None, [])
        self.classified.append(fqdn)
        result = classify_page(self.model, html)
        if not result.is_tss:
            return ListingLabel(PageCategory(NON_TSS, self.rules.bucket(fqdn), "classifier"), fqdn, result.score, phones)
        return ListingLabel(PageCategory(TSS, categorize_aggressiveness(html), "classifier"), fqdn, result.score, phones)

    def categorize_listing(self, record, chain: RedirectChain, snapshot: Optional[PageSnapshot]) -> ListingLabel:
        if not chain.completed:
            html = None
        else:
            html = snapshot.html if snapshot is not None else None
        label = self.categorize_page(chain.final_domain, html)
        if not chain.completed and label.category.minor == UNCATEGORIZED:
            return ListingLabel(PageCategory(NON_TSS, UNCATEGORIZED, f"incomplete chain: {chain.reason}"),
                                label.final_domain, None, [])
        return label


def categorize_listing(record, chain, snapshot, model, reputation_list, rules=None) -> PageCategory:
    return Categorizer(model, reputation_list, rules).categorize_listing(record, chain, snapshot).category
