"""Split a captured search page into organic results (SR) and ads (AD)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional
from urllib.parse import quote_plus

from bs4 import BeautifulSoup

from ..domains import DomainError, host_of
from .models import AD, SR, ListingRecord

log = logging.getLogger(__name__)

MAX_SR_PER_QUERY = 100


@dataclass(frozen=True)
class EngineDescriptor:
    """Selector rules for one search engine. Each rule set needs ``item``;
    ``title``, ``link``, ``snippet``, ``display`` and ``phone`` are looked up
    inside each item."""

    name: str
    referer: str
    query_url: str
    sr: dict
    ad: dict

    @classmethod
    def from_dict(cls, name: str, d: dict) -> "EngineDescriptor":
        for part in ("sr", "ad"):
            if "item" not in d.get(part, {}):
                raise ValueError(f"engine {name}: {part} rules need an 'item' selector")
        return cls(name, d.get("referer", ""), d.get("query_url", ""), dict(d["sr"]), dict(d["ad"]))

    def search_url(self, phrase: str) -> str:
        return self.query_url.format(query=quote_plus(phrase))


def load_engines(path=None) -> dict[str, EngineDescriptor]:
    if path is None:
        text = resources.files("tsshunt.data").joinpath("engines.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return {name: EngineDescriptor.from_dict(name, d) for name, d in json.loads(text).items()}


@lru_cache(maxsize=None)
def default_engines() -> dict[str, EngineDescriptor]:
    return load_engines()


def _text(node, selector: Optional[str]) -> str:
    if not selector:
        return ""
    el = node.select_one(selector)
    return el.get_text(" ", strip=True) if el else ""


def _href(node, selector: Optional[str]) -> str:
    el = node.select_one(selector) if selector else None
    if el is None and node.name == "a":
        el = node
    if el is None:
        el = node.find("a", href=True)
    return (el.get("href") or "").strip() if el is not None else ""


def _valid_uri(uri: str) -> bool:
    if not uri.lower().startswith(("http://", "https://")):
        return False
    try:
        host_of(uri)
    except (DomainError, ValueError):
        return False
    return True


def _extract(soup, rules: dict, kind: str, engine: str, observed_at: datetime, phrase: str) -> list[ListingRecord]:
    records = []
    for item in soup.select(rules["item"]):
        uri = _href(item, rules.get("link"))
        if not _valid_uri(uri):
            continue
        display = _text(item, rules.get("display")).strip().lower()
        if display.startswith(("http://", "https://")):
            display = host_of(display)
        display = display.split("/")[0] if display else host_of(uri)
        extensions = {}
        phone = _text(item, rules.get("phone"))
        if phone:
            extensions["call"] = phone
        records.append(ListingRecord(
            kind=kind,
            title=_text(item, rules.get("title")),
            display_domain=display,
            uri=uri,
            snippet=_text(item, rules.get("snippet")),
            engine=engine,
            position=len(records) + 1,
            observed_at=observed_at,
            phrase=phrase,
            extensions=extensions,
        ))
    return records


def parse_serp(
    raw_html: bytes | str,
    engine: EngineDescriptor,
    observed_at: datetime,
    phrase: str = "",
) -> list[ListingRecord]:
    """Listings in document order, ADs first then SRs, each numbered from 1.

    Only the first 100 SRs are kept. Pages that cannot be parsed yield an
    empty list and a logged warning.
    """
    try:
        html = raw_html.decode("utf-8") if isinstance(raw_html, bytes) else raw_html
    except UnicodeDecodeError:
        log.warning("serp from %s for %r is not valid UTF-8", engine.name, phrase)
        return []
    if "<" not in html:
        log.warning("serp from %s for %r contains no markup", engine.name, phrase)
        return []
    try:
        soup = BeautifulSoup(html, "html.parser")
        ads = _extract(soup, engine.ad, AD, engine.name, observed_at, phrase)
        srs = _extract(soup, engine.sr, SR, engine.name, observed_at, phrase)
    except Exception as exc:  # bs4/soupsieve raise a variety of parse errors
        log.warning("serp from %s for %r could not be parsed: %s", engine.name, phrase, exc)
        return []
    return ads + srs[:MAX_SR_PER_QUERY]
