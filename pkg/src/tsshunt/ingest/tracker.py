"""Redirect-chain tracking for SR and AD listings.

Redirects are found without executing scripts: HTTP 3xx Location headers,
``<meta http-equiv=refresh>`` tags, and location assignments that can be read
straight out of inline ``<script>`` blocks.
"""

from __future__ import annotations

import re
from typing import Iterable, Optional
from urllib.parse import urljoin

from bs4 import BeautifulSoup

from ..domains import host_of
from ..text import decode_html
from .fetch import FetchError, Fetcher, normalize_uri
from .models import (
    AD,
    HTTP_3XX,
    JS_LOCATION,
    META_REFRESH,
    ORIGIN,
    TERMINAL,
    Hop,
    ListingRecord,
    RedirectChain,
)

DEFAULT_MAX_HOPS = 10

DEFAULT_AD_NETWORK_HOSTS = (
    "r.msn.com",
    "bing.com",
    "googleadservices.com",
    "doubleclick.net",
    "googlesyndication.com",
    "ads.yahoo.com",
    "r.search.yahoo.com",
    "clickserve.dartsearch.net",
)

_JS_PATTERNS = [
    re.compile(
        r"""(?:(?:window|document|top|self|parent)\s*\.\s*)?location(?:\s*\.\s*href)?\s*=\s*(['"])(?P<url>[^'"]+)\1"""
    ),
    re.compile(
        r"""(?:(?:window|document|top|self|parent)\s*\.\s*)?location\s*\.\s*(?:replace|assign)\s*\(\s*(['"])(?P<url>[^'"]+)\1\s*\)"""
    ),
]
_META_URL_RE = re.compile(r"""^\s*\d*(?:\.\d+)?\s*[;,]?\s*(?:url\s*=\s*)?['"]?(?P<url>[^'"]*)""", re.I)


def find_js_redirect(html: str) -> Optional[str]:
    soup = BeautifulSoup(html, "html.parser")
    for script in soup.find_all("script"):
        code = script.string or script.get_text() or ""
        for pat in _JS_PATTERNS:
            m = pat.search(code)
            if m:
                return m.group("url")
    return None


def find_meta_refresh(html: str) -> Optional[str]:
    soup = BeautifulSoup(html, "html.parser")
    for meta in soup.find_all("meta"):
        if str(meta.get("http-equiv", "")).lower() != "refresh":
            continue
        m = _META_URL_RE.match(str(meta.get("content", "")))
        if m and m.group("url").strip():
            return m.group("url").strip()
    return None


def next_redirect(status: int, headers: dict, body: bytes) -> Optional[tuple[str, str]]:
    """(target, method) for the redirect a page issues, or None."""
    if 300 <= status < 400 and headers.get("location"):
        return headers["location"], HTTP_3XX
    if status >= 300:
        return None
    html = decode_html(body)
    target = find_js_redirect(html)
    if target:
        return target, JS_LOCATION
    target = find_meta_refresh(html)
    if target:
        return target, META_REFRESH
    return None


def _host_blocked(host: str, blocked: Iterable[str]) -> bool:
    return any(host == b or host.endswith("." + b) for b in blocked)


def track_uri(
    start_uri: str,
    referer: str,
    user_agent: str,
    max_hops: int = DEFAULT_MAX_HOPS,
    *,
    fetcher: Fetcher,
    blocked_hosts: Iterable[str] = (),
) -> RedirectChain:
    """Follow redirects from ``start_uri`` and log every hop.

    Every request carries ``referer``. Hosts in ``blocked_hosts`` are never
    requested; reaching one ends the chain as incomplete.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    blocked = tuple(blocked_hosts)
    uri = normalize_uri(start_uri)
    hops: list[Hop] = []
    bodies: dict[str, bytes] = {}
    seen: set[str] = set()
    via = ORIGIN
    completed = False
    reason = None

    while True:
        if uri in seen:
            reason = "loop"
            hops[-1].error = f"redirect loop back to {uri}"
            break
        if len(hops) >= max_hops:
            reason = "max_hops"
            hops[-1].error = f"max_hops={max_hops} reached before {uri}"
            break
        host = host_of(uri)
        if _host_blocked(host, blocked):
            reason = "blocked"
            if hops:
                hops[-1].error = f"refused to contact ad-network host {host}"
            else:
                hops.append(Hop(uri, host, via, None, via, error=f"refused to contact ad-network host {host}"))
            break
        seen.add(uri)
        try:
            resp = fetcher.fetch(uri, referer=referer, user_agent=user_agent)
        except FetchError as exc:
            hops.append(Hop(uri, host, via, None, via, error=str(exc)))
            reason = "fetch_error"
            break
        hop = Hop(uri, host, via, resp.status, via)
        hops.append(hop)
        bodies[uri] = resp.body
        redirect = next_redirect(resp.status, resp.headers, resp.body)
        if redirect is None:
            hop.method = TERMINAL
            completed = True
            break
        target, via = redirect
        uri = normalize_uri(urljoin(uri, target))

    chain = RedirectChain(
        origin_uri=normalize_uri(start_uri),
        hops=hops,
        final_domain=hops[-1].fqdn,
        completed=completed,
        reason=reason,
        bodies=bodies,
    )
    return chain


def tracking_start(record: ListingRecord) -> str:
    """Where to begin tracking a listing.

    ADs start at the advertiser's display domain so the ad network's click
    URI is never requested; SRs start at their own URI.
    """
    if record.kind == AD:
        return "http://" + record.display_domain.strip().lower().strip("/") + "/"
    return record.uri


def track_listing(
    record: ListingRecord,
    referer: str,
    user_agent: str,
    *,
    fetcher: Fetcher,
    max_hops: int = DEFAULT_MAX_HOPS,
    ad_network_hosts: Iterable[str] = DEFAULT_AD_NETWORK_HOSTS,
) -> RedirectChain:
    # ad-network hosts are never contacted, whichever listing led there;
    # an AD also never touches its own click URI's host
    blocked = tuple(ad_network_hosts)
    if record.kind == AD:
        blocked += (host_of(record.uri),)
    chain = track_uri(
        tracking_start(record), referer, user_agent, max_hops, fetcher=fetcher, blocked_hosts=blocked
    )
    chain.listing_kind = record.kind
    chain.engine = record.engine
    return chain
