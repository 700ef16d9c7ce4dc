"""HTTP fetchers: an offline fixture replayer and a stateless live client.

Both record every request they issue in ``request_log`` so callers can assert
what was (and was not) contacted.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

from ..domains import host_of

log = logging.getLogger(__name__)


class FetchError(RuntimeError):
    def __init__(self, message: str, uri: str = "", attempts: int = 1):
        super().__init__(message)
        self.uri = uri
        self.attempts = attempts


class FixtureMiss(FetchError):
    def __init__(self, uri: str, referer: str = ""):
        super().__init__("no fixture", uri=uri, attempts=1)
        self.referer = referer


@dataclass(frozen=True)
class RequestLogEntry:
    method: str
    uri: str
    host: str
    referer: str
    user_agent: str


@dataclass
class Response:
    uri: str
    status: int
    headers: dict
    body: bytes

    def header(self, name: str) -> Optional[str]:
        return self.headers.get(name.lower())


def normalize_uri(uri: str) -> str:
    if "://" not in uri:
        uri = "http://" + uri
    parts = urlsplit(uri)
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, ""))


class Fetcher:
    def __init__(self):
        self.request_log: list[RequestLogEntry] = []
        self._log_lock = threading.Lock()

    def _record(self, method, uri, referer, user_agent):
        entry = RequestLogEntry(method, uri, host_of(uri), referer or "", user_agent or "")
        with self._log_lock:
            self.request_log.append(entry)

    def fetch(self, uri: str, referer: str = "", user_agent: str = "") -> Response:
        raise NotImplementedError

    def contacted_hosts(self) -> set[str]:
        return {e.host for e in self.request_log}


class FixtureFetcher(Fetcher):
    """Replays recorded responses keyed by (method, uri, referer).

    A record without a ``referer`` key matches any Referer; a record with one
    only matches that exact header, which is how cloaking fixtures are made.
    """

    def __init__(self, records=(), base_dir=None):
        super().__init__()
        self.base_dir = Path(base_dir) if base_dir else None
        self._table: dict[tuple, dict] = {}
        for rec in records:
            self.add(rec)

    def add(self, rec: dict) -> None:
        key = (rec.get("method", "GET").upper(), normalize_uri(rec["uri"]), rec.get("referer"))
        self._table[key] = rec

    @classmethod
    def from_jsonl(cls, path) -> "FixtureFetcher":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        return cls(records, base_dir=path.parent)

    def _body(self, rec: dict) -> bytes:
        if "body_b64" in rec:
            return base64.b64decode(rec["body_b64"])
        if "body_file" in rec:
            if self.base_dir is None:
                raise FetchError("body_file fixture without base directory", rec["uri"])
            return (self.base_dir / rec["body_file"]).read_bytes()
        return rec.get("body", "").encode("utf-8")

    def fetch(self, uri: str, referer: str = "", user_agent: str = "") -> Response:
        uri = normalize_uri(uri)
        self._record("GET", uri, referer, user_agent)
        rec = self._table.get(("GET", uri, referer or ""))
        if rec is None:
            rec = self._table.get(("GET", uri, None))
        if rec is None:
            raise FixtureMiss(uri, referer)
        if rec.get("error"):
            raise FetchError(rec["error"], uri)
        headers = {k.lower(): v for k, v in rec.get("headers", {}).items()}
        return Response(uri, int(rec.get("status", 200)), headers, self._body(rec))


class LiveFetcher(Fetcher):
    """Stateless HTTP client: no cookie jar, no automatic redirects.

    ``host_map`` pins hostnames to ``addr:port`` (``"*"`` pins all of them),
    like curl's --resolve; the Host header still carries the original name.
    """

    def __init__(self, host_map: Optional[dict] = None, timeout: float = 10.0, retries: int = 2):
        super().__init__()
        self.host_map = dict(host_map or {})
        self.timeout = timeout
        self.retries = retries

    def _target(self, uri: str) -> tuple[str, dict]:
        parts = urlsplit(uri)
        host = parts.hostname or ""
        addr = self.host_map.get(host, self.host_map.get("*"))
        if addr is None:
            return uri, {}
        rewritten = urlunsplit((parts.scheme, addr, parts.path, parts.query, ""))
        return rewritten, {"Host": parts.netloc}

    def fetch(self, uri: str, referer: str = "", user_agent: str = "") -> Response:
        import requests

        uri = normalize_uri(uri)
        target, headers = self._target(uri)
        if referer:
            headers["Referer"] = referer
        if user_agent:
            headers["User-Agent"] = user_agent
        last_exc = None
        for attempt in range(1, self.retries + 2):
            self._record("GET", uri, referer, user_agent)
            try:
                resp = requests.get(target, headers=headers, timeout=self.timeout, allow_redirects=False)
            except requests.RequestException as exc:
                last_exc = exc
                log.warning("fetch %s failed (attempt %d): %s", uri, attempt, exc)
                continue
            hdrs = {k.lower(): v for k, v in resp.headers.items()}
            return Response(uri, resp.status_code, hdrs, resp.content)
        raise FetchError(f"fetch failed: {last_exc}", uri, attempts=self.retries + 1)


class RateLimiter:
    """Per-engine daily query budget shared across worker threads."""

    def __init__(self, caps: dict):
        self.caps = {k: int(v) for k, v in caps.items()}
        self._used: dict[tuple[str, date], int] = {}
        self._lock = threading.Lock()
        self.dispatch_log: list[tuple[str, date]] = []

    def acquire(self, engine: str, day: date) -> bool:
        cap = self.caps.get(engine)
        with self._lock:
            used = self._used.get((engine, day), 0)
            if cap is not None and used >= cap:
                return False
            self._used[(engine, day)] = used + 1
            self.dispatch_log.append((engine, day))
            return True

    def dispatched(self, engine: str, day: date) -> int:
        with self._lock:
            return self._used.get((engine, day), 0)
