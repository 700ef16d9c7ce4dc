from __future__ import annotations

import json
import threading
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterator, Optional

from ..domains import host_of
from .fetch import FetchError, Fetcher, FixtureMiss
from .models import FetcherConfig, PageSnapshot, RedirectChain, format_time, parse_time


class SnapshotConflict(RuntimeError):
    pass


def _stamp(dt: datetime) -> str:
    return format_time(dt).replace("-", "").replace(":", "")


class SnapshotStore:
    """HTML snapshots keyed by (fqdn, fetched_at).

    On disk: ``<root>/<fqdn>/<stamp>.html`` plus an ``index.jsonl`` ledger.
    A key is written once; rewriting it with different bytes is an error.
    """

    INDEX = "index.jsonl"

    def __init__(self, root=None):
        self.root = Path(root) if root else None
        self._items: dict[tuple[str, str], PageSnapshot] = {}
        self._lock = threading.Lock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self):
        index = self.root / self.INDEX
        if not index.exists():
            return
        with index.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                html = (self.root / row["path"]).read_bytes()
                snap = PageSnapshot(row["fqdn"], parse_time(row["fetched_at"]), html, row["sha256"], row.get("uri", ""))
                self._items[snap.key] = snap

    def put(self, snap: PageSnapshot) -> PageSnapshot:
        with self._lock:
            existing = self._items.get(snap.key)
            if existing is not None:
                if existing.content_hash != snap.content_hash:
                    raise SnapshotConflict(f"snapshot {snap.key} already stored with different content")
                return existing
            self._items[snap.key] = snap
            if self.root is not None:
                rel = Path(snap.fqdn) / f"{_stamp(snap.fetched_at)}.html"
                (self.root / rel).parent.mkdir(parents=True, exist_ok=True)
                (self.root / rel).write_bytes(snap.html)
                with (self.root / self.INDEX).open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({
                        "fqdn": snap.fqdn,
                        "fetched_at": format_time(snap.fetched_at),
                        "sha256": snap.content_hash,
                        "uri": snap.uri,
                        "path": rel.as_posix(),
                    }) + "\n")
            return snap

    def __len__(self):
        return len(self._items)

    def __iter__(self) -> Iterator[PageSnapshot]:
        return iter(sorted(self._items.values(), key=lambda s: s.key))

    def for_domain(self, fqdn: str) -> list[PageSnapshot]:
        return sorted((s for s in self._items.values() if s.fqdn == fqdn), key=lambda s: s.fetched_at)

    def latest(self, fqdn: str, before: Optional[datetime] = None) -> Optional[PageSnapshot]:
        snaps = self.for_domain(fqdn)
        if before is not None:
            snaps = [s for s in snaps if s.fetched_at <= before]
        return snaps[-1] if snaps else None

    def domains(self) -> list[str]:
        return sorted({s.fqdn for s in self._items.values()})


def capture_page(
    fqdn_or_uri: str,
    config: FetcherConfig,
    *,
    fetcher: Fetcher,
    store: SnapshotStore,
    clock: Callable[[], datetime],
) -> PageSnapshot:
    """Fetch one page and persist it; raises FetchError after retries run out."""
    uri = fqdn_or_uri if "://" in fqdn_or_uri else f"http://{fqdn_or_uri}/"
    attempts = 0
    last: Optional[FetchError] = None
    tries = 1 if config.mode == "fixture" else config.retries + 1
    while attempts < tries:
        attempts += 1
        try:
            resp = fetcher.fetch(uri, referer=config.referer, user_agent=config.user_agent)
            break
        except FixtureMiss:
            raise
        except FetchError as exc:
            last = exc
    else:
        raise FetchError(f"capture of {uri} failed after {attempts} attempts: {last}", uri, attempts)
    snap = PageSnapshot(host_of(uri), clock(), resp.body, uri=uri)
    return store.put(snap)


def snapshot_chain(chain: RedirectChain, store: SnapshotStore, fetched_at: datetime) -> list[PageSnapshot]:
    """Persist the HTML of every hop captured while tracking ``chain``."""
    last_hop = {}
    for hop in chain.hops:
        if hop.uri in chain.bodies:
            # one key per (fqdn, time): a domain seen twice keeps its later page
            last_hop[hop.fqdn] = hop
    return [
        store.put(PageSnapshot(h.fqdn, fetched_at, chain.bodies[h.uri], uri=h.uri))
        for h in last_hop.values()
    ]
