"""Seed expansion through co-hosting: every domain seen on a seed's IPs (or
their /24) is a candidate, and candidates whose pages classify as scams are
added to the seed's amplification set."""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from ..classify.naive_bayes import TrainedModel, classify_page
from ..domains import normalize_fqdn
from ..ingest.capture import SnapshotStore
from .store import DnsStore, Window, rhdn, rhip

log = logging.getLogger(__name__)

DEFAULT_LAMBDA = 500


class PageOracleError(RuntimeError):
    """The page source failed outright (as opposed to simply having no page)."""


@dataclass
class AmplificationResult:
    seed: str
    candidates: frozenset = frozenset()
    confirmed: frozenset = frozenset()
    capped: bool = False
    errored: bool = False
    error: str = ""
    missing: frozenset = frozenset()

    def __post_init__(self):
        if not self.confirmed <= self.candidates:
            raise ValueError("confirmed domains must be candidates")
        if self.capped and self.confirmed:
            raise ValueError("a capped seed has no confirmed domains")

    @property
    def factor(self) -> int:
        return len(self.confirmed)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "factor": self.factor,
            "capped": self.capped,
            "errored": self.errored,
            "error": self.error,
            "candidates": sorted(self.candidates),
            "confirmed": sorted(self.confirmed),
            "missing": sorted(self.missing),
        }

    @classmethod
    def from_json(cls, d: dict) -> "AmplificationResult":
        return cls(
            d["seed"], frozenset(d["candidates"]), frozenset(d["confirmed"]),
            d["capped"], d.get("errored", False), d.get("error", ""), frozenset(d.get("missing", [])),
        )


@dataclass(frozen=True)
class TssSets:
    seed_set: frozenset
    expanded: frozenset
    final: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "final", self.seed_set | self.expanded)


class PageOracle:
    """Looks up a domain's page: snapshot store within the widened window,
    then an archive directory of ``<fqdn>.html`` files, then a miss (None)."""

    def __init__(self, store: Optional[SnapshotStore] = None, archive_dir=None):
        self.store = store
        self.archive_dir = Path(archive_dir) if archive_dir else None

    def __call__(self, fqdn: str, window: Window) -> Optional[bytes]:
        if self.store is not None:
            lo, hi = window.widened()
            snaps = [s for s in self.store.for_domain(fqdn) if lo <= s.fetched_at <= hi]
            if snaps:
                return snaps[-1].html
        if self.archive_dir is not None:
            path = self.archive_dir / f"{fqdn}.html"
            try:
                if path.is_file():
                    return path.read_bytes()
            except OSError as exc:
                raise PageOracleError(f"{path}: {exc}") from exc
        return None


def candidates_of(store: DnsStore, seed: str, window: Window, subnet_mode: str = "slash24") -> set[str]:
    out: set[str] = set()
    for ip in rhip(store, seed, window):
        out |= rhdn(store, ip, window, subnet_mode=subnet_mode)
    out.discard(seed)
    return out


def expand(
    seeds: Iterable[str],
    store: DnsStore,
    window: Window,
    lambda_cap: int = DEFAULT_LAMBDA,
    page_oracle: Callable[[str, Window], Optional[bytes]] = None,
    model: TrainedModel = None,
    *,
    subnet_mode: str = "slash24",
    workers: int = 4,
    rounds: int = 1,
) -> tuple[list[AmplificationResult], TssSets]:
    """One expansion round by default; ``rounds > 1`` re-expands newly confirmed domains."""
    seeds = sorted({normalize_fqdn(s) for s in seeds})
    if not seeds:
        raise ValueError("expand needs at least one seed")
    if lambda_cap < 1:
        raise ValueError("amplification lambda must be >= 1")
    if page_oracle is None or model is None:
        raise ValueError("expand needs a page oracle and a model")

    verdicts: dict[str, object] = {}  # fqdn -> True/False, None (missing) or an exception

    def judge(fqdn: str):
        try:
            html = page_oracle(fqdn, window)
        except PageOracleError as exc:
            return exc
        if html is None:
            return None
        return classify_page(model, html).is_tss

    all_results: list[AmplificationResult] = []
    frontier, seen = seeds, set(seeds)
    for _ in range(max(1, rounds)):
        cands = {s: candidates_of(store, s, window, subnet_mode) for s in frontier}
        todo = sorted({d for c in cands.values() if len(c) <= lambda_cap for d in c} - verdicts.keys())
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for fqdn, verdict in zip(todo, pool.map(judge, todo)):
                verdicts[fqdn] = verdict
        results = [_assemble(s, cands[s], lambda_cap, verdicts) for s in frontier]
        all_results.extend(results)
        new = set()
        for r in results:
            new |= r.confirmed
        frontier = sorted(new - seen)
        seen |= new
        if not frontier:
            break

    all_results.sort(key=lambda r: r.seed)
    expanded = frozenset().union(*(r.confirmed for r in all_results))
    return all_results, TssSets(frozenset(seeds), expanded)


def _assemble(seed: str, cands: set[str], lambda_cap: int, verdicts: dict) -> AmplificationResult:
    if len(cands) > lambda_cap:
        return AmplificationResult(seed, frozenset(cands), capped=True)
    failures = sorted(d for d in cands if isinstance(verdicts[d], Exception))
    if failures:
        msg = f"page oracle failed for {failures[0]}: {verdicts[failures[0]]}"
        log.warning("seed %s: %s", seed, msg)
        return AmplificationResult(seed, frozenset(cands), errored=True, error=msg)
    confirmed = frozenset(d for d in cands if verdicts[d] is True)
    missing = frozenset(d for d in cands if verdicts[d] is None)
    return AmplificationResult(seed, frozenset(cands), confirmed, missing=missing)


def summary(results: list[AmplificationResult], sets: TssSets) -> dict:
    """Expansion statistics; seeds that confirmed nothing are left out of the
    factor histogram. Raw counts add factors, dedup counts unique domains.
    ``expanded_count`` counts only domains that were not already seeds."""
    contributing = [r for r in results if r.factor >= 1]
    hist = Counter(r.factor for r in contributing)
    return {
        "seed_count": len(sets.seed_set),
        "expanded_count": len(sets.final - sets.seed_set),
        "final_count": len(sets.final),
        "factor_histogram": {str(k): hist[k] for k in sorted(hist)},
        "contributing_seeds": len(contributing),
        "expanded_raw": sum(r.factor for r in results),
        "expanded_dedup": len(sets.expanded),
        "capped_seeds": sorted(r.seed for r in results if r.capped),
        "errored_seeds": sorted(r.seed for r in results if r.errored),
    }


def write_results(results: list[AmplificationResult], sets: TssSets, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out / "amplification.jsonl",
        "summary": out / "amplification_summary.json",
        "final": out / "final_tss.txt",
    }
    with open(paths["results"], "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")
    paths["summary"].write_text(json.dumps(summary(results, sets), indent=2, sort_keys=True) + "\n", "utf-8")
    paths["final"].write_text("".join(d + "\n" for d in sorted(sets.final)), "utf-8")
    return paths


def read_results(path) -> list[AmplificationResult]:
    with open(path, encoding="utf-8") as fh:
        return [AmplificationResult.from_json(json.loads(line)) for line in fh if line.strip()]


def read_domains(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [normalize_fqdn(line.strip()) for line in fh if line.strip() and not line.startswith("#")]
