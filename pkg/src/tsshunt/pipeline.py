"""Stage runner: seed -> crawl -> classify -> amplify -> cluster -> report.

Each run lives in one directory (snapshots/, listings/, dns/, results/) with
a ``manifest.json`` recording, per stage, a key over its inputs and the
sha256 of every output. A stage whose input key matches the manifest and
whose outputs still hash as recorded is skipped; an output that no longer
matches its recorded hash aborts the run.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import time
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Callable, Iterable, Optional

from .amplify import DnsStore, PageOracle, Window, expand, read_domains, read_results, write_results
from .analyze import ReportInputs, generate_reports, load_feeds, load_phone_meta
from .classify import Categorizer, ReputationList, TrainedModel, categorize_aggressiveness, read_labeled, train_classifier
from .classify.phones import extract_phone_numbers
from .cluster import CAMPAIGN_COLUMNS, ClusterParams, ClusterTree, build_tree
from .cluster.labels import DEFAULT_COMMON_WORDS
from .config import PipelineConfig
from .ingest import (
    FixtureFetcher,
    FixtureResolver,
    LiveFetcher,
    SerpFixtures,
    SnapshotStore,
    SystemResolver,
    crawl,
    load_engines,
    read_tracked,
)
from .ingest.dns import read_observations
from .ingest.models import FetcherConfig, format_time
from .ingest.tracker import DEFAULT_AD_NETWORK_HOSTS
from .seedgen import build_ngram_model, generate_phrases, load_corpus, read_phrases, select_vocabulary, tokenize_corpus, write_phrases
from .text import load_stopwords

log = logging.getLogger(__name__)

STAGES = ("seed", "crawl", "classify", "amplify", "cluster", "report")
DEPENDS = {
    "seed": (),
    "crawl": ("seed",),
    "classify": ("crawl",),
    "amplify": ("crawl", "classify"),
    "cluster": ("crawl", "amplify"),
    "report": ("crawl", "classify", "amplify", "cluster"),
}
MANIFEST = "manifest.json"


class StageError(RuntimeError):
    pass


class HashMismatch(StageError):
    pass


# hashing

def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def tree_sha256(path: Path) -> str:
    """Hash of a directory: its files' relative paths and contents, in order."""
    h = hashlib.sha256()
    for p in sorted(q for q in path.rglob("*") if q.is_file()):
        h.update(f"{p.relative_to(path).as_posix()}\t{file_sha256(p)}\n".encode())
    return h.hexdigest()


def path_sha256(path: Path) -> str:
    return tree_sha256(path) if path.is_dir() else file_sha256(path)


def _key(parts: dict) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()


# manifest

@dataclass
class StageRecord:
    input_key: str
    outputs: dict[str, str]
    seconds: float
    status: str = "ran"        # ran | skipped

    def to_json(self) -> dict:
        return {"input_key": self.input_key, "outputs": dict(sorted(self.outputs.items())),
                "seconds": round(self.seconds, 3), "status": self.status}

    @classmethod
    def from_json(cls, d: dict) -> "StageRecord":
        return cls(d["input_key"], dict(d["outputs"]), float(d.get("seconds", 0.0)), d.get("status", "ran"))


@dataclass
class RunManifest:
    run_id: str
    config: dict
    stages: dict[str, StageRecord] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "stages": {s: self.stages[s].to_json() for s in STAGES if s in self.stages},
            "timings": {s: round(self.stages[s].seconds, 3) for s in STAGES if s in self.stages},
        }

    def write(self, run_dir: Path) -> Path:
        path = run_dir / MANIFEST
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n", "utf-8")
        return path

    @classmethod
    def load(cls, run_dir: Path) -> Optional["RunManifest"]:
        path = run_dir / MANIFEST
        if not path.exists():
            return None
        d = json.loads(path.read_text("utf-8"))
        return cls(d["run_id"], d.get("config", {}),
                   {s: StageRecord.from_json(r) for s, r in d.get("stages", {}).items()})


def verify_outputs(run_dir: Path, stage: str, record: StageRecord) -> None:
    for rel, recorded in sorted(record.outputs.items()):
        p = run_dir / rel
        if not p.exists():
            raise HashMismatch(f"hash mismatch: {rel} from stage {stage!r} is missing")
        found = path_sha256(p)
        if found != recorded:
            raise HashMismatch(f"hash mismatch: {rel} from stage {stage!r} "
                               f"(recorded {recorded[:12]}, found {found[:12]})")


# shared helpers

def load_dns(*paths) -> DnsStore:
    obs = []
    for p in paths:
        if p is not None and Path(p).exists():
            obs.extend(read_observations(p))
    return DnsStore(obs)


def crawl_window(tracked, delta_days: float) -> Window:
    times = [tr.fetched_at for tr in tracked]
    if not times:
        raise StageError("no tracked listings to date the expansion window")
    return Window(min(times), max(times), timedelta(days=delta_days))


def train_model(labeled_path, folds: int = 10, alpha: float = 1.0, threshold: float = 0.6, seed: int = 0):
    labeled = read_labeled(labeled_path)
    return train_classifier(labeled, folds, alpha=alpha, threshold=threshold, seed=seed)


def write_roc(metrics, path: Path) -> Path:
    payload = {"auc": metrics.auc, "points": [list(p) for p in metrics.roc_points],
               "tpr": metrics.tpr_at_threshold, "fpr": metrics.fpr_at_threshold}
    path.write_text(json.dumps(payload, indent=2) + "\n", "utf-8")
    return path


def label_listings(tracked, store: SnapshotStore, categorizer: Categorizer) -> list[dict]:
    rows = []
    for tr in tracked:
        chain = tr.chain
        snap = store.latest(chain.final_domain, tr.fetched_at) if chain.completed else None
        lab = categorizer.categorize_listing(tr.listing, chain, snap)
        rows.append({
            "engine": tr.listing.engine,
            "phrase": tr.listing.phrase,
            "kind": tr.listing.kind,
            "position": tr.listing.position,
            "uri": tr.listing.uri,
            "final_domain": lab.final_domain,
            "major": lab.category.major,
            "minor": lab.category.minor,
            "reason": lab.category.reason,
            "score": lab.score,
            "phones": lab.phones,
        })
    return rows


def write_jsonl(rows: Iterable[dict], path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_campaigns_csv(tree: ClusterTree, path: Path) -> Path:
    from .analyze.reports import write_csv
    return write_csv([c.row() for c in tree.campaigns], list(CAMPAIGN_COLUMNS), path)


# stages

@dataclass
class _Ctx:
    cfg: PipelineConfig
    run: Path

    def p(self, rel: str) -> Path:
        return self.run / rel

    @property
    def ad_hosts(self) -> tuple:
        hosts = self.cfg.crawl.get("ad_network_hosts")
        return tuple(hosts) if hosts else DEFAULT_AD_NETWORK_HOSTS


def _stage_seed(ctx: _Ctx) -> list[str]:
    c = ctx.cfg.seedgen
    stop = ctx.cfg.path("stopwords")
    stats = tokenize_corpus(load_corpus(ctx.cfg.path("corpus")), load_stopwords(stop) if stop else None)
    vocab = select_vocabulary(stats, c["min_doc_count"])
    model = build_ngram_model(stats, vocab, c["max_n"])
    phrases = generate_phrases(model, {int(k): float(v) for k, v in c["thresholds"].items()})
    ctx.p("results").mkdir(parents=True, exist_ok=True)
    write_phrases(phrases, ctx.p("results/phrases.jsonl"))
    log.info("seed: %d phrases from %d vocabulary words", len(phrases), len(vocab))
    return ["results/phrases.jsonl"]


def _stage_crawl(ctx: _Ctx) -> list[str]:
    cfg, c = ctx.cfg, ctx.cfg.crawl
    phrases = [ph.text for ph in read_phrases(ctx.p("results/phrases.jsonl"))]
    engines = load_engines(cfg.path("engines"))
    if c["engines"]:
        unknown = sorted(set(c["engines"]) - set(engines))
        if unknown:
            raise StageError(f"unknown engines: {', '.join(unknown)}")
        engines = {k: v for k, v in engines.items() if k in c["engines"]}
    if cfg.mode == "fixture":
        fetcher = FixtureFetcher.from_jsonl(cfg.path("fetch_fixtures"))
        resolver = FixtureResolver.from_file(cfg.path("zone"))
        serps = SerpFixtures(cfg.path("serp_fixtures"))
    else:
        fetcher = LiveFetcher(c["host_map"])
        resolver = SystemResolver()
        serps = None
    shutil.rmtree(ctx.p("snapshots"), ignore_errors=True)
    store = SnapshotStore(ctx.p("snapshots"))
    fconf = FetcherConfig(user_agent=c["user_agent"], daily_rate_cap=c["daily_rate_cap"], mode=cfg.mode)
    result = crawl(phrases, engines, fetcher=fetcher, resolver=resolver, store=store, config=fconf,
                   serp_fixtures=serps, start=c["start"], max_hops=c["max_hops"],
                   ad_network_hosts=ctx.ad_hosts, workers=c["workers"])
    result.write(ctx.run)
    write_jsonl(({"method": e.method, "uri": e.uri, "host": e.host, "referer": e.referer}
                 for e in sorted(fetcher.request_log, key=lambda e: (e.uri, e.referer))),
                ctx.p("listings/requests.jsonl"))
    write_jsonl(({"engine": e, "phrase": p, "reason": r} for e, p, r in result.skipped),
                ctx.p("listings/skipped.jsonl"))
    log.info("crawl: %d listings, %d snapshots, %d skipped queries",
             len(result.listings), len(store), len(result.skipped))
    return ["listings/listings.jsonl", "listings/chains.jsonl", "listings/requests.jsonl",
            "listings/skipped.jsonl", "dns/observations.jsonl", "snapshots"]


def _stage_classify(ctx: _Ctx) -> list[str]:
    cfg, c = ctx.cfg, ctx.cfg.classify
    outputs = ["results/model.json", "results/labels.jsonl", "results/seed_tss.txt"]
    model_path = cfg.path("model")
    if model_path is not None and model_path.exists():
        model = TrainedModel.load(model_path).with_threshold(c["threshold"])
    else:
        model, metrics = train_model(cfg.path("training"), c["folds"], c["alpha"], c["threshold"], cfg.seed)
        write_roc(metrics, ctx.p("results/roc.json"))
        outputs.append("results/roc.json")
        log.info("classify: trained model, cross-validated AUC %.4f", metrics.auc)
    model.save(ctx.p("results/model.json"))
    rep_path = cfg.path("reputation")
    reputation = ReputationList.load(rep_path, c["reputation_top"]) if rep_path else ReputationList([])
    categorizer = Categorizer(model, reputation)
    tracked = read_tracked(ctx.p("listings/chains.jsonl"))
    rows = label_listings(tracked, SnapshotStore(ctx.p("snapshots")), categorizer)
    write_jsonl(rows, ctx.p("results/labels.jsonl"))
    seeds = sorted({r["final_domain"] for r in rows if r["major"] == "TSS"})
    ctx.p("results/seed_tss.txt").write_text("".join(d + "\n" for d in seeds), "utf-8")
    log.info("classify: %d listings, %d TSS final domains", len(rows), len(seeds))
    return outputs


def _stage_amplify(ctx: _Ctx) -> list[str]:
    cfg, c = ctx.cfg, ctx.cfg.amplify
    tracked = read_tracked(ctx.p("listings/chains.jsonl"))
    store = load_dns(cfg.path("passive_dns"), ctx.p("dns/observations.jsonl"))
    window = crawl_window(tracked, c["delta_days"])
    oracle = PageOracle(SnapshotStore(ctx.p("snapshots")), cfg.path("archive"))
    model = TrainedModel.load(ctx.p("results/model.json"))
    seeds = read_domains(ctx.p("results/seed_tss.txt"))
    results, sets = expand(seeds, store, window, c["lambda"], oracle, model,
                           subnet_mode=c["subnet_mode"], workers=c["workers"], rounds=c["rounds"])
    write_results(results, sets, ctx.p("results"))
    log.info("amplify: %d seeds -> %d final TSS domains", len(sets.seed_set), len(sets.final))
    return ["results/amplification.jsonl", "results/amplification_summary.json", "results/final_tss.txt"]


def _stage_cluster(ctx: _Ctx) -> list[str]:
    cfg, c = ctx.cfg, ctx.cfg.cluster
    tracked = read_tracked(ctx.p("listings/chains.jsonl"))
    final = read_domains(ctx.p("results/final_tss.txt"))
    store = load_dns(cfg.path("passive_dns"), ctx.p("dns/observations.jsonl"))
    window = crawl_window(tracked, ctx.cfg.amplify["delta_days"])
    oracle = PageOracle(SnapshotStore(ctx.p("snapshots")), cfg.path("archive"))
    pages = {d: oracle(d, window) for d in final}
    params = ClusterParams(
        seed=cfg.seed, k_min=c["k_min"], k_max=c["k_max"], svd_mass=c["svd_mass"],
        svd_max_rank=c["svd_max_rank"], top_k=c["top_k"],
        common_words=frozenset(c["common_words"]) if c["common_words"] is not None else DEFAULT_COMMON_WORDS,
    )
    tree = build_tree(final, [tr.chain for tr in tracked], store, pages, params)
    tree.write(ctx.p("results/clusters.json"))
    write_campaigns_csv(tree, ctx.p("results/campaigns.csv"))
    write_jsonl(({"fqdn": d,
                  "has_page": pages[d] is not None,
                  "minor": categorize_aggressiveness(pages[d]) if pages[d] is not None else None,
                  "phones": sorted({p.digits for p in extract_phone_numbers(pages[d])}) if pages[d] else []}
                 for d in final), ctx.p("results/final_domains.jsonl"))
    log.info("cluster: %d network clusters, %d campaigns", len(tree.ncl_clusters), len(tree.campaigns))
    return ["results/clusters.json", "results/campaigns.csv", "results/final_domains.jsonl"]


def _stage_report(ctx: _Ctx) -> list[str]:
    cfg = ctx.cfg
    tracked = read_tracked(ctx.p("listings/chains.jsonl"))
    labels = read_jsonl(ctx.p("results/labels.jsonl"))
    finals = read_jsonl(ctx.p("results/final_domains.jsonl"))
    tree = json.loads(ctx.p("results/clusters.json").read_text("utf-8"))
    roc_path = ctx.p("results/roc.json")
    popularity = {}
    if cfg.path("popularity"):
        popularity = {k: float(v) for k, v in json.loads(cfg.path("popularity").read_text("utf-8")).items()}
    inp = ReportInputs(
        tracked=tracked,
        labels=labels,
        final_tss=set(read_domains(ctx.p("results/final_tss.txt"))),
        amplification=read_results(ctx.p("results/amplification.jsonl")),
        campaigns=tree["campaigns"],
        feeds=load_feeds(cfg.path("blacklists")) if cfg.path("blacklists") else [],
        phone_meta=load_phone_meta(cfg.path("phone_meta")) if cfg.path("phone_meta") else {},
        popularity=popularity,
        phones={p for row in finals for p in row["phones"]},
        roc=json.loads(roc_path.read_text("utf-8")) if roc_path.exists() else None,
        ad_network_hosts=ctx.ad_hosts,
        minor_of={row["fqdn"]: row["minor"] for row in finals if row["minor"]},
    )
    shutil.rmtree(ctx.p("results/reports"), ignore_errors=True)
    generate_reports(inp, ctx.p("results/reports"), with_figures=cfg.report["figures"])
    return ["results/reports"]


STAGE_FUNCS: dict[str, Callable[[_Ctx], list[str]]] = {
    "seed": _stage_seed,
    "crawl": _stage_crawl,
    "classify": _stage_classify,
    "amplify": _stage_amplify,
    "cluster": _stage_cluster,
    "report": _stage_report,
}


def _external_inputs(cfg: PipelineConfig, stage: str) -> dict:
    """Config paths and settings each stage reads, hashed into its input key."""
    paths = {
        "seed": ("corpus", "stopwords"),
        "crawl": ("serp_fixtures", "fetch_fixtures", "zone", "engines"),
        "classify": ("training", "model", "reputation"),
        "amplify": ("passive_dns", "archive"),
        "cluster": ("passive_dns", "archive"),
        "report": ("blacklists", "phone_meta", "popularity"),
    }[stage]
    settings = {
        "seed": {"seedgen": cfg.seedgen},
        "crawl": {"mode": cfg.mode, "crawl": cfg.crawl},
        "classify": {"classify": cfg.classify, "seed": cfg.seed},
        "amplify": {"amplify": cfg.amplify},
        "cluster": {"cluster": cfg.cluster, "seed": cfg.seed, "delta_days": cfg.amplify["delta_days"]},
        "report": {"report": cfg.report, "ad_network_hosts": cfg.crawl.get("ad_network_hosts")},
    }[stage]
    hashed = {}
    for key in paths:
        p = cfg.path(key)
        hashed[key] = path_sha256(p) if p is not None and p.exists() else None
    return {"paths": hashed, "settings": json.loads(json.dumps(settings, default=str, sort_keys=True))}


def _order(stages: Optional[Iterable[str]]) -> list[str]:
    chosen = set(STAGES if stages is None else stages)
    unknown = sorted(chosen - set(STAGES))
    if unknown:
        raise StageError(f"unknown stages: {', '.join(unknown)}")
    return [s for s in STAGES if s in chosen]


def run_pipeline(cfg: PipelineConfig, stages: Optional[Iterable[str]] = None, force: bool = False) -> RunManifest:
    """Run the chosen stages in dependency order and return the manifest.

    A stage whose upstream stage has no recorded output (in this run or an
    earlier one in the same directory) fails with an error naming it.
    """
    order = _order(stages)
    run = Path(cfg.run_dir)
    run.mkdir(parents=True, exist_ok=True)
    snapshot = cfg.snapshot()
    prior = RunManifest.load(run)
    manifest = RunManifest(_key(snapshot)[:16], snapshot, dict(prior.stages) if prior else {})
    ctx = _Ctx(cfg, run)

    for stage in order:
        upstream = {}
        for dep in DEPENDS[stage]:
            rec = manifest.stages.get(dep)
            if rec is None:
                raise StageError(f"stage {stage!r} needs the output of stage {dep!r}, which has not run")
            verify_outputs(run, dep, rec)
            upstream[dep] = rec.outputs
        input_key = _key({"upstream": upstream, "external": _external_inputs(cfg, stage)})
        rec = manifest.stages.get(stage)
        if rec is not None and rec.input_key == input_key and not force:
            verify_outputs(run, stage, rec)
            manifest.stages[stage] = StageRecord(input_key, rec.outputs, 0.0, "skipped")
            log.info("%s: inputs unchanged, skipped", stage)
            continue
        # a changed stage invalidates everything downstream of it
        for later in STAGES[STAGES.index(stage) + 1:]:
            if stage in _ancestors(later):
                manifest.stages.pop(later, None)
        t0 = time.perf_counter()
        try:
            rels = STAGE_FUNCS[stage](ctx)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(f"stage {stage!r} failed: {exc}") from exc
        outputs = {rel: path_sha256(run / rel) for rel in rels}
        manifest.stages[stage] = StageRecord(input_key, outputs, time.perf_counter() - t0, "ran")
        manifest.write(run)
    manifest.write(run)
    return manifest


def _ancestors(stage: str) -> set[str]:
    out, todo = set(), list(DEPENDS[stage])
    while todo:
        s = todo.pop()
        if s not in out:
            out.add(s)
            todo.extend(DEPENDS[s])
    return out


__all__ = ["STAGES", "HashMismatch", "RunManifest", "StageError", "StageRecord", "run_pipeline",
           "file_sha256", "tree_sha256", "verify_outputs"]
