"""Command-line entry point.

Every stage can run standalone from explicit flags; ``run`` drives the whole
pipeline from a config file and records a manifest. Exit codes: 0 success,
1 configuration error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2

log = logging.getLogger("tsshunt")


class UsageError(Exception):
    """Bad flag values caught after argparse (exit code 1)."""


def _existing(path: str | None, what: str, required: bool = True) -> Path | None:
    if path is None:
        if required:
            raise UsageError(f"{what} is required")
        return None
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} does not exist: {p}")
    return p


def _env_path(flag_value, env_key: str):
    return flag_value if flag_value is not None else os.environ.get("TSSHUNT_" + env_key)


# subcommands

def cmd_seed(args) -> int:
    from .seedgen import build_ngram_model, generate_phrases, load_corpus, parse_thresholds, select_vocabulary, tokenize_corpus, write_phrases
    from .text import load_stopwords

    corpus = _existing(_env_path(args.corpus, "CORPUS"), "--corpus")
    stop = _existing(args.stopwords, "--stopwords", required=False)
    thresholds = parse_thresholds(args.threshold)
    stats = tokenize_corpus(load_corpus(corpus), load_stopwords(stop) if stop else None)
    vocab = select_vocabulary(stats, args.min_doc_count)
    model = build_ngram_model(stats, vocab, args.max_n)
    phrases = generate_phrases(model, thresholds)
    write_phrases(phrases, args.out)
    print(f"wrote {len(phrases)} phrases to {args.out}")
    return EXIT_OK


def cmd_crawl(args) -> int:
    from .ingest import FixtureFetcher, FixtureResolver, LiveFetcher, SerpFixtures, SnapshotStore, SystemResolver, crawl, load_engines
    from .ingest.models import FetcherConfig
    from .pipeline import write_jsonl
    from .seedgen import read_phrases

    phrases = [p.text for p in read_phrases(_existing(args.phrases, "--phrases"))]
    engines = load_engines(_existing(args.engine_file, "--engine-file", required=False))
    if args.engines:
        wanted = [e.strip() for e in args.engines.split(",") if e.strip()]
        unknown = sorted(set(wanted) - set(engines))
        if unknown:
            raise UsageError(f"unknown engines: {', '.join(unknown)}")
        engines = {k: engines[k] for k in wanted}
    if args.mode == "fixture":
        fetcher = FixtureFetcher.from_jsonl(_existing(_env_path(args.fetch_fixtures, "FETCH_FIXTURES"), "--fetch-fixtures"))
        resolver = FixtureResolver.from_file(_existing(_env_path(args.zone, "ZONE"), "--zone"))
        serps = SerpFixtures(_existing(_env_path(args.serp_fixtures, "SERP_FIXTURES"), "--serp-fixtures"))
    else:
        fetcher, resolver, serps = LiveFetcher(), SystemResolver(), None
    out = Path(args.out)
    store = SnapshotStore(out / "snapshots")
    result = crawl(phrases, engines, fetcher=fetcher, resolver=resolver, store=store,
                   config=FetcherConfig(mode=args.mode), serp_fixtures=serps, max_hops=args.max_hops)
    result.write(out)
    write_jsonl(({"method": e.method, "uri": e.uri, "host": e.host, "referer": e.referer}
                 for e in sorted(fetcher.request_log, key=lambda e: (e.uri, e.referer))),
                out / "listings" / "requests.jsonl")
    write_jsonl(({"engine": e, "phrase": p, "reason": r} for e, p, r in result.skipped),
                out / "listings" / "skipped.jsonl")
    print(f"{len(result.listings)} listings, {len(store)} snapshots, {len(result.skipped)} skipped queries")
    return EXIT_OK


def cmd_train(args) -> int:
    from .pipeline import train_model, write_roc

    model, metrics = train_model(_existing(args.labeled, "--labeled"), args.folds, args.alpha, args.threshold, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    if args.roc:
        write_roc(metrics, Path(args.roc))
    print(f"cross-validated AUC {metrics.auc:.4f}; model written to {out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    from .classify import Categorizer, ReputationList, TrainedModel
    from .ingest import SnapshotStore, read_tracked
    from .pipeline import label_listings, write_jsonl

    model = TrainedModel.load(_existing(_env_path(args.model, "MODEL"), "--model"))
    snaps = _existing(_env_path(args.snapshots, "SNAPSHOTS"), "--snapshots")
    chains = _existing(args.chains or str(Path(snaps).parent / "listings" / "chains.jsonl"), "--chains")
    rep = _existing(_env_path(args.reputation, "REPUTATION"), "--reputation", required=False)
    categorizer = Categorizer(model, ReputationList.load(rep) if rep else ReputationList([]))
    rows = label_listings(read_tracked(chains), SnapshotStore(snaps), categorizer)
    write_jsonl(rows, Path(args.out))
    n_tss = len({r["final_domain"] for r in rows if r["major"] == "TSS"})
    print(f"labelled {len(rows)} listings; {n_tss} TSS final domains")
    return EXIT_OK


def cmd_amplify(args) -> int:
    from .amplify import PageOracle, expand, read_domains, write_results
    from .classify import TrainedModel
    from .ingest import SnapshotStore, read_tracked
    from .pipeline import crawl_window, load_dns

    if args.lambda_cap < 1:
        raise UsageError("amplification lambda must be ≥ 1")
    seeds = read_domains(_existing(args.seeds, "--seeds"))
    dns = [_existing(p, "--dns") for p in args.dns]
    store = load_dns(*dns)
    model = TrainedModel.load(_existing(_env_path(args.model, "MODEL"), "--model"))
    snaps = _existing(_env_path(args.snapshots, "SNAPSHOTS"), "--snapshots", required=False)
    oracle = PageOracle(SnapshotStore(snaps) if snaps else None, _existing(args.archive, "--archive", required=False))
    window = _window(args, read_tracked, crawl_window, store)
    results, sets = expand(seeds, store, window, args.lambda_cap, oracle, model,
                           subnet_mode=args.subnet_mode, workers=args.workers)
    paths = write_results(results, sets, args.out)
    print(f"{len(sets.seed_set)} seeds -> {len(sets.final)} final TSS domains ({paths['final']})")
    return EXIT_OK


def _window(args, read_tracked, crawl_window, store):
    from datetime import timedelta

    from .amplify import Window

    if args.chains:
        return crawl_window(read_tracked(_existing(args.chains, "--chains")), args.delta_days)
    rng = store.time_range
    if rng is None:
        raise UsageError("no DNS observations to date the window; pass --chains")
    return Window(rng[0], rng[1], timedelta(days=args.delta_days))


def cmd_cluster(args) -> int:
    from .amplify import PageOracle, read_domains
    from .cluster import ClusterParams, build_tree
    from .ingest import SnapshotStore, read_tracked
    from .pipeline import crawl_window, load_dns, write_campaigns_csv

    final = read_domains(_existing(args.final, "--final"))
    tracked = read_tracked(_existing(args.chains, "--chains"))
    store = load_dns(*[_existing(p, "--dns") for p in args.dns])
    snaps = _existing(_env_path(args.snapshots, "SNAPSHOTS"), "--snapshots", required=False)
    oracle = PageOracle(SnapshotStore(snaps) if snaps else None, _existing(args.archive, "--archive", required=False))
    window = crawl_window(tracked, args.delta_days)
    pages = {d: oracle(d, window) for d in final}
    tree = build_tree(final, [t.chain for t in tracked], store, pages, ClusterParams(seed=args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tree.write(out)
    write_campaigns_csv(tree, out.with_suffix(".campaigns.csv"))
    for c in tree.campaigns:
        row = c.row()
        print("|".join(str(row[k]) if k != "samples" else ",".join(row[k]) for k in row))
    return EXIT_OK


def cmd_report(args) -> int:
    from .config import validate_config
    from .pipeline import _Ctx, _stage_report

    inputs = _existing(args.inputs, "--inputs")
    # a run directory: reuse the report stage with paths from the flags
    from .config import PipelineConfig

    cfg = PipelineConfig(run_dir=inputs)
    if args.config:
        cfg = validate_config(args.config)
        cfg.run_dir = inputs
    for key, value in (("blacklists", args.blacklists), ("phone_meta", args.phone_meta),
                       ("popularity", args.popularity)):
        if value is not None:
            cfg.paths[key] = _existing(value, f"--{key.replace('_', '-')}")
    cfg.report = {"figures": not args.no_figures}
    cfg.crawl = cfg.crawl or {}
    ctx = _Ctx(cfg, inputs)
    _stage_report(ctx)
    out = Path(args.out) if args.out else inputs / "results" / "reports"
    if args.out:
        import shutil
        shutil.rmtree(out, ignore_errors=True)
        shutil.copytree(inputs / "results" / "reports", out)
    print(f"reports written to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .config import validate_config
    from .pipeline import STAGES, run_pipeline

    cfg = validate_config(args.config)
    if args.mode:
        cfg.mode = args.mode
    if args.run_dir:
        cfg.run_dir = Path(args.run_dir)
    stages = [s.strip() for s in args.stages.split(",")] if args.stages else list(STAGES)
    manifest = run_pipeline(cfg, stages, force=args.force)
    for name, rec in manifest.to_json()["stages"].items():
        print(f"{name}|{rec['status']}|{rec['seconds']}")
    print(f"manifest: {Path(cfg.run_dir) / 'manifest.json'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .config import validate_config

    validate_config(args.config)
    print("config ok")
    return EXIT_OK


def cmd_demo_data(args) -> int:
    from .demo import build_demo

    path = build_demo(args.out, seed=args.seed)
    print(f"demo dataset written; run it with: tsshunt run --config {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsshunt", description="Find and cluster tech-support scam sites from search listings.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("seed", help="generate search phrases from a scam-page corpus")
    s.add_argument("--corpus", help="directory of pages or JSONL of {doc_id, text}")
    s.add_argument("--stopwords")
    s.add_argument("--max-n", type=int, default=7)
    s.add_argument("--min-doc-count", type=int, default=10)
    s.add_argument("--threshold", action="append", default=[], metavar="n=LAMBDA", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_seed)

    s = sub.add_parser("crawl", help="query engines, follow listings, capture pages and DNS")
    s.add_argument("--phrases", required=True)
    s.add_argument("--engines", help="comma-separated engine names")
    s.add_argument("--engine-file", help="JSON engine descriptors (default: bundled)")
    s.add_argument("--mode", choices=("fixture", "live"), default="fixture")
    s.add_argument("--serp-fixtures")
    s.add_argument("--fetch-fixtures")
    s.add_argument("--zone")
    s.add_argument("--max-hops", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_crawl)

    s = sub.add_parser("train", help="train the page classifier with k-fold cross-validation")
    s.add_argument("--labeled", required=True, help="JSONL of {doc_id, text, label}")
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--threshold", type=float, default=0.6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--roc", help="also write the cross-validated ROC here")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", help="label tracked listings")
    s.add_argument("--model")
    s.add_argument("--snapshots")
    s.add_argument("--chains", help="chains.jsonl (default: next to the snapshots directory)")
    s.add_argument("--reputation")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("amplify", help="expand confirmed scam domains through passive DNS")
    s.add_argument("--seeds", required=True)
    s.add_argument("--dns", action="append", required=True, help="observation JSONL (repeatable)")
    s.add_argument("--model")
    s.add_argument("--snapshots")
    s.add_argument("--archive")
    s.add_argument("--chains", help="date the window from these tracked listings")
    s.add_argument("--lambda", dest="lambda_cap", type=int, default=500)
    s.add_argument("--delta-days", type=float, default=7.0)
    s.add_argument("--subnet-mode", choices=("slash24", "exact"), default="slash24")
    s.add_argument("--workers", type=int, default=4)
    s.add_argument("--out", default="results")
    s.set_defaults(func=cmd_amplify)

    s = sub.add_parser("cluster", help="group final domains into campaigns")
    s.add_argument("--final", required=True)
    s.add_argument("--chains", required=True)
    s.add_argument("--dns", action="append", required=True)
    s.add_argument("--snapshots")
    s.add_argument("--archive")
    s.add_argument("--delta-days", type=float, default=7.0)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("report", help="measurement reports and figures for a run directory")
    s.add_argument("--inputs", required=True, help="run directory")
    s.add_argument("--config")
    s.add_argument("--blacklists")
    s.add_argument("--phone-meta")
    s.add_argument("--popularity")
    s.add_argument("--no-figures", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("run", help="run pipeline stages from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--stages", help="comma-separated subset (default: all)")
    s.add_argument("--mode", choices=("fixture", "live"))
    s.add_argument("--run-dir")
    s.add_argument("--force", action="store_true", help="rerun stages even when inputs are unchanged")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("validate", help="check a config file")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("demo-data", help="write the bundled demo dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_demo_data)
    return p


def main(argv=None) -> int:
    from .config import ConfigError
    from .pipeline import StageError
    from .seedgen import SeedError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command == "seed" and "threshold" in str(exc) else EXIT_STAGE
    except StageError as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
