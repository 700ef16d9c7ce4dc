"""Assemble every report (JSON + CSV + figures) from a run's artifacts."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..classify.naive_bayes import TSS
from ..cluster.tree import CAMPAIGN_COLUMNS
from ..ingest.models import SR
from . import figures
from .reports import (
    ENTRY_KINDS,
    BlacklistFeed,
    NumberMeta,
    band_of,
    blacklist_overlap,
    identify_support_domains,
    lifetime_report,
    observation_logs,
    phone_age_report,
    pollution_by_popularity,
    pollution_counts,
    position_distribution,
    tld_ranking,
    write_csv,
    write_json,
)


@dataclass
class ReportInputs:
    tracked: list                      # TrackedListing
    labels: list[dict]                 # per-listing categorization rows
    final_tss: set[str]
    amplification: list = field(default_factory=list)    # AmplificationResult
    campaigns: list[dict] = field(default_factory=list)  # ClusterTree campaign rows
    feeds: list[BlacklistFeed] = field(default_factory=list)
    phone_meta: dict[str, NumberMeta] = field(default_factory=dict)
    popularity: dict[str, float] = field(default_factory=dict)  # phrase -> avg monthly searches
    phones: set[str] = field(default_factory=set)
    roc: Optional[dict] = None                             # {"points": [...], "auc": float}
    ad_network_hosts: tuple = ()
    minor_of: dict[str, str] = field(default_factory=dict)  # final fqdn -> aggressive|passive


def generate_reports(inp: ReportInputs, out_dir, with_figures: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    fig_dir = out / "figures"
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    chains = [tr.chain for tr in inp.tracked]
    kw = {"ad_network_hosts": inp.ad_network_hosts} if inp.ad_network_hosts else {}
    support = identify_support_domains(chains, inp.final_tss, **kw)

    sup_rows = [{"fqdn": d} for d in sorted(support)]
    written["support_domains"] = write_json(sorted(support), out / "support_domains.json")
    write_csv(sup_rows, ["fqdn"], out / "support_domains.csv")

    tlds = {"final_landing": tld_ranking(inp.final_tss), "support": tld_ranking(support)}
    written["tld_ranking"] = write_json(tlds, out / "tld_ranking.json")
    write_csv([{"role": role, **r} for role, rows in tlds.items() for r in rows],
              ["role", "tld", "count", "share_pct"], out / "tld_ranking.csv")

    logs = observation_logs(inp.tracked, inp.final_tss, support)
    life = lifetime_report(logs, inp.minor_of)
    written["lifetimes"] = write_json(life, out / "lifetimes.json")
    write_csv(life["domains"], ["fqdn", "role", "group", "first_seen", "last_seen", "lifetime_days"],
              out / "lifetimes.csv")

    first_seen = {}
    for tr in inp.tracked:
        d = tr.chain.final_domain
        if tr.chain.completed and d in inp.final_tss:
            first_seen[d] = min(tr.fetched_at, first_seen.get(d, tr.fetched_at))
    overlap = blacklist_overlap(inp.final_tss, inp.phones, inp.feeds, first_seen)
    written["blacklist_overlap"] = write_json(overlap, out / "blacklist_overlap.json")
    write_csv(overlap["feeds"] + [overlap["cumulative"]],
              ["feed", *ENTRY_KINDS, "already_listed_pct", "in_advance_pct", "mean_lead_days"],
              out / "blacklist_overlap.csv")

    tss_sr = [tr.listing for tr, row in zip(inp.tracked, inp.labels)
              if row["major"] == TSS and tr.listing.kind == SR]
    positions = position_distribution(tss_sr)
    written["positions"] = write_json(positions, out / "positions.json")
    write_csv([{"engine": e, "bracket": b, "uris": n} for e, h in positions.items() for b, n in h.items()],
              ["engine", "bracket", "uris"], out / "positions.csv")

    counts = pollution_counts(inp.tracked, inp.final_tss)
    data = {p: (band_of(s), counts.get(p, 0)) for p, s in sorted(inp.popularity.items())}
    pollution = pollution_by_popularity(data)
    written["pollution"] = write_json(pollution, out / "pollution.json")
    write_csv([{"band": b, **s} for b, s in pollution.items()],
              ["band", "phrases", "min", "q1", "median", "q3", "max"], out / "pollution.csv")

    phones = phone_age_report(inp.phones, inp.phone_meta)
    written["phone_age"] = write_json(phones, out / "phone_age.json")
    write_csv([{"bucket": k, "pct": v} for k, v in phones["years"].items()], ["bucket", "pct"],
              out / "phone_age.csv")

    categories = defaultdict(int)
    for row in inp.labels:
        categories[(row["kind"], row["major"], row["minor"])] += 1
    cat_rows = [{"kind": k, "major": M, "minor": m, "uris": n} for (k, M, m), n in sorted(categories.items())]
    written["categories"] = write_json(cat_rows, out / "categories.json")
    write_csv(cat_rows, ["kind", "major", "minor", "uris"], out / "categories.csv")

    amp = [{"seed": r.seed, "factor": r.factor, "capped": r.capped, "errored": r.errored}
           for r in inp.amplification]
    written["amplification"] = write_json(amp, out / "amplification.json")
    write_csv(amp, ["seed", "factor", "capped", "errored"], out / "amplification.csv")

    # campaign rows keep the table's column order
    rows = [{c: row.get(c) for c in CAMPAIGN_COLUMNS} for row in inp.campaigns]
    written["campaigns"] = write_json(rows, out / "campaigns.json", sort_keys=False)
    write_csv(rows, list(CAMPAIGN_COLUMNS), out / "campaigns.csv")

    if with_figures:
        fig_dir.mkdir(exist_ok=True)
        if inp.roc:
            written["fig_roc"] = figures.plot_roc(inp.roc["points"], inp.roc["auc"], fig_dir / "roc.png")
        written["fig_amplification"] = figures.plot_cdf(
            [r.factor for r in inp.amplification if r.factor >= 1], fig_dir / "amplification_cdf.png",
            "amplification factor")
        groups = defaultdict(list)
        for row in life["domains"]:
            groups[row["group"]].append(row["lifetime_days"])
        written["fig_lifetimes"] = figures.plot_lifetimes(dict(groups), fig_dir / "lifetimes.png")
        written["fig_positions"] = figures.plot_positions(positions, fig_dir / "positions.png")
        written["fig_pollution"] = figures.plot_pollution(pollution, fig_dir / "pollution.png")
        written["fig_phone_age"] = figures.plot_phone_age(phones["years"], fig_dir / "phone_age.png")
    return written
