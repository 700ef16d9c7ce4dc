"""Bundled demo dataset: a small, fully offline scam ecosystem that the
pipeline can run end to end in fixture mode.

Two hosting groups each run two campaigns. Group A is reached through the
doorway ``zkhubm.win``, which redirects search visitors to ``err365.com``
and its siblings and shows a keyword-stuffed page to everyone else. Some
campaign domains only appear in passive DNS, so amplification has work to
do, and benign sites share the campaigns' /24s.
"""

from __future__ import annotations

import json
import random
from datetime import timedelta
from pathlib import Path

import yaml

from .ingest.models import format_time
from .ingest.serp import load_engines
from .seedgen import build_ngram_model, generate_phrases, load_corpus, select_vocabulary, tokenize_corpus
from .synthetic import (
    BENIGN_TOPICS,
    EPOCH,
    SUPPORT_WORDS,
    THEMES,
    CampaignTemplate,
    benign_page,
    toll_free_number,
    tss_page,
)

DOORWAY = "zkhubm.win"
DOORWAY_FINAL = "err365.com"
DEMO_ENGINES = ("bing", "google", "goentry")
AD_CLICK = {
    "bing": "http://www.bing.com/aclk?ld={k}",
    "google": "http://www.googleadservices.com/pagead/aclk?sa=L&ai={k}",
    "goentry": "http://www.goentry.com/aclk?id={k}",
}
THRESHOLDS = {1: 0.05, 2: 0.012, 3: 0.004, 4: 1.0, 5: 1.0, 6: 1.0, 7: 1.0}

GROUPS = {
    "A": {"nets": ("10.60.0", "10.60.1"), "doorways": (DOORWAY, "qxfix-hub.space"),
          "campaigns": (("microsoft", True), ("kindle", False))},
    "B": {"nets": ("10.61.0", "10.61.1"), "doorways": ("tmhelpdesk.xyz", "vbsupport-now.win"),
          "campaigns": (("apple", True), ("norton", False))},
}
CRAWLED_PER_CAMPAIGN = 5
HIDDEN_PER_CAMPAIGN = 3

BENIGN_SITES = {
    "support.microsoft.com": ("legit", "10.9.0.10"),
    "www.apple.com": ("legit", "10.9.0.11"),
    "fixmypc.blogspot.com": ("blog", "10.9.1.20"),
    "techtalk-forum.net": ("forum", "10.9.1.21"),
    "800notes.com": ("complaint", "10.9.1.22"),
    "dailytechnews.com": ("news", "10.9.1.23"),
}


def _el(selector: str, inner: str, **attrs) -> str:
    tag, _, cls = selector.partition(".")
    extra = "".join(f' {k}="{v}"' for k, v in attrs.items())
    return f'<{tag} class="{cls}"{extra}>{inner}</{tag}>'


def _serp_html(engine, ads: list[dict], srs: list[dict]) -> str:
    def item(rules, row):
        parts = [
            _el(rules["title"], row["title"]) if rules.get("title") else "",
            _el(rules["link"], row["title"], href=row["uri"]) if rules.get("link") else "",
            _el(rules["snippet"], row["snippet"]) if rules.get("snippet") else "",
            _el(rules["display"], row["display"]) if rules.get("display") else "",
            _el(rules["phone"], row["phone"]) if rules.get("phone") and row.get("phone") else "",
        ]
        return _el(rules["item"], "".join(parts))

    body = "".join(item(engine.ad, r) for r in ads) + "".join(item(engine.sr, r) for r in srs)
    return f"<html><head><title>results</title></head><body>{body}</body></html>"


def _stuffed_page(rng: random.Random, theme: str, links: list[str]) -> str:
    words = " ".join(rng.choice(THEMES[theme]["words"] + SUPPORT_WORDS) for _ in range(120))
    anchors = " ".join(f'<a href="http://{d}/">{d}</a>' for d in links)
    return f"<html><head><title>{theme} support</title></head><body><p>{words}</p>{anchors}</body></html>"


def _benign_html(rng: random.Random, fqdn: str, kind: str) -> str:
    if kind == "legit":
        return (f"<html><head><title>{fqdn} help</title></head><body><h1>Official support</h1>"
                f"<p>Contact us at 1-800-642-7676 for product help.</p></body></html>")
    if kind == "complaint":
        return ("<html><head><title>Who called me</title></head><body><p>Reports about unknown callers "
                "claiming to be from tech companies. Never give remote access.</p></body></html>")
    topic = {"blog": "blog", "forum": "forum", "news": "news"}[kind]
    return benign_page(rng, topic)


def build_demo(out_dir, seed: int = 0) -> Path:
    """Write the demo dataset under ``out_dir`` and return its config path."""
    out = Path(out_dir)
    rng = random.Random(seed)
    for sub in ("serps", "pages", "archive", "blacklists"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    # corpora
    corpus = []
    for i in range(60):
        theme = list(THEMES)[i % len(THEMES)]
        corpus.append({"doc_id": f"tss{i:03d}", "text": tss_page(rng, theme, toll_free_number(rng), i % 2 == 0)})
    _write_jsonl(corpus, out / "corpus.jsonl")

    training = []
    for i in range(150):
        theme = rng.choice(list(THEMES))
        training.append({"doc_id": f"t{i:03d}", "label": "TSS",
                         "text": tss_page(rng, theme, toll_free_number(rng), rng.random() < 0.5)})
    for i in range(150):
        topic = rng.choice(list(BENIGN_TOPICS))
        training.append({"doc_id": f"b{i:03d}", "label": "NonTSS",
                         "text": benign_page(rng, topic, with_phone=rng.random() < 0.3)})
    _write_jsonl(training, out / "training.jsonl")

    # phrases the seed stage will produce from this corpus
    stats = tokenize_corpus(load_corpus(out / "corpus.jsonl"))
    model = build_ngram_model(stats, select_vocabulary(stats, 10), 7)
    phrases = [p.text for p in generate_phrases(model, THRESHOLDS)]

    # campaigns
    fetch, zone, passive, archive = [], {}, [], {}
    finals_crawled: dict[str, list[str]] = {}
    phones_all = []
    campaign_of, group_of = {}, {}
    idx = 0
    for g, spec in GROUPS.items():
        for theme, aggressive in spec["campaigns"]:
            template = CampaignTemplate.make(rng, theme, aggressive)
            phones = [toll_free_number(rng) for _ in range(2)]
            phones_all.extend(phones)
            names = []
            for k in range(CRAWLED_PER_CAMPAIGN + HIDDEN_PER_CAMPAIGN):
                if theme == "microsoft" and k == 0:
                    d = DOORWAY_FINAL
                else:
                    base = rng.choice(THEMES[theme]["name"])
                    d = f"{base}{rng.choice(['help', 'desk', 'care', 'fix'])}{idx}.{rng.choice(['com', 'xyz', 'online', 'site'])}"
                idx += 1
                names.append(d)
                campaign_of[d] = theme
                group_of[d] = g
                ip = f"{rng.choice(spec['nets'])}.{rng.randint(2, 240)}"
                html = template.render(rng, rng.choice(phones), domain=d)
                for day in range(rng.randint(2, 4)):
                    passive.append({"d": d, "ip": ip, "t": format_time(EPOCH + timedelta(days=day - 2, hours=rng.randint(0, 23)))})
                if k < CRAWLED_PER_CAMPAIGN:
                    zone[d] = [ip]
                    fetch.append({"uri": f"http://{d}/", "status": 200, "body_file": f"pages/{d}.html"})
                    (out / "pages" / f"{d}.html").write_text(html, "utf-8")
                else:
                    archive[d] = html
            finals_crawled[theme] = names[:CRAWLED_PER_CAMPAIGN]

    engines = load_engines()
    referers = sorted({engines[e].referer for e in DEMO_ENGINES})

    # doorways: route SERP visitors to a final domain, stuff keywords for everyone else
    door_routes = {}
    for g, spec in GROUPS.items():
        themes = [t for t, _ in spec["campaigns"]]
        targets = [d for t in themes for d in finals_crawled[t]]
        for j, door in enumerate(spec["doorways"]):
            zone[door] = [f"{spec['nets'][0]}.250"]
            passive.append({"d": door, "ip": f"{spec['nets'][0]}.250", "t": format_time(EPOCH)})
            fetch.append({"uri": f"http://{door}/", "status": 200,
                          "body": _stuffed_page(rng, themes[j % 2], targets[:3])})
            for k, target in enumerate(targets):
                if j == 0 and (k % 2 == 0 or target == DOORWAY_FINAL):
                    door_routes.setdefault(door, []).append(target)
                elif j == 1 and k % 2 == 1:
                    door_routes.setdefault(door, []).append(target)
        if DOORWAY in spec["doorways"]:
            # everything at the planted doorway starts with err365.com
            lst = door_routes[DOORWAY]
            lst.remove(DOORWAY_FINAL)
            lst.insert(0, DOORWAY_FINAL)
    sr_uris = []
    for door, targets in door_routes.items():
        for k, target in enumerate(targets):
            path = f"/p{k}"
            uri = f"http://{door}{path}"
            # a crawler without a search Referer sees the stuffed page
            fetch.append({"uri": uri, "status": 200, "body": _stuffed_page(rng, campaign_of[target], [])})
            for ref in referers:
                if k % 3 == 2:
                    fetch.append({"uri": uri, "referer": ref, "status": 200,
                                  "body": f'<html><head><meta http-equiv="refresh" content="0; url=http://{target}/"></head></html>'})
                elif k % 3 == 1:
                    fetch.append({"uri": uri, "referer": ref, "status": 200,
                                  "body": f"<html><body><script>window.location = 'http://{target}/';</script></body></html>"})
                else:
                    fetch.append({"uri": uri, "referer": ref, "status": 302, "headers": {"Location": f"http://{target}/"}})
            sr_uris.append((uri, target))

    # benign listings and co-hosted benign sites
    for fqdn, (kind, ip) in BENIGN_SITES.items():
        zone[fqdn] = [ip]
        passive.append({"d": fqdn, "ip": ip, "t": format_time(EPOCH)})
        fetch.append({"uri": f"http://{fqdn}/", "status": 200, "body": _benign_html(rng, fqdn, kind)})
    cohosts = []
    for g, spec in GROUPS.items():
        for k in range(3):
            d = f"{rng.choice(['recipes', 'garden', 'travelnotes', 'petcare'])}{g.lower()}{k}.com"
            passive.append({"d": d, "ip": f"{spec['nets'][k % 2]}.{200 + k}", "t": format_time(EPOCH)})
            if k < 2:
                archive[d] = benign_page(rng, rng.choice(list(BENIGN_TOPICS)), with_phone=k == 0)
            cohosts.append(d)        # k == 2 has no page anywhere
        # resolves on the campaign /24 long after the crawl, outside the window
        late = f"lateshop{g.lower()}.com"
        passive.append({"d": late, "ip": f"{spec['nets'][0]}.199", "t": format_time(EPOCH + timedelta(days=90))})
        archive[late] = tss_page(rng, "printer", toll_free_number(rng), True)
    for d, html in archive.items():
        (out / "archive" / f"{d}.html").write_text(html, "utf-8")

    # SERPs
    manifest = []
    ad_finals = [finals_crawled[t][k] for t in finals_crawled for k in (1, 3)]
    ad_pool = [(d, d) for d in ad_finals] + [("tmhelpdesk.xyz", None)]
    # tmhelpdesk.xyz at its root forwards ads with a script redirect
    for rec in fetch:
        if rec["uri"] == "http://tmhelpdesk.xyz/":
            rec["body"] = f"<html><body><script>location.href = \"http://{finals_crawled['apple'][2]}/\";</script></body></html>"
    benign_pool = sorted(BENIGN_SITES)
    for qi, phrase in enumerate(phrases):
        for ei, name in enumerate(DEMO_ENGINES):
            prng = random.Random(f"{seed}:{phrase}:{name}")
            srs = []
            for uri, target in prng.sample(sr_uris, k=min(4, len(sr_uris))):
                srs.append({"title": f"{campaign_of[target].title()} support", "uri": uri,
                            "snippet": f"{phrase} call now", "display": uri.split('/')[2]})
            for fqdn in prng.sample(benign_pool, k=3):
                srs.insert(prng.randrange(len(srs) + 1),
                           {"title": fqdn, "uri": f"http://{fqdn}/", "snippet": phrase, "display": fqdn})
            for d in prng.sample(finals_crawled[prng.choice(list(finals_crawled))], k=1):
                srs.append({"title": d, "uri": f"http://{d}/", "snippet": phrase, "display": d})
            ads = []
            for k, (display, _) in enumerate(prng.sample(ad_pool, k=2)):
                ads.append({"title": f"{phrase.title()} Help", "uri": AD_CLICK[name].format(k=f"{qi}{ei}{k}"),
                            "snippet": "Certified technicians 24/7", "display": display,
                            "phone": prng.choice(phones_all)})
            fname = f"{name}-{qi:03d}.html"
            (out / "serps" / fname).write_text(_serp_html(engines[name], ads, srs), "utf-8")
            manifest.append({"engine": name, "phrase": phrase, "file": fname,
                             "issued_at": format_time(EPOCH + timedelta(hours=qi * 6 + ei))})
    _write_jsonl(manifest, out / "serps" / "manifest.jsonl")
    _write_jsonl(fetch, out / "fetch.jsonl")
    (out / "zone.json").write_text(json.dumps(zone, indent=1, sort_keys=True) + "\n", "utf-8")
    _write_jsonl(sorted(passive, key=lambda r: (r["t"], r["d"], r["ip"])), out / "passive_dns.jsonl")

    # reputation, blacklists, phone metadata, popularity
    (out / "reputation.csv").write_text(
        "".join(f"{i},{d}\n" for i, d in enumerate(["microsoft.com", "apple.com", "google.com", "amazon.com",
                                                      "blogspot.com", "wikipedia.org"], 1)), "utf-8")
    crawled = [d for ds in finals_crawled.values() for d in ds]
    hidden = [d for d in campaign_of if d not in crawled]
    feed_a = ["# kinds: fqdn", "kind,value,first_listed"]
    feed_a += [f"fqdn,{d},2016-03-20" for d in crawled[:3]] + [f"fqdn,{d},2016-04-20" for d in crawled[3:6]]
    feed_b = ["# kinds: fqdn,phone", "kind,value,first_listed"]
    feed_b += [f"fqdn,{d},2016-05-01" for d in hidden[:2]] + [f"phone,{p}," for p in phones_all[:3]]
    (out / "blacklists" / "urlfeed.csv").write_text("\n".join(feed_a) + "\n", "utf-8")
    (out / "blacklists" / "scamreports.csv").write_text("\n".join(feed_b) + "\n", "utf-8")
    providers = ["Twilio", "Bandwidth", "Level3", "Telnyx"]
    meta = {}
    for i, p in enumerate(phones_all):
        if i == len(phones_all) - 1:
            continue                     # one number without records
        meta[p] = {"year_last_owned": [2012, 2015, 2016, 2016][i % 4], "provider": providers[i % 4], "active": True}
    (out / "phone_meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", "utf-8")
    pops = [50, 800, 5000, 40000, 250000]
    popularity = {p: pops[i % len(pops)] for i, p in enumerate(phrases)}
    (out / "popularity.json").write_text(json.dumps(popularity, indent=1, sort_keys=True) + "\n", "utf-8")

    config = {
        "mode": "fixture",
        "run_dir": "run",
        "seed": 42,
        "paths": {
            "corpus": "corpus.jsonl",
            "serp_fixtures": "serps",
            "fetch_fixtures": "fetch.jsonl",
            "zone": "zone.json",
            "passive_dns": "passive_dns.jsonl",
            "training": "training.jsonl",
            "reputation": "reputation.csv",
            "blacklists": "blacklists",
            "phone_meta": "phone_meta.json",
            "popularity": "popularity.json",
            "archive": "archive",
        },
        "seedgen": {"min_doc_count": 10, "max_n": 7, "thresholds": dict(THRESHOLDS)},
        "crawl": {"engines": list(DEMO_ENGINES), "max_hops": 10, "workers": 4, "start": format_time(EPOCH)},
        "classify": {"threshold": 0.6, "alpha": 1.0, "folds": 10},
        "amplify": {"lambda": 500, "delta_days": 7, "subnet_mode": "slash24", "workers": 4},
        "cluster": {"svd_mass": 0.9, "svd_max_rank": 50, "k_min": 1, "top_k": 3},
        "report": {"figures": True},
    }
    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False), "utf-8")
    (out / "truth.json").write_text(json.dumps({
        "campaign_of": dict(sorted(campaign_of.items())),
        "group_of": dict(sorted(group_of.items())),
        "crawled": sorted(crawled),
        "hidden": sorted(hidden),
        "doorway": DOORWAY,
        "doorway_final": DOORWAY_FINAL,
        "cohosts": sorted(cohosts),
        "phones": sorted(set(phones_all)),
    }, indent=1) + "\n", "utf-8")
    return path


def _write_jsonl(rows, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
