"""Seeded generators for synthetic pages, corpora, DNS histories, redirect
chains and whole scam ecosystems. Used by the test suite and the demo data."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Optional

from .ingest.models import HTTP_3XX, JS_LOCATION, META_REFRESH, ORIGIN, TERMINAL, DnsObservation, Hop, RedirectChain

EPOCH = datetime(2016, 4, 1, tzinfo=timezone.utc)

THEMES = {
    "microsoft": {
        "title": ["Microsoft Windows Support", "Microsoft Windows Error Helpline", "Microsoft Technician Desk"],
        "words": ["microsoft", "windows", "error", "license", "update", "registry", "firewall", "defender"],
        "name": ["microsoft", "windows", "winhelp", "msfix"],
    },
    "kindle": {
        "title": ["Amazon Kindle Phone Support", "Kindle Help Desk", "Amazon Kindle Setup Phone"],
        "words": ["amazon", "kindle", "ebook", "reader", "device", "prime", "tablet", "library"],
        "name": ["kindle", "amazonkindle", "kindlehelp", "ebookreader"],
    },
    "apple": {
        "title": ["Apple Mac Support Number", "iPhone Apple Help", "Apple Care Technician"],
        "words": ["apple", "mac", "icloud", "iphone", "ipad", "itunes", "macbook", "safari"],
        "name": ["apple", "macfix", "applecare", "imachelp"],
    },
    "norton": {
        "title": ["Norton Antivirus Support", "Norton Security Helpline", "Norton Setup Technician"],
        "words": ["norton", "antivirus", "security", "subscription", "renewal", "scan", "malware", "protection"],
        "name": ["norton", "nortonsetup", "antivirus", "nortonfix"],
    },
    "printer": {
        "title": ["Printer Setup Support", "HP Printer Helpline", "Printer Driver Technician"],
        "words": ["printer", "driver", "wireless", "cartridge", "scanner", "offline", "spooler", "setup"],
        "name": ["printer", "printerhelp", "printfix", "inkjet"],
    },
}

SCARE_WORDS = ["virus", "infection", "warning", "critical", "alert", "shutdown", "hacked", "spyware",
               "suspended", "immediately", "blocked", "threat"]
SUPPORT_WORDS = ["call", "support", "toll", "free", "technician", "help", "contact", "certified",
                 "assistance", "number", "service", "customer"]
BENIGN_TOPICS = {
    "blog": ["recipe", "garden", "travel", "holiday", "photography", "family", "weekend", "kitchen"],
    "news": ["report", "police", "arrested", "investigation", "court", "announced", "scheme", "victims"],
    "forum": ["thread", "reply", "posted", "member", "question", "answer", "solved", "community"],
    "shop": ["cart", "checkout", "shipping", "price", "discount", "product", "review", "order"],
}
FILLER = ["online", "fast", "quick", "best", "pro", "desk", "care", "expert", "team", "advice"]
TSS_TLDS = ["com", "xyz", "info", "online", "us", "website", "site", "tech"]
SUPPORT_TLDS = ["xyz", "win", "space"]


def toll_free_number(rng: random.Random) -> str:
    prefix = rng.choice(["800", "833", "844", "855", "866", "877", "888"])
    return f"{prefix}-{rng.randint(200, 999)}-{rng.randint(1000, 9999)}"


def local_number(rng: random.Random) -> str:
    return f"{rng.choice(['212', '404', '617', '312'])}-{rng.randint(200, 999)}-{rng.randint(1000, 9999)}"


# pages

AGGRESSIVE_MARKERS = ("alert", "confirm", "prompt", "audio", "window_alert", "onload")


def aggressive_script(marker: str, text: str = "Your computer is infected") -> str:
    if marker == "alert":
        return f"<script>alert('{text}');</script>"
    if marker == "confirm":
        return f"<script>while (!confirm('{text}')) {{}}</script>"
    if marker == "prompt":
        return f"<script>var x = prompt('{text}. Enter code');</script>"
    if marker == "window_alert":
        return f"<script>function loop() {{ window.alert('{text}'); loop(); }} loop();</script>"
    if marker == "onload":
        return f"<body onload=\"alert('{text}')\"></body>"
    if marker == "audio":
        return '<audio autoplay loop><source src="/warning.mp3" type="audio/mpeg"></audio>'
    raise ValueError(marker)


def tss_page(rng: random.Random, theme: str, phone: str, aggressive: bool, marker: Optional[str] = None,
             domain: str = "", n_words: int = 40) -> str:
    t = THEMES[theme]
    title = rng.choice(t["title"])
    vocab = t["words"] + SUPPORT_WORDS + (SCARE_WORDS if aggressive else [])
    words = [rng.choice(vocab) for _ in range(n_words)]
    paras = " ".join(words[: n_words // 2]), " ".join(words[n_words // 2:])
    script = aggressive_script(marker or rng.choice(AGGRESSIVE_MARKERS[:4])) if aggressive else ""
    foot = f"<p>{domain}</p>" if domain else ""
    return (
        f"<html><head><title>{title}</title></head><body>"
        f"<h1>{title}</h1><p>{paras[0]}</p><p>Call toll free {phone}</p><p>{paras[1]}</p>{foot}"
        f"{script}</body></html>"
    )


@dataclass
class CampaignTemplate:
    """A scam kit: every page of a campaign is this template with a few
    words swapped and its own domain and phone number."""

    theme: str
    title: str
    paragraphs: list[list[str]]
    aggressive: bool
    marker: Optional[str]

    @classmethod
    def make(cls, rng: random.Random, theme: str, aggressive: bool, n_words: int = 40) -> "CampaignTemplate":
        t = THEMES[theme]
        vocab = t["words"] + SUPPORT_WORDS + (SCARE_WORDS if aggressive else [])
        words = [rng.choice(vocab) for _ in range(n_words)]
        marker = rng.choice(AGGRESSIVE_MARKERS[:4]) if aggressive else None
        return cls(theme, rng.choice(t["title"]), [words[: n_words // 2], words[n_words // 2:]], aggressive, marker)

    def render(self, rng: random.Random, phone: str, domain: str = "", jitter: int = 2) -> str:
        vocab = THEMES[self.theme]["words"]
        paras = [list(p) for p in self.paragraphs]
        for _ in range(jitter):
            p = rng.choice(paras)
            p[rng.randrange(len(p))] = rng.choice(vocab)
        script = aggressive_script(self.marker) if self.aggressive else ""
        foot = f"<p>{domain}</p>" if domain else ""
        return (
            f"<html><head><title>{self.title}</title></head><body>"
            f"<h1>{self.title}</h1><p>{' '.join(paras[0])}</p><p>Call toll free {phone}</p>"
            f"<p>{' '.join(paras[1])}</p>{foot}{script}</body></html>"
        )


def benign_page(rng: random.Random, topic: str, with_phone: bool = False, n_words: int = 40) -> str:
    vocab = BENIGN_TOPICS[topic]
    words = " ".join(rng.choice(vocab + FILLER) for _ in range(n_words))
    phone = f"<p>Questions? {toll_free_number(rng)}</p>" if with_phone else f"<p>Office {local_number(rng)}</p>"
    return (f"<html><head><title>{topic.title()} {rng.choice(vocab)}</title></head>"
            f"<body><h1>{topic.title()}</h1><p>{words}</p>{phone}</body></html>")


def passive_page_with_dialog_text(rng: random.Random, theme: str, phone: str) -> str:
    """A passive page whose prose mentions dialogs but runs no dialog code."""
    t = THEMES[theme]
    body = " ".join(rng.choice(t["words"] + SUPPORT_WORDS) for _ in range(30))
    return (f"<html><head><title>{t['title'][0]}</title></head><body>"
            f"<p>We never show alert boxes or play audio. Please confirm your details by phone.</p>"
            f"<p>{body}</p><p>{phone}</p>"
            f"<script>var alerted = false; function promptless() {{ return 1; }}</script></body></html>")


# classifier corpora

def classifier_corpus(n: int = 1000, overlap: float = 0.5, seed: int = 0, doc_len: int = 30,
                      tss_share: float = 0.5) -> list[tuple[str, str, str]]:
    """(doc_id, text, label) rows. Each token is drawn from a vocabulary
    shared by both classes with probability ``overlap``, otherwise from the
    document's class vocabulary. ``overlap=0`` gives a separable corpus."""
    rng = random.Random(seed)
    tss_vocab = sorted({w for t in THEMES.values() for w in t["words"]} | set(SCARE_WORDS))
    benign_vocab = sorted({w for v in BENIGN_TOPICS.values() for w in v})
    shared = [f"shared{i}" for i in range(40)]
    rows = []
    for i in range(n):
        is_tss = rng.random() < tss_share
        own = tss_vocab if is_tss else benign_vocab
        toks = [rng.choice(shared) if rng.random() < overlap else rng.choice(own) for _ in range(doc_len)]
        rows.append((f"doc{i:05d}", " ".join(toks), "TSS" if is_tss else "NonTSS"))
    return rows


# seed corpora for the phrase model

def phrase_corpus(n_docs: int = 30, vocab_size: int = 25, doc_len: int = 60, seed: int = 0) -> list[tuple[str, str]]:
    """Random documents over a small vocabulary, with a few stopwords and
    out-of-vocabulary noise mixed in."""
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(vocab_size)]
    weights = [1.0 / (i + 1) for i in range(vocab_size)]
    extras = ["the", "and", "of", "x"]
    docs = []
    for d in range(n_docs):
        toks = []
        for _ in range(rng.randint(doc_len // 2, doc_len)):
            if rng.random() < 0.1:
                toks.append(rng.choice(extras))
            elif rng.random() < 0.05:
                toks.append(f"rare{rng.randint(0, 999)}")
            else:
                toks.append(rng.choices(vocab, weights)[0])
        docs.append((f"d{d:03d}", " ".join(toks)))
    return docs


# DNS histories

@dataclass
class PlantedGraph:
    observations: list[DnsObservation]
    seeds: list[str]
    pages: dict[str, Optional[str]]                   # fqdn -> html (None = page unavailable)
    tss: set[str]
    window_start: datetime
    window_end: datetime
    meta: dict = field(default_factory=dict)


def _obs(d: str, ip: str, t: datetime) -> DnsObservation:
    return DnsObservation(d, ip, t)


def small_planted_graph(seed: int = 0) -> PlantedGraph:
    """3 seeds sharing one /24 with 12 scam and 8 benign co-hosted domains."""
    rng = random.Random(seed)
    start = EPOCH
    obs, pages, tss = [], {}, set()
    seeds = [f"seed{i}-support.xyz" for i in range(3)]
    for i, s in enumerate(seeds):
        obs.append(_obs(s, f"10.1.1.{i + 1}", start + timedelta(days=1)))
        pages[s] = tss_page(rng, "microsoft", toll_free_number(rng), True)
        tss.add(s)
    for i in range(12):
        d = f"tss{i:02d}-helpdesk.online"
        obs.append(_obs(d, f"10.1.1.{10 + i}", start + timedelta(days=2 + i % 5)))
        pages[d] = tss_page(rng, rng.choice(list(THEMES)), toll_free_number(rng), rng.random() < 0.5)
        tss.add(d)
    for i in range(8):
        d = f"benign{i}.com"
        obs.append(_obs(d, f"10.1.1.{40 + i}", start + timedelta(days=3)))
        pages[d] = benign_page(rng, rng.choice(list(BENIGN_TOPICS)))
    return PlantedGraph(obs, seeds, pages, tss, start, start + timedelta(days=10))


def planted_dns_graph(seed: int = 0, n_domains: int = 500, n_campaigns: int = 3, n_triplets: int = 50000,
                      cloud_size: int = 120) -> PlantedGraph:
    """Campaigns on their own /24s mixed with benign domains, a crowded
    "cloud" /24 shared by one seed, domains without pages, and resolutions
    outside the query window.

    ``meta`` records the planted roles: ``campaign_of``, ``cloud``,
    ``missing``, ``late``.
    """
    rng = random.Random(seed)
    start = EPOCH
    end = start + timedelta(days=30)
    days = 60
    domains = [f"host{i:04d}.{rng.choice(TSS_TLDS)}" for i in range(n_domains)]
    rng.shuffle(domains)
    per = (n_domains - cloud_size) // (n_campaigns + 1)
    campaign_of, ip_pool = {}, {}
    cursor = 0
    for c in range(n_campaigns):
        members = domains[cursor: cursor + per]
        cursor += per
        for j, d in enumerate(members):
            campaign_of[d] = c
            ip_pool[d] = [f"10.{c}.{k}.{rng.randint(1, 254)}" for k in range(rng.randint(1, 2))]
    benign = domains[cursor: cursor + per]
    cursor += per
    for d in benign:
        # benign domains share campaign /24s at random, as on shared hosting
        c = rng.randrange(n_campaigns)
        ip_pool[d] = [f"10.{c}.{rng.randint(0, 1)}.{rng.randint(1, 254)}"] if rng.random() < 0.5 else \
            [f"172.16.{rng.randint(0, 200)}.{rng.randint(1, 254)}"]
    cloud = domains[cursor:]
    for d in cloud:
        ip_pool[d] = [f"192.168.7.{rng.randint(1, 254)}"]

    pages: dict[str, Optional[str]] = {}
    tss = set()
    missing = set()
    for d in domains:
        if d in campaign_of:
            if rng.random() < 0.1:
                pages[d] = None
                missing.add(d)
            else:
                theme = list(THEMES)[campaign_of[d] % len(THEMES)]
                pages[d] = tss_page(rng, theme, toll_free_number(rng), rng.random() < 0.6, n_words=30)
                tss.add(d)
        elif d in cloud and rng.random() < 0.2:
            pages[d] = tss_page(rng, "printer", toll_free_number(rng), False, n_words=30)
            tss.add(d)
        else:
            pages[d] = benign_page(rng, rng.choice(list(BENIGN_TOPICS)), n_words=30)

    seeds = sorted(rng.sample(sorted(tss & set(campaign_of)), 6))
    cloud_seed = sorted(d for d in cloud if d in tss)[0]
    seeds.append(cloud_seed)

    obs = []
    late = set()
    # at least one in-window observation per domain
    for d in domains:
        obs.append(_obs(d, ip_pool[d][0], start + timedelta(seconds=rng.randint(0, int((end - start).total_seconds())))))
    n_late = 5
    while len(obs) < n_triplets - n_late:
        d = rng.choice(domains)
        t = start - timedelta(days=15) + timedelta(seconds=rng.randint(0, days * 86400))
        obs.append(_obs(d, rng.choice(ip_pool[d]), t))
    # a few domains are only ever seen far outside T +- delta
    for i in range(n_late):
        d = f"late{i}.xyz"
        late.add(d)
        obs.append(_obs(d, ip_pool[seeds[0]][0], end + timedelta(days=40)))
        pages[d] = tss_page(rng, "microsoft", toll_free_number(rng), True)
    return PlantedGraph(obs, sorted(seeds), pages, tss, start, end,
                        {"campaign_of": campaign_of, "cloud": set(cloud), "missing": missing, "late": late,
                         "cloud_seed": cloud_seed})


# ecosystems for clustering

@dataclass
class Ecosystem:
    final_domains: list[str]
    chains: list[RedirectChain]
    observations: list[DnsObservation]
    snapshots: dict[str, bytes]
    truth: dict[str, str]                 # fqdn -> planted campaign name
    network_of: dict[str, int]            # fqdn -> planted hosting group
    theme_of: dict[str, str]              # campaign -> theme word


def _domain_name(rng: random.Random, theme: str, i: int, tlds=TSS_TLDS) -> str:
    base = rng.choice(THEMES[theme]["name"])
    extra = rng.choice(FILLER + ["support", "help", "phone", "number"])
    return f"{base}{extra}{i}.{rng.choice(tlds)}"


def planted_ecosystem(seed: int = 0, layout=(("A", "microsoft"), ("A", "kindle"), ("B", "apple"), ("B", "norton")),
                      per_campaign: int = 15, n_support: int = 4) -> Ecosystem:
    """Campaigns grouped by hosting: campaigns sharing a group letter use the
    same /24s and support domains but different page templates."""
    rng = random.Random(seed)
    groups = sorted({g for g, _ in layout})
    group_nets = {g: [f"10.{50 + gi}.{k}" for k in range(2)] for gi, g in enumerate(groups)}
    group_support = {g: [f"{rng.choice(['zk', 'qx', 'vb', 'tm'])}{gi}{k}hub.{rng.choice(SUPPORT_TLDS)}"
                         for k in range(n_support)] for gi, g in enumerate(groups)}
    finals, chains, obs, snaps, truth, network_of, theme_of = [], [], [], {}, {}, {}, {}
    counter = 0
    for ci, (g, theme) in enumerate(layout):
        name = f"{g}:{theme}"
        theme_of[name] = theme
        template = CampaignTemplate.make(rng, theme, ci % 2 == 0)
        phones = [toll_free_number(rng) for _ in range(3)]
        for _ in range(per_campaign):
            d = _domain_name(rng, theme, counter)
            counter += 1
            finals.append(d)
            truth[d] = name
            network_of[d] = groups.index(g)
            net = rng.choice(group_nets[g])
            t0 = EPOCH + timedelta(days=rng.randint(0, 20))
            for k in range(rng.randint(1, 3)):
                obs.append(_obs(d, f"{net}.{rng.randint(1, 254)}", t0 + timedelta(days=k)))
            snaps[d] = template.render(rng, rng.choice(phones), domain=d).encode()
            sup = rng.choice(group_support[g])
            chains.append(RedirectChain(
                origin_uri=f"http://{sup}/r",
                hops=[Hop(f"http://{sup}/r", sup, ORIGIN, 302, ORIGIN), Hop(f"http://{d}/", d, TERMINAL, 200, HTTP_3XX)],
                final_domain=d, completed=True, reason="", listing_kind="SR", engine="bing",
            ))
    for g, sups in group_support.items():
        for s in sups:
            obs.append(_obs(s, f"{group_nets[g][0]}.250", EPOCH))
    return Ecosystem(sorted(finals), chains, obs, snaps, truth, network_of, theme_of)


# redirect chains for the tracker

@dataclass
class ChainCase:
    start_uri: str
    final_domain: Optional[str]
    methods: list[str]
    expect_reason: str = ""               # "" for completed chains, else loop / max_hops


def redirect_routes(seed: int = 0, n_chains: int = 50, max_hops: int = 10) -> tuple[dict, list[ChainCase]]:
    """Routes for :class:`~tsshunt.ingest.testserver.RouteServer`: ``n_chains``
    well-formed chains mixing 3xx, meta-refresh and script redirects, plus 5
    adversarial ones (two loops, a self-redirect, a meta-refresh loop and a
    chain longer than ``max_hops``)."""
    rng = random.Random(seed)
    routes: dict[tuple[str, str], dict] = {}
    cases: list[ChainCase] = []

    def link(host: str, path: str, target: str, method: str):
        if method == HTTP_3XX:
            routes[(host, path)] = {"status": rng.choice([301, 302, 303, 307]), "headers": {"Location": target}}
        elif method == META_REFRESH:
            routes[(host, path)] = {"body": f'<html><head><meta http-equiv="refresh" content="0; url={target}"></head></html>'}
        else:
            form = rng.choice(["window.location = '{u}';", "location.href = \"{u}\";",
                               "window.location.replace('{u}');", "document.location.assign('{u}');"])
            routes[(host, path)] = {"body": "<html><body><script>" + form.format(u=target) + "</script></body></html>"}

    for i in range(n_chains):
        n_hops = rng.randint(0, 4)
        hosts = [f"c{i}h{k}.{rng.choice(SUPPORT_TLDS)}" for k in range(n_hops)] + [f"final{i}.{rng.choice(TSS_TLDS)}"]
        methods = [rng.choice([HTTP_3XX, META_REFRESH, JS_LOCATION]) for _ in range(n_hops)]
        for k in range(n_hops):
            link(hosts[k], "/", f"http://{hosts[k + 1]}/", methods[k])
        routes[(hosts[-1], "/")] = {"body": f"<html><title>final {i}</title><body>Call {toll_free_number(rng)}</body></html>"}
        cases.append(ChainCase(f"http://{hosts[0]}/", hosts[-1], methods))

    link("loopa.xyz", "/", "http://loopb.xyz/", HTTP_3XX)
    link("loopb.xyz", "/", "http://loopa.xyz/", JS_LOCATION)
    cases.append(ChainCase("http://loopa.xyz/", None, [], "loop"))
    link("self.win", "/", "http://self.win/", HTTP_3XX)
    cases.append(ChainCase("http://self.win/", None, [], "loop"))
    link("metaloop1.space", "/", "http://metaloop2.space/", META_REFRESH)
    link("metaloop2.space", "/", "http://metaloop3.space/", META_REFRESH)
    link("metaloop3.space", "/", "http://metaloop1.space/", META_REFRESH)
    cases.append(ChainCase("http://metaloop1.space/", None, [], "loop"))
    deep = [f"deep{k}.xyz" for k in range(max_hops + 5)]
    for k in range(len(deep) - 1):
        link(deep[k], "/", f"http://{deep[k + 1]}/", rng.choice([HTTP_3XX, META_REFRESH, JS_LOCATION]))
    routes[(deep[-1], "/")] = {"body": "<html>end</html>"}
    cases.append(ChainCase(f"http://{deep[0]}/", None, [], "max_hops"))
    link("pathloop.xyz", "/a", "http://pathloop.xyz/b", HTTP_3XX)
    link("pathloop.xyz", "/b", "http://pathloop.xyz/a", META_REFRESH)
    cases.append(ChainCase("http://pathloop.xyz/a", None, [], "loop"))
    return routes, cases
