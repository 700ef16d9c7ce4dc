"""Feature matrices for the two clustering levels: network properties of a
domain and its redirect chains, and TF-IDF over page text."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..domains import slash16, slash24, tld
from ..ingest.models import HTTP_3XX, JS_LOCATION, META_REFRESH, RedirectChain
from ..text import Tokenizer, visible_text

REDIRECT_KINDS = (HTTP_3XX, META_REFRESH, JS_LOCATION)

SCALAR_FEATURES = (
    "distinct_ips", "distinct_slash24", "support_domains",
    "chain_len_min", "chain_len_mean", "chain_len_max",
    *(f"via_{k}" for k in REDIRECT_KINDS),
    "as_diversity",
)
SCALAR_WEIGHT = 0.1
TLD_WEIGHT = 0.1
PROPAGATION_STEPS = 10


@dataclass
class NetworkFeatureVector:
    domain: str
    features: np.ndarray


@dataclass
class NetworkMatrix:
    domains: list[str]
    columns: list[str]
    matrix: np.ndarray

    def rows(self) -> list[NetworkFeatureVector]:
        return [NetworkFeatureVector(d, self.matrix[i]) for i, d in enumerate(self.domains)]


def _chains_by_final(chains: Iterable[RedirectChain]) -> dict[str, list[RedirectChain]]:
    out = defaultdict(list)
    for c in chains:
        if c.completed and c.final_domain:
            out[c.final_domain].append(c)
    return out


def network_features(domains: Iterable[str], chains: Iterable[RedirectChain], dns_store,
                     asn_of=None) -> NetworkMatrix:
    """One row per domain, in three blocks.

    Infrastructure: the /24s a domain used and the support domains on its
    chains, smoothed over shared hosting (domain -> its infrastructure ->
    the domains sharing it -> their infrastructure) so every domain carries
    the profile of its hosting neighbourhood. Scalars: log1p counts scaled
    to [0, 1] per column. TLD: one-hot. The scalar and TLD blocks are
    down-weighted so infrastructure dominates the SVD.

    ``asn_of(ip)`` gives an AS number when a table is available; otherwise
    distinct /16s stand in for AS diversity.
    """
    domains = sorted(set(domains))
    by_final = _chains_by_final(chains)
    scalars, infra_of = [], []
    for d in domains:
        ips = sorted(set(_all_ips(dns_store, d)))
        nets = sorted({slash24(ip) for ip in ips})
        cs = by_final.get(d, [])
        support = sorted({h.fqdn for c in cs for h in c.hops if h.fqdn and h.fqdn != d})
        lengths = [len(c.hops) for c in cs] or [0]
        via = Counter(h.via for c in cs for h in c.hops)
        if asn_of is not None:
            as_div = len({asn_of(ip) for ip in ips} - {None})
        else:
            as_div = len({slash16(ip) for ip in ips})
        scalars.append([
            len(ips), len(nets), len(support),
            min(lengths), sum(lengths) / len(lengths), max(lengths),
            *(via[k] for k in REDIRECT_KINDS),
            as_div,
        ])
        infra_of.append([f"net:{n}" for n in nets] + [f"support:{s}" for s in support])
    infra_cols = sorted({c for row in infra_of for c in row})
    tld_cols = sorted({tld(d) for d in domains})
    n = len(domains)

    a = np.zeros((n, len(infra_cols)))
    col = {c: i for i, c in enumerate(infra_cols)}
    for r, items in enumerate(infra_of):
        a[r, [col[c] for c in items]] = 1.0
    infra = _row_normalize(a, 1)
    if a.size:
        back = _row_normalize(a.T, 1)
        for _ in range(PROPAGATION_STEPS):
            infra = infra @ back @ _row_normalize(a, 1)
    infra = _row_normalize(infra, 2)

    sc = np.log1p(np.asarray(scalars, dtype=float).reshape(n, len(SCALAR_FEATURES)))
    peak = sc.max(axis=0) if n else np.zeros(len(SCALAR_FEATURES))
    sc = np.divide(sc, peak, out=np.zeros_like(sc), where=peak > 0)
    sc *= SCALAR_WEIGHT / math.sqrt(len(SCALAR_FEATURES))

    onehot = np.zeros((n, len(tld_cols)))
    tcol = {t: i for i, t in enumerate(tld_cols)}
    for r, d in enumerate(domains):
        onehot[r, tcol[tld(d)]] = TLD_WEIGHT

    columns = list(SCALAR_FEATURES) + infra_cols + [f"tld:{t}" for t in tld_cols]
    return NetworkMatrix(domains, columns, np.hstack([sc, infra, onehot]))


def _row_normalize(m: np.ndarray, order: int) -> np.ndarray:
    norms = np.linalg.norm(m, ord=order, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def _all_ips(dns_store, d: str) -> list[str]:
    rng = dns_store.time_range
    if rng is None:
        return []
    return dns_store.ips_of(d, rng[0], rng[1])


@dataclass
class ContentFeatureVector:
    domain: str
    tfidf: dict[str, float]


def tfidf_vectors(docs: dict[str, str], tokenizer: Optional[Tokenizer] = None,
                  min_df: int = 1) -> list[ContentFeatureVector]:
    """Smoothed TF-IDF over the given domain -> page text map, rows L2-normalized.

    tf is the raw count; idf = ln((1 + N) / (1 + df)) + 1. Terms found in
    fewer than ``min_df`` documents are dropped before weighting.
    """
    tokenizer = tokenizer or Tokenizer()
    counts = {d: Counter(tokenizer(text)) for d, text in docs.items()}
    df = Counter(t for c in counts.values() for t in c)
    if min_df > 1:
        counts = {d: Counter({t: k for t, k in c.items() if df[t] >= min_df}) for d, c in counts.items()}
    n = len(docs)
    idf = {t: math.log((1 + n) / (1 + k)) + 1.0 for t, k in df.items()}
    out = []
    for d in sorted(docs):
        w = {t: c * idf[t] for t, c in counts[d].items()}
        norm = math.sqrt(sum(v * v for v in w.values()))
        if norm > 0:
            w = {t: v / norm for t, v in w.items()}
        out.append(ContentFeatureVector(d, w))
    return out


def tfidf_matrix(vectors: list[ContentFeatureVector]) -> tuple[list[str], np.ndarray]:
    terms = sorted({t for v in vectors for t in v.tfidf})
    idx = {t: i for i, t in enumerate(terms)}
    mat = np.zeros((len(vectors), len(terms)))
    for r, v in enumerate(vectors):
        for t, w in v.tfidf.items():
            mat[r, idx[t]] = w
    return terms, mat


def page_texts(snapshots: dict[str, bytes]) -> dict[str, str]:
    return {d: visible_text(html) for d, html in snapshots.items()}
