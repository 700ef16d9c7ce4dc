"""Two-level campaign clustering: group domains by network infrastructure,
then split each group by page content, then label the leaves."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..classify.phones import extract_phone_numbers
from ..ingest.models import RedirectChain
from ..text import Tokenizer, page_title, visible_text
from .features import _all_ips, network_features, tfidf_matrix, tfidf_vectors
from .labels import DEFAULT_COMMON_WORDS, DEFAULT_TOP_K, CampaignLabel, label_cluster
from .segment import Lexicon
from .svd import DEFAULT_MASS, DEFAULT_MAX_RANK, reduce_svd
from .xmeans import xmeans

N_SAMPLES = 3
# Terms on a single page (its own domain, phone digits) say nothing about
# which pages share a kit, only add one private dimension each.
CONTENT_MIN_DF = 2


@dataclass
class ClusterParams:
    seed: int = 42
    k_min: int = 1
    k_max: Optional[int] = None
    svd_mass: float = DEFAULT_MASS
    svd_max_rank: int = DEFAULT_MAX_RANK
    top_k: int = DEFAULT_TOP_K
    common_words: frozenset = DEFAULT_COMMON_WORDS


def _cluster_rows(mat: np.ndarray, params: ClusterParams) -> np.ndarray:
    n = len(mat)
    if n == 1:
        return np.zeros(1, dtype=int)
    reduced = reduce_svd(mat, None, params.svd_mass, params.svd_max_rank)
    k_min = min(params.k_min, n)
    k_max = params.k_max if params.k_max is not None else max(k_min, min(50, n // 3))
    return xmeans(reduced, k_min, max(k_min, min(k_max, n)), seed=params.seed)


def _groups(items: list[str], labels: np.ndarray) -> list[list[str]]:
    out: dict[int, list[str]] = {}
    for d, lab in zip(items, labels):
        out.setdefault(int(lab), []).append(d)
    return [sorted(out[k]) for k in sorted(out)]


def ncl(domains: Iterable[str], chains: Iterable[RedirectChain], dns_store,
        params: Optional[ClusterParams] = None) -> list[list[str]]:
    """Network-level clusters (each a sorted member list)."""
    params = params or ClusterParams()
    nm = network_features(domains, chains, dns_store)
    if not nm.domains:
        return []
    return _groups(nm.domains, _cluster_rows(nm.matrix, params))


def acl(members: Iterable[str], snapshots: dict[str, bytes], params: Optional[ClusterParams] = None,
        tokenizer: Optional[Tokenizer] = None) -> tuple[list[list[str]], dict[str, str]]:
    """Content-level subclusters of one network cluster, plus the members
    left out (domain -> reason).

    Content means words: the default tokenizer skips numeric tokens, since
    phone numbers and counters identify an operator, not a page kit.
    """
    params = params or ClusterParams()
    tokenizer = tokenizer or Tokenizer(alpha_only=True)
    members = sorted(set(members))
    excluded = {d: "missing snapshot" for d in members if snapshots.get(d) is None}
    present = [d for d in members if d not in excluded]
    if not present:
        return [], excluded
    vecs = tfidf_vectors({d: visible_text(snapshots[d]) for d in present}, tokenizer,
                         min_df=CONTENT_MIN_DF)
    _, mat = tfidf_matrix(vecs)
    if mat.shape[1] == 0:
        return [present], excluded
    return _groups([v.domain for v in vecs], _cluster_rows(mat, params)), excluded


@dataclass
class Campaign:
    campaign_id: str
    ncl_id: str
    members: list[str]
    label: CampaignLabel
    support_domains: list[str] = field(default_factory=list)
    ips: list[str] = field(default_factory=list)
    phone_numbers: list[str] = field(default_factory=list)

    def row(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "final_domains": self.label.final_domain_count,
            "support_domains": self.label.support_domain_count,
            "ips": self.label.ip_count,
            "phone_numbers": self.label.phone_count,
            "labels": " ".join(self.label.keywords),
            "samples": self.members[:N_SAMPLES],
        }


CAMPAIGN_COLUMNS = ("campaign_id", "final_domains", "support_domains", "ips", "phone_numbers", "labels", "samples")


@dataclass
class ClusterTree:
    ncl_clusters: list[tuple[str, list[str]]]
    acl_clusters: dict[str, list[tuple[str, list[str]]]]
    labels: dict[str, list[str]]
    campaigns: list[Campaign] = field(default_factory=list)
    excluded: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    def leaves(self) -> dict[str, list[str]]:
        return {sid: m for subs in self.acl_clusters.values() for sid, m in subs}

    def leaf_of(self) -> dict[str, str]:
        return {d: sid for sid, members in self.leaves().items() for d in members}

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "ncl_clusters": [{"cluster_id": cid, "members": m} for cid, m in self.ncl_clusters],
            "acl_clusters": {
                cid: [{"subcluster_id": sid, "members": m} for sid, m in subs]
                for cid, subs in self.acl_clusters.items()
            },
            "labels": self.labels,
            "excluded": dict(sorted(self.excluded.items())),
            "campaign_columns": list(CAMPAIGN_COLUMNS),
            "campaigns": [c.row() for c in self.campaigns],
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n", "utf-8")

    @classmethod
    def from_json(cls, d: dict) -> "ClusterTree":
        tree = cls(
            ncl_clusters=[(c["cluster_id"], c["members"]) for c in d["ncl_clusters"]],
            acl_clusters={cid: [(s["subcluster_id"], s["members"]) for s in subs]
                          for cid, subs in d["acl_clusters"].items()},
            labels=d["labels"],
            excluded=d.get("excluded", {}),
            seed=d.get("seed", 0),
        )
        leaves = tree.leaves()
        for row in d.get("campaigns", []):
            label = CampaignLabel(row["labels"].split(), row["support_domains"], row["final_domains"],
                                  row["ips"], row["phone_numbers"])
            sid = row["campaign_id"]
            tree.campaigns.append(Campaign(sid, sid.split(".")[0], leaves.get(sid, []), label))
        return tree


def _support_map(chains: Iterable[RedirectChain]) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for c in chains:
        if not c.completed or not c.final_domain:
            continue
        s = out.setdefault(c.final_domain, set())
        s.update(h.fqdn for h in c.hops if h.fqdn and h.fqdn != c.final_domain)
    return out


def build_tree(
    final_domains: Iterable[str],
    chains: Iterable[RedirectChain],
    dns_store,
    snapshots: dict[str, bytes],
    params: Optional[ClusterParams] = None,
    lexicon: Optional[Lexicon] = None,
    tokenizer: Optional[Tokenizer] = None,
) -> ClusterTree:
    params = params or ClusterParams()
    chains = list(chains)
    final = sorted(set(final_domains))
    support = _support_map(chains)
    ncl_groups = ncl(final, chains, dns_store, params)
    tree = ClusterTree([], {}, {}, seed=params.seed)
    for i, members in enumerate(ncl_groups):
        cid = f"N{i}"
        tree.ncl_clusters.append((cid, members))
        subs, excluded = acl(members, snapshots, params, tokenizer)
        tree.excluded.update(excluded)
        tree.acl_clusters[cid] = []
        for j, leaf in enumerate(subs):
            sid = f"{cid}.{j}"
            tree.acl_clusters[cid].append((sid, leaf))
            titles = {d: page_title(snapshots[d]) for d in leaf}
            sup = sorted(set().union(*(support.get(d, set()) for d in leaf)) - set(final))
            ips = sorted({ip for d in leaf for ip in _all_ips(dns_store, d)})
            phones = sorted({p.digits for d in leaf for p in extract_phone_numbers(snapshots[d])})
            label = label_cluster(leaf, titles, lexicon, params.common_words, top_k=params.top_k,
                                  support_domains=sup, ips=ips, phones=phones)
            tree.labels[sid] = label.keywords
            tree.campaigns.append(Campaign(sid, cid, leaf, label, sup, ips, phones))
    tree.campaigns.sort(key=lambda c: (-c.label.final_domain_count, c.campaign_id))
    return tree
