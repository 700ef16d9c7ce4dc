"""Campaign keywords: the most frequent words across a cluster's domain
names and page titles."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..domains import SuffixList
from .segment import Lexicon, campaign_words, default_lexicon

DEFAULT_COMMON_WORDS = frozenset({"call", "support", "toll", "free"})
DEFAULT_TOP_K = 3
MAX_KEYWORDS = 4


@dataclass
class CampaignLabel:
    keywords: list[str] = field(default_factory=list)
    support_domain_count: int = 0
    final_domain_count: int = 0
    ip_count: int = 0
    phone_count: int = 0


def keyword_counts(members: Iterable[str], titles: dict[str, str], lexicon: Optional[Lexicon] = None,
                   suffixes: Optional[SuffixList] = None) -> Counter:
    """How many member domains each word appears for (once per domain)."""
    lexicon = lexicon or default_lexicon()
    freq = Counter()
    for d in members:
        freq.update(campaign_words(d, titles.get(d, ""), lexicon, suffixes))
    return freq


def top_keywords(freq: Counter, common_words=DEFAULT_COMMON_WORDS, top_k: int = DEFAULT_TOP_K) -> list[str]:
    """The ``top_k`` most frequent words; a tie at the cutoff admits one more.
    Returned alphabetically."""
    ranked = sorted(((w, c) for w, c in freq.items() if w not in common_words and c > 0),
                    key=lambda wc: (-wc[1], wc[0]))
    if len(ranked) <= top_k:
        return sorted(w for w, _ in ranked)
    keep = ranked[:top_k]
    if ranked[top_k][1] == keep[-1][1] and top_k < MAX_KEYWORDS:
        keep.append(ranked[top_k])
    return sorted(w for w, _ in keep)


def label_cluster(
    members: Iterable[str],
    titles: dict[str, str],
    lexicon: Optional[Lexicon] = None,
    common_words=DEFAULT_COMMON_WORDS,
    *,
    top_k: int = DEFAULT_TOP_K,
    support_domains: Iterable[str] = (),
    ips: Iterable[str] = (),
    phones: Iterable[str] = (),
    suffixes: Optional[SuffixList] = None,
) -> CampaignLabel:
    members = sorted(set(members))
    if not members:
        raise ValueError("cannot label an empty cluster")
    freq = keyword_counts(members, titles, lexicon, suffixes)
    return CampaignLabel(
        keywords=top_keywords(freq, frozenset(common_words), top_k),
        support_domain_count=len(set(support_domains)),
        final_domain_count=len(members),
        ip_count=len(set(ips)),
        phone_count=len(set(phones)),
    )
