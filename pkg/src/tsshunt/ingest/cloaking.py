from __future__ import annotations

from dataclasses import dataclass

from ..text import Tokenizer, jaccard, visible_text
from .fetch import Fetcher

DEFAULT_CUTOFF = 0.5


@dataclass(frozen=True)
class CloakingReport:
    uri: str
    differs: bool
    similarity: float


def detect_cloaking(
    uri: str,
    search_referer: str,
    *,
    fetcher: Fetcher,
    user_agent: str = "",
    cutoff: float = DEFAULT_CUTOFF,
    tokenizer: Tokenizer | None = None,
) -> CloakingReport:
    """Compare what a search-referred visitor sees with what a bare crawler sees.

    Similarity is the Jaccard index of the two visible-text token sets.
    Fetch errors propagate to the caller.
    """
    tokenizer = tokenizer or Tokenizer(stopwords=frozenset())
    referred = fetcher.fetch(uri, referer=search_referer, user_agent=user_agent)
    vanilla = fetcher.fetch(uri, referer="", user_agent=user_agent)
    if referred.body == vanilla.body and referred.status == vanilla.status:
        sim = 1.0
    else:
        sim = jaccard(tokenizer(visible_text(referred.body)), tokenizer(visible_text(vanilla.body)))
    return CloakingReport(uri, sim < cutoff, sim)
