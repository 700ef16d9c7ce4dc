"""Unigram word segmentation (Viterbi) and the per-domain word sets used for
campaign labels."""

from __future__ import annotations

import math
import re
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from ..domains import SuffixList, default_suffixes

_ALPHA_RUNS = re.compile(r"[a-z]+")
MIN_WORD_LEN = 3


class Lexicon:
    """Word -> count table; costs are negative log relative frequencies."""

    def __init__(self, counts: dict[str, float]):
        self.counts = {w.lower(): float(c) for w, c in counts.items() if c > 0}
        self.total = sum(self.counts.values())
        self.max_len = max((len(w) for w in self.counts), default=0)
        self._log_total = math.log(self.total) if self.total else 0.0
        self._cost = {w: self._log_total - math.log(c) for w, c in self.counts.items()}

    @classmethod
    def from_tsv(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls._parse(fh)

    @classmethod
    def _parse(cls, lines: Iterable[str]) -> "Lexicon":
        counts = {}
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, _, count = line.partition("\t")
            counts[word] = float(count or 1)
        return cls(counts)

    def __contains__(self, word: str) -> bool:
        return word in self.counts

    def __len__(self):
        return len(self.counts)

    def cost(self, word: str) -> float:
        c = self._cost.get(word)
        if c is not None:
            return c
        # unknown strings get a penalty that grows with their length
        return self._log_total - math.log(10.0) + len(word) * math.log(10.0)


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    text = resources.files("tsshunt.data").joinpath("lexicon_en.tsv").read_text("utf-8")
    return Lexicon._parse(text.splitlines())


def segmentation_cost(words: list[str], lexicon: Lexicon) -> float:
    return sum(lexicon.cost(w) for w in words)


def viterbi_segment(s: str, lexicon: Lexicon) -> list[str]:
    """Minimum-cost split of ``s`` into pieces (lexicon words or unknown runs)."""
    n = len(s)
    if n == 0:
        return []
    best = [0.0] + [math.inf] * n
    back = [0] * (n + 1)
    for i in range(1, n + 1):
        for j in range(i):
            c = best[j] + lexicon.cost(s[j:i])
            if c < best[i]:
                best[i], back[i] = c, j
    out, i = [], n
    while i > 0:
        out.append(s[back[i]:i])
        i = back[i]
    return out[::-1]


def segment_words(s: str, lexicon: Optional[Lexicon] = None) -> list[str]:
    """Lexicon words found in ``s``: lowercase, split on non-letters, segment
    each run, and keep pieces that are real words of 3+ letters."""
    lexicon = lexicon or default_lexicon()
    out = []
    for run in _ALPHA_RUNS.findall(s.lower()):
        for w in viterbi_segment(run, lexicon):
            if len(w) >= MIN_WORD_LEN and w in lexicon:
                out.append(w)
    return out


def domain_parts(fqdn: str, suffixes: Optional[SuffixList] = None) -> list[str]:
    """Domain labels left of the effective TLD."""
    labels, _ = (suffixes or default_suffixes()).split(fqdn)
    return labels


def title_parts(title: str) -> list[str]:
    return [t for t in re.split(r"\s+", title.strip()) if t]


def campaign_words(fqdn: str, title: str = "", lexicon: Optional[Lexicon] = None,
                   suffixes: Optional[SuffixList] = None) -> set[str]:
    """The word set of a domain: words in its non-eTLD labels plus its page title."""
    lexicon = lexicon or default_lexicon()
    words: set[str] = set()
    for part in domain_parts(fqdn, suffixes) + title_parts(title):
        words.update(segment_words(part, lexicon))
    return words
