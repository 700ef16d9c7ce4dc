"""Tokenization and HTML text helpers shared by every stage."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

from bs4 import BeautifulSoup, MarkupResemblesLocatorWarning

_SPLIT_RE = re.compile(r"[^a-z0-9]+")
_INVISIBLE_TAGS = ("script", "style", "noscript", "template")


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    text = resources.files("tsshunt.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            line.strip().lower() for line in fh if line.strip() and not line.startswith("#")
        )


@dataclass(frozen=True)
class Tokenizer:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords.

    The same instance (or its ``config()``) is stored with trained models so
    inference tokenizes exactly like training did.
    """

    min_len: int = 2
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    alpha_only: bool = False     # drop tokens containing digits

    def __call__(self, text: str) -> list[str]:
        out = []
        for tok in _SPLIT_RE.split(text.lower()):
            if len(tok) < self.min_len or tok in self.stopwords:
                continue
            if self.alpha_only and not tok.isalpha():
                continue
            out.append(tok)
        return out

    def config(self) -> dict:
        return {"min_len": self.min_len, "stopwords": sorted(self.stopwords), "alpha_only": self.alpha_only}

    @classmethod
    def from_config(cls, cfg: dict) -> "Tokenizer":
        return cls(min_len=int(cfg["min_len"]), stopwords=frozenset(cfg["stopwords"]),
                   alpha_only=bool(cfg.get("alpha_only", False)))


def decode_html(html: bytes | str) -> str:
    if isinstance(html, str):
        return html
    return html.decode("utf-8", errors="replace")


def _soup(html: bytes | str) -> BeautifulSoup:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MarkupResemblesLocatorWarning)
        return BeautifulSoup(decode_html(html), "html.parser")


def visible_text(html: bytes | str) -> str:
    """Text a browser would render: title plus body, minus scripts and styles."""
    soup = _soup(html)
    for tag in soup(_INVISIBLE_TAGS):
        tag.decompose()
    return soup.get_text(" ", strip=True)


def page_title(html: bytes | str) -> str:
    soup = _soup(html)
    if soup.title and soup.title.string:
        return soup.title.string.strip()
    return ""


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)
