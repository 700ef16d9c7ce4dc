"""Search-phrase generation from a corpus of known scam pages.

A bigram (Markov) language model is fit on the in-vocabulary token stream of
each document; every observed n-gram up to ``max_n`` gets the chain-rule
probability P(w1) * prod P(wi | wi-1), and phrases are kept when that
probability is strictly above the per-length threshold.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .text import Tokenizer, default_stopwords, visible_text


class SeedError(ValueError):
    pass


@dataclass(frozen=True)
class Corpus:
    documents: tuple[tuple[str, str], ...]

    def __post_init__(self):
        ids = [d for d, _ in self.documents]
        if len(ids) != len(set(ids)):
            raise SeedError("duplicate doc_id in corpus")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "Corpus":
        return cls(tuple((str(d), str(t)) for d, t in pairs))

    def __len__(self):
        return len(self.documents)


@dataclass
class TokenStats:
    unigram_count: Counter
    doc_frequency: Counter
    total_tokens: int
    n_documents: int
    doc_tokens: dict[str, list[str]] = field(default_factory=dict, repr=False)


@dataclass
class PhraseModel:
    vocabulary: frozenset[str]
    unigram_prob: dict[str, float]
    bigram_prob: dict[tuple[str, str], float]
    ngram_prob: dict[tuple[str, ...], float]
    max_n: int = 7

    def probability(self, tokens: tuple[str, ...]) -> float:
        """Chain-rule probability of any token sequence (0 if unseen)."""
        if not tokens or tokens[0] not in self.unigram_prob:
            return 0.0
        p = self.unigram_prob[tokens[0]]
        for prev, cur in zip(tokens, tokens[1:]):
            p *= self.bigram_prob.get((prev, cur), 0.0)
        return p


@dataclass(frozen=True)
class Phrase:
    text: str
    n: int
    probability: float

    def to_json(self) -> dict:
        return {"phrase": self.text, "n": self.n, "probability": self.probability}


def load_corpus(path) -> Corpus:
    """Read a directory of text/HTML files or a JSONL file of {doc_id, text};
    markup is reduced to its visible text."""
    path = Path(path)
    pairs = []
    if path.is_dir():
        for f in sorted(p for p in path.iterdir() if p.is_file()):
            raw = f.read_text("utf-8", errors="replace")
            if f.suffix.lower() in (".html", ".htm"):
                raw = visible_text(raw)
            pairs.append((f.name, raw))
    else:
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    text = row["text"]
                    if "<" in text and ">" in text:
                        text = visible_text(text)
                    pairs.append((row["doc_id"], text))
    return Corpus.from_pairs(pairs)


def tokenize_corpus(corpus: Corpus, stopwords: frozenset[str] | None = None) -> TokenStats:
    if not corpus.documents:
        raise SeedError("empty corpus")
    tok = Tokenizer(stopwords=default_stopwords() if stopwords is None else frozenset(stopwords))
    unigram, docfreq = Counter(), Counter()
    doc_tokens = {}
    for doc_id, text in corpus.documents:
        tokens = tok(text)
        doc_tokens[doc_id] = tokens
        unigram.update(tokens)
        docfreq.update(set(tokens))
    return TokenStats(unigram, docfreq, sum(unigram.values()), len(corpus), doc_tokens)


def select_vocabulary(stats: TokenStats, min_doc_count: int = 10) -> frozenset[str]:
    return frozenset(t for t, df in stats.doc_frequency.items() if df > min_doc_count)


def _vocab_runs(tokens: list[str], vocab: frozenset[str]) -> list[list[str]]:
    """Maximal runs of consecutive in-vocabulary tokens."""
    runs, cur = [], []
    for t in tokens:
        if t in vocab:
            cur.append(t)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def build_ngram_model(
    corpus: Corpus | TokenStats,
    vocab: Iterable[str],
    max_n: int = 7,
    stopwords: frozenset[str] | None = None,
) -> PhraseModel:
    vocab = frozenset(vocab)
    if not vocab:
        raise SeedError("empty vocabulary")
    if max_n < 1:
        raise SeedError("max_n must be >= 1")
    stats = corpus if isinstance(corpus, TokenStats) else tokenize_corpus(corpus, stopwords)

    runs = [run for toks in stats.doc_tokens.values() for run in _vocab_runs(toks, vocab)]
    uni = Counter()
    bi = Counter()
    for run in runs:
        uni.update(run)
        bi.update(zip(run, run[1:]))
    total = sum(uni.values())
    if total == 0:
        raise SeedError("no vocabulary token occurs in the corpus")
    unigram_prob = {w: c / total for w, c in uni.items()}
    bigram_prob = {(a, b): c / uni[a] for (a, b), c in bi.items()}

    ngram_prob: dict[tuple[str, ...], float] = {}
    for run in runs:
        for i in range(len(run)):
            p = unigram_prob[run[i]]
            for j in range(i, min(len(run), i + max_n)):
                if j > i:
                    p *= bigram_prob[(run[j - 1], run[j])]
                ngram_prob.setdefault(tuple(run[i:j + 1]), p)
    return PhraseModel(vocab, unigram_prob, bigram_prob, ngram_prob, max_n)


def parse_thresholds(items: Iterable[str]) -> dict[int, float]:
    """Parse ``n=lambda`` strings from the command line."""
    out = {}
    for item in items:
        n, _, lam = item.partition("=")
        if not lam:
            raise SeedError(f"bad threshold {item!r}, expected n=lambda")
        out[int(n)] = float(lam)
    return out


def generate_phrases(model: PhraseModel, thresholds: Mapping[int, float]) -> list[Phrase]:
    missing = [n for n in range(1, model.max_n + 1) if n not in thresholds]
    if missing:
        raise SeedError(f"missing threshold for n={missing}")
    phrases = [
        Phrase(" ".join(gram), len(gram), p)
        for gram, p in model.ngram_prob.items()
        if p > thresholds[len(gram)]
    ]
    phrases.sort(key=lambda ph: (ph.n, -ph.probability, ph.text))
    return phrases


def write_phrases(phrases: Iterable[Phrase], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ph in phrases:
            fh.write(json.dumps(ph.to_json()) + "\n")


def read_phrases(path) -> list[Phrase]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                out.append(Phrase(row["phrase"], int(row["n"]), float(row["probability"])))
    return out
