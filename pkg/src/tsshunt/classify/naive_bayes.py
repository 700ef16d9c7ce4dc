"""Multinomial Naive Bayes over bag-of-words page features, with ROC metrics
from stratified k-fold cross-validation."""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..text import Tokenizer, visible_text

TSS = "TSS"
NON_TSS = "NonTSS"
MODEL_VERSION = 1
DEFAULT_THRESHOLD = 0.6


class ClassifierError(ValueError):
    pass


@dataclass
class FeatureVector:
    term_counts: Counter
    doc_id: str = ""


@dataclass(frozen=True)
class LabelResult:
    score: float
    is_tss: bool


@dataclass
class Metrics:
    auc: float
    roc_points: list[tuple[float, float]]
    tpr_at_threshold: float
    fpr_at_threshold: float
    oof_scores: list[float] = field(default_factory=list, repr=False)


def normalize_label(label) -> str:
    text = str(label).strip().lower().replace("-", "").replace("_", "")
    if text in ("tss", "1", "true", "scam"):
        return TSS
    if text in ("nontss", "0", "false", "benign"):
        return NON_TSS
    raise ClassifierError(f"unknown label {label!r}")


def featurize(text: str, tokenizer: Tokenizer, doc_id: str = "") -> FeatureVector:
    return FeatureVector(Counter(tokenizer(text)), doc_id)


def featurize_html(html: bytes | str, tokenizer: Tokenizer, doc_id: str = "") -> FeatureVector:
    return featurize(visible_text(html), tokenizer, doc_id)


@dataclass
class TrainedModel:
    class_priors: dict[str, float]
    term_loglik: dict[str, dict[str, float]]
    unseen_loglik: dict[str, float]
    smoothing_alpha: float = 1.0
    threshold: float = DEFAULT_THRESHOLD
    tokenizer: Tokenizer = field(default_factory=Tokenizer)
    positive: str = TSS

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ClassifierError("threshold must lie in (0, 1)")
        if abs(sum(self.class_priors.values()) - 1.0) > 1e-9:
            raise ClassifierError("class priors must sum to 1")

    @property
    def classes(self) -> list[str]:
        return sorted(self.class_priors)

    def posterior(self, fv: FeatureVector) -> float:
        """P(positive class | document); tokens never seen in training are ignored."""
        terms = sorted(t for t in fv.term_counts if t in self.term_loglik[self.positive])
        logj = {}
        for c in self.classes:
            table = self.term_loglik[c]
            s = math.log(self.class_priors[c])
            for t in terms:
                s += fv.term_counts[t] * table[t]
            logj[c] = s
        top = max(logj.values())
        z = sum(math.exp(v - top) for v in logj.values())
        return math.exp(logj[self.positive] - top) / z

    def with_threshold(self, threshold: float) -> "TrainedModel":
        return TrainedModel(
            self.class_priors, self.term_loglik, self.unseen_loglik,
            self.smoothing_alpha, threshold, self.tokenizer, self.positive,
        )

    def to_json(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "class_priors": self.class_priors,
            "term_loglik": self.term_loglik,
            "unseen_loglik": self.unseen_loglik,
            "smoothing_alpha": self.smoothing_alpha,
            "threshold": self.threshold,
            "tokenizer": self.tokenizer.config(),
            "positive": self.positive,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TrainedModel":
        if d.get("version") != MODEL_VERSION:
            raise ClassifierError(f"unsupported model version {d.get('version')!r}")
        return cls(
            class_priors=d["class_priors"],
            term_loglik=d["term_loglik"],
            unseen_loglik=d["unseen_loglik"],
            smoothing_alpha=d["smoothing_alpha"],
            threshold=d["threshold"],
            tokenizer=Tokenizer.from_config(d["tokenizer"]),
            positive=d["positive"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_json(json.loads(Path(path).read_text("utf-8")))


def fit(
    labeled: Sequence[tuple[FeatureVector, str]],
    alpha: float = 1.0,
    threshold: float = DEFAULT_THRESHOLD,
    tokenizer: Tokenizer | None = None,
) -> TrainedModel:
    classes = sorted({c for _, c in labeled})
    if len(classes) < 2:
        raise ClassifierError("training data must contain at least two classes")
    if TSS not in classes:
        raise ClassifierError(f"training data has no {TSS} examples")
    doc_count = Counter(c for _, c in labeled)
    term_count = {c: Counter() for c in classes}
    for fv, c in labeled:
        term_count[c].update(fv.term_counts)
    vocab = set()
    for counts in term_count.values():
        vocab.update(counts)
    n_vocab = len(vocab)
    priors = {c: doc_count[c] / len(labeled) for c in classes}
    loglik, unseen = {}, {}
    for c in classes:
        denom = sum(term_count[c].values()) + alpha * n_vocab
        loglik[c] = {t: math.log((term_count[c][t] + alpha) / denom) for t in sorted(vocab)}
        unseen[c] = math.log(alpha / denom) if alpha > 0 else float("-inf")
    return TrainedModel(priors, loglik, unseen, alpha, threshold, tokenizer or Tokenizer())


def stratified_folds(labels: Sequence[str], k: int, seed: int = 0) -> list[int]:
    """Fold index per sample; each class is spread round-robin after a seeded shuffle."""
    rng = random.Random(seed)
    fold = [0] * len(labels)
    for c in sorted(set(labels)):
        idx = [i for i, lab in enumerate(labels) if lab == c]
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            fold[i] = j % k
    return fold


def roc_curve(labels: Sequence[bool], scores: Sequence[float]) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) points from (0, 0) upward; tied scores form one step."""
    pos = sum(1 for y in labels if y)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise ClassifierError("ROC needs both positive and negative samples")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    while i < len(order):
        s = scores[order[i]]
        while i < len(order) and scores[order[i]] == s:
            if labels[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / neg, tp / pos, s))
    return points


def auc_trapezoid(points: Iterable[tuple[float, ...]]) -> float:
    pts = [(p[0], p[1]) for p in points]
    return sum((x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(pts, pts[1:]))


def rates_at(labels: Sequence[bool], scores: Sequence[float], threshold: float) -> tuple[float, float]:
    pos = sum(1 for y in labels if y)
    neg = len(labels) - pos
    tp = sum(1 for y, s in zip(labels, scores) if y and s > threshold)
    fp = sum(1 for y, s in zip(labels, scores) if not y and s > threshold)
    return tp / pos, fp / neg


def train_classifier(
    labeled: Sequence[tuple[FeatureVector, str]],
    folds: int = 10,
    *,
    alpha: float = 1.0,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    tokenizer: Tokenizer | None = None,
) -> tuple[TrainedModel, Metrics]:
    """Cross-validate, then fit the returned model on all of ``labeled``."""
    labeled = [(fv, normalize_label(c)) for fv, c in labeled]
    if len({c for _, c in labeled}) < 2:
        raise ClassifierError("training data must contain at least two classes")
    if folds < 2:
        raise ClassifierError("folds must be >= 2")
    labels = [c for _, c in labeled]
    fold_of = stratified_folds(labels, folds, seed)
    oof = [0.0] * len(labeled)
    for k in range(folds):
        train = [labeled[i] for i in range(len(labeled)) if fold_of[i] != k]
        test = [i for i in range(len(labeled)) if fold_of[i] == k]
        if not test:
            continue
        model_k = fit(train, alpha, threshold, tokenizer)
        for i in test:
            oof[i] = model_k.posterior(labeled[i][0])
    truth = [c == TSS for c in labels]
    roc = roc_curve(truth, oof)
    tpr, fpr = rates_at(truth, oof, threshold)
    metrics = Metrics(auc_trapezoid(roc), [(p[0], p[1]) for p in roc], tpr, fpr, oof)
    return fit(labeled, alpha, threshold, tokenizer), metrics


def classify_page(model: TrainedModel, html: bytes | str) -> LabelResult:
    fv = featurize_html(html, model.tokenizer)
    score = model.posterior(fv)
    return LabelResult(score, score > model.threshold)


def read_labeled(path, tokenizer: Tokenizer | None = None) -> list[tuple[FeatureVector, str]]:
    tokenizer = tokenizer or Tokenizer()
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            text = row["text"]
            if "<" in text and ">" in text:
                text = visible_text(text)
            out.append((featurize(text, tokenizer, row["doc_id"]), normalize_label(row["label"])))
    return out
