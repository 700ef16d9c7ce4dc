import json
import random
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import roc_auc_score

from oracles import DenseNaiveBayes
from tsshunt.classify import Categorizer, ReputationList, TrainedModel, categorize_aggressiveness
from tsshunt.classify.categorize import NonTssRules, categorize_listing, filter_reputation
from tsshunt.classify.naive_bayes import (
    ClassifierError,
    auc_trapezoid,
    classify_page,
    featurize,
    fit,
    roc_curve,
    stratified_folds,
    train_classifier,
)
from tsshunt.classify.phones import extract_phone_numbers, normalize_phone
from tsshunt.domains import DomainError
from tsshunt.ingest.models import HTTP_3XX, ORIGIN, TERMINAL, Hop, RedirectChain
from tsshunt.synthetic import benign_page, classifier_corpus, toll_free_number, tss_page
from tsshunt.text import Tokenizer

FIXTURES = Path(__file__).parent / "fixtures" / "aggressiveness"
TOK = Tokenizer(stopwords=frozenset())


def labeled(rows):
    return [(featurize(text, TOK, doc_id), label) for doc_id, text, label in rows]


def separable(n=200):
    rng = random.Random(1)
    rows = []
    for i in range(n):
        if i % 2:
            rows.append((f"a{i}", " ".join(f"a{rng.randint(1, 50)}" for _ in range(20)), "TSS"))
        else:
            rows.append((f"b{i}", " ".join(f"b{rng.randint(1, 50)}" for _ in range(20)), "NonTSS"))
    return rows


# reputation

def test_reputation_filter_registered_domain():
    rep = ReputationList(["bestbuy.com", "google.com"])
    assert filter_reputation("support.bestbuy.com", rep)
    assert not filter_reputation("virusinfection0x225.site", rep)
    with pytest.raises(DomainError):
        filter_reputation("not a domain!", rep)


def test_reputation_matches_set_oracle(tmp_path):
    rng = random.Random(7)
    listed = {f"site{i}.com" for i in range(300)}
    path = tmp_path / "top.csv"
    path.write_text("".join(f"{k},{d}\n" for k, d in enumerate(sorted(listed), 1)))
    rep = ReputationList.load(path)
    for _ in range(1000):
        name = f"site{rng.randint(0, 600)}.com"
        fqdn = rng.choice(["", "www.", "a.b."]) + name
        assert filter_reputation(fqdn, rep) == (name in listed)
    assert len(ReputationList.load(path, top=10)) == 10


# phone numbers

def test_toll_free_formats():
    text = "Call (877) 884-6922 or 1-800-555-0100, +18445550111, 866.555.0122 and id888555013399x"
    got = [(n.digits, n.prefix) for n in extract_phone_numbers(text)]
    assert got == [("8778846922", "877"), ("8005550100", "800"), ("8445550111", "844"), ("8665550122", "866")]


def test_sample_domain_number_and_non_toll_free():
    assert [n.prefix for n in extract_phone_numbers(b"Call 1-877-884-6922")] == ["877"]
    assert extract_phone_numbers("404-555-0100") == []
    assert extract_phone_numbers("") == []


def test_numbers_deduplicated():
    assert len(extract_phone_numbers("1-888-555-0123 and (888) 555-0123 and 888 555 0123")) == 1


def test_embedded_numbers_recall_over_layouts():
    rng = random.Random(3)
    layouts = ["<p>{0}</p>", "<b>CALL&nbsp;{0}</b>", "<a href='tel:{0}'>x</a>", "text{0}text", "<td>{0}</td>"]
    for k in range(50):
        nums = [toll_free_number(rng) for _ in range(rng.randint(1, 4))]
        styles = [lambda n: n, lambda n: "(" + n[:3] + ") " + n[4:], lambda n: "1-" + n,
                  lambda n: "+1" + n.replace("-", ""), lambda n: n.replace("-", ".")]
        page = " ".join(layouts[(k + i) % len(layouts)].format(styles[(k + i) % 5](n)) for i, n in enumerate(nums))
        page += " office 212-555-0199"
        got = {n.digits for n in extract_phone_numbers(page)}
        assert got == {normalize_phone(n) for n in nums}


# naive bayes

def test_separable_auc_is_one():
    model, metrics = train_classifier(labeled(separable()), folds=10)
    assert metrics.auc == 1.0
    score = classify_page(model, " ".join(f"a{i}" for i in range(1, 30)))
    assert score.score > 0.99 and score.is_tss


def test_empty_page_scores_prior():
    model, _ = train_classifier(labeled(separable(90)), folds=3)
    res = classify_page(model, "<html></html>")
    assert res.score == pytest.approx(model.class_priors["TSS"], abs=1e-12)


def test_single_class_and_bad_folds_rejected():
    rows = labeled(separable(20))
    with pytest.raises(ClassifierError):
        train_classifier([r for r in rows if r[1] == "TSS"])
    with pytest.raises(ClassifierError):
        train_classifier(rows, folds=1)


def test_posterior_matches_dense_oracle():
    rows = classifier_corpus(n=400, overlap=0.6, seed=5)
    data = labeled(rows)
    model = fit(data, alpha=1.0)
    oracle = DenseNaiveBayes(1.0).fit([fv.term_counts for fv, _ in data], [c for _, c in data])
    test = labeled(classifier_corpus(n=200, overlap=0.6, seed=99))
    ours = np.array([model.posterior(fv) for fv, _ in test])
    theirs = oracle.posterior([fv.term_counts for fv, _ in test], "TSS")
    assert np.allclose(ours, theirs, atol=1e-9)


def test_auc_close_to_sklearn_on_overlapping_corpus():
    rows = classifier_corpus(n=600, overlap=0.7, seed=8)
    data = labeled(rows)
    _, metrics = train_classifier(data, folds=10)
    truth = [c == "TSS" for _, c in data]
    assert abs(metrics.auc - roc_auc_score(truth, metrics.oof_scores)) < 1e-9


def test_priors_and_threshold_invariants():
    model = fit(labeled(separable(30)))
    assert sum(model.class_priors.values()) == pytest.approx(1.0)
    with pytest.raises(ClassifierError):
        model.with_threshold(1.0)


def test_model_roundtrip(tmp_path):
    model = fit(labeled(classifier_corpus(n=80, seed=2)))
    model.save(tmp_path / "m.json")
    again = TrainedModel.load(tmp_path / "m.json")
    page = tss_page(random.Random(0), "microsoft", "1-888-555-0100", True)
    assert classify_page(again, page) == classify_page(model, page)


def test_stratified_folds_balance():
    labels = ["TSS"] * 53 + ["NonTSS"] * 47
    folds = stratified_folds(labels, 10, seed=3)
    for k in range(10):
        members = [labels[i] for i in range(100) if folds[i] == k]
        assert 5 <= members.count("TSS") <= 6 and 4 <= members.count("NonTSS") <= 5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(0, 1)), min_size=2, max_size=60))
def test_roc_monotone_and_auc_matches_oracle(pairs):
    labels = [y for y, _ in pairs]
    if all(labels) or not any(labels):
        labels[0] = not labels[0]
    scores = [s for _, s in pairs]
    pts = roc_curve(labels, scores)
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    assert xs == sorted(xs) and ys == sorted(ys)
    assert pts[-1][:2] == (1.0, 1.0)
    assert abs(auc_trapezoid(pts) - roc_auc_score(labels, scores)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 500), st.floats(0.05, 0.9), st.floats(0.0, 0.09))
def test_raising_threshold_never_adds_tss(seed, t, bump):
    model = fit(labeled(classifier_corpus(n=60, overlap=0.8, seed=seed)))
    low, high = model.with_threshold(t), model.with_threshold(t + bump)
    for _, text, _ in classifier_corpus(n=20, overlap=0.8, seed=seed + 1):
        if classify_page(high, text).is_tss:
            assert classify_page(low, text).is_tss


def test_scores_are_bit_identical():
    model = fit(labeled(classifier_corpus(n=100, seed=4)))
    page = benign_page(random.Random(5), "blog")
    assert classify_page(model, page).score == classify_page(model, page).score


# aggressiveness

def test_hand_labeled_fixture_set():
    manifest = json.loads((FIXTURES / "manifest.json").read_text())
    assert len(manifest) == 40
    for name, want in manifest.items():
        assert categorize_aggressiveness((FIXTURES / name).read_bytes()) == want, name


def test_alert_loop_and_passive_examples():
    assert categorize_aggressiveness('<script>window.alert("VIRUS DETECTED")</script>') == "aggressive"
    assert categorize_aggressiveness("<h1>Apple Support</h1><p>Call 1-888-555-0100</p>") == "passive"


# listing categorization

def _chain(fqdn, completed=True):
    return RedirectChain(f"http://{fqdn}/", [Hop(f"http://{fqdn}/", fqdn, TERMINAL if completed else ORIGIN, 200)],
                         fqdn, completed, None if completed else "fetch_error")


class _Snap:
    def __init__(self, html):
        self.html = html.encode() if isinstance(html, str) else html


@pytest.fixture(scope="module")
def trained():
    rng = random.Random(0)
    rows = [(f"t{i}", tss_page(rng, rng.choice(["microsoft", "apple", "norton"]), toll_free_number(rng),
                                rng.random() < 0.5), "TSS") for i in range(80)]
    rows += [(f"b{i}", benign_page(rng, rng.choice(["blog", "news", "shop"]), with_phone=i % 2 == 0), "NonTSS")
             for i in range(80)]
    from tsshunt.text import visible_text
    return fit([(featurize(visible_text(h), Tokenizer(), d), c) for d, h, c in rows])


def test_reputation_short_circuits_classifier(trained):
    cat = Categorizer(trained, ReputationList(["geeksquad.com"]))
    page = tss_page(random.Random(1), "microsoft", "1-888-555-0100", True)
    label = cat.categorize_listing(None, _chain("support.geeksquad.com"), _Snap(page))
    assert (label.category.major, label.category.minor) == ("NonTSS", "legitimate")
    assert cat.classified == []


def test_alert_loop_with_toll_free_is_aggressive(trained):
    page = tss_page(random.Random(2), "microsoft", "1-877-884-6922", True, marker="window_alert")
    cat = categorize_listing(None, _chain("virusinfection0x225.site"), _Snap(page), trained, ReputationList([]))
    assert (cat.major, cat.minor) == ("TSS", "aggressive")


def test_missing_snapshot_and_incomplete_chain(trained):
    cat = Categorizer(trained, ReputationList([]))
    assert cat.categorize_listing(None, _chain("a.test"), None).category.reason == "missing snapshot"
    lab = cat.categorize_listing(None, _chain("b.test", completed=False), _Snap("x"))
    assert lab.category.minor == "uncategorized" and "incomplete" in lab.category.reason


def test_thirty_fixture_batch_counts(trained):
    rng = random.Random(11)
    rules = NonTssRules.load()
    cases = []
    for i in range(6):
        cases.append((f"scam{i}.xyz", tss_page(rng, "microsoft", toll_free_number(rng), True), ("TSS", "aggressive")))
        cases.append((f"care{i}.online", tss_page(rng, "apple", toll_free_number(rng), False), ("TSS", "passive")))
    for i in range(4):
        cases.append((f"forum{i}.example.com", benign_page(rng, "blog"), ("NonTSS", "blog_forum")))
        cases.append((f"news{i}.example.com", benign_page(rng, "news"), ("NonTSS", "news")))
        cases.append((f"shop{i}.com", benign_page(rng, "shop", with_phone=True), ("NonTSS", "uncategorized")))
    cases.append(("800notes.com", benign_page(rng, "shop"), ("NonTSS", "complaint")))
    cases.append(("whocallsme.com", benign_page(rng, "shop"), ("NonTSS", "complaint")))
    cases.append(("support.apple.com", tss_page(rng, "apple", toll_free_number(rng), False), ("NonTSS", "legitimate")))
    cases.append(("www.google.com", benign_page(rng, "news"), ("NonTSS", "legitimate")))
    cases.append(("local.biz", benign_page(rng, "news"), ("NonTSS", "uncategorized")))
    cases.append(("helpblog.net", benign_page(rng, "news"), ("NonTSS", "blog_forum")))
    assert len(cases) == 30
    cat = Categorizer(trained, ReputationList(["google.com", "apple.com"]), rules)
    got = Counter()
    for fqdn, html, want in cases:
        c = cat.categorize_listing(None, _chain(fqdn), _Snap(html)).category
        assert (c.major, c.minor) == want, fqdn
        got[want] += 1
    assert got[("TSS", "aggressive")] == 6 and sum(got.values()) == 30


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_no_tss_without_toll_free_number(trained, seed):
    rng = random.Random(seed)
    page = tss_page(rng, "norton", "212-555-0100", rng.random() < 0.5)
    label = Categorizer(trained, ReputationList([])).categorize_page("x.test", page.encode())
    assert label.category.major == "NonTSS"
