import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import adjusted_rand_score

from oracles import best_segmentation
from tsshunt.amplify import DnsStore
from tsshunt.cluster.labels import keyword_counts, label_cluster, top_keywords
from tsshunt.cluster.segment import Lexicon, campaign_words, default_lexicon, segment_words, viterbi_segment
from tsshunt.cluster.svd import choose_rank, reduce_svd
from tsshunt.cluster.tree import CAMPAIGN_COLUMNS, ClusterParams, ClusterTree, acl, build_tree, ncl
from tsshunt.cluster.xmeans import bic, xmeans
from tsshunt.domains import default_suffixes
from tsshunt.synthetic import planted_ecosystem


def blobs(seed, k=5, per=40, dim=4, spread=0.3):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-20, 20, size=(k, dim))
    x = np.vstack([c + rng.normal(0, spread, size=(per, dim)) for c in centers])
    return x, np.repeat(np.arange(k), per)


# segmentation

def test_worked_examples():
    assert campaign_words("abc.exampledomain.com", "title") == {"example", "domain", "title"}
    assert campaign_words("virusinfection0x225.site", "System Shutdown Call 877-563-1632") == \
        {"virus", "infection", "system", "shutdown", "call"}


def test_kindlesupport_matches_exhaustive_oracle():
    lex = default_lexicon()
    assert segment_words("kindlesupport") == ["kindle", "support"]
    best = best_segmentation("kindlesupport", lex.cost)
    assert math.isclose(sum(lex.cost(w) for w in viterbi_segment("kindlesupport", lex)), best)


def test_empty_and_unknown_input():
    assert segment_words("") == []
    assert viterbi_segment("", default_lexicon()) == []
    lex = Lexicon({"tech": 5, "help": 3})
    assert "qzx" not in segment_words("techqzxhelp", lex)
    assert segment_words("techqzxhelp", lex) == ["tech", "help"]


def test_lexicon_tsv(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text("# comment\nvirus\t10\nalert\t5\n\n")
    lex = Lexicon.from_tsv(p)
    assert len(lex) == 2 and "virus" in lex
    assert lex.cost("virus") < lex.cost("alert") < lex.cost("zzzzz")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["tech", "support", "windows", "help", "virus", "kin", "dle", "kindle", "desk",
                                 "a", "x", "pro"]), min_size=1, max_size=5).map("".join).filter(lambda s: len(s) <= 20))
def test_viterbi_is_optimal(s):
    lex = default_lexicon()
    got = sum(lex.cost(w) for w in viterbi_segment(s, lex))
    assert got <= best_segmentation(s, lex.cost) + 1e-9
    assert "".join(viterbi_segment(s, lex)) == s


# labels

def test_top_keywords_frequency_and_ties():
    freq = {"amazon": 9, "kindle": 9, "phone": 5, "call": 20, "help": 5, "desk": 1}
    from collections import Counter
    assert top_keywords(Counter(freq)) == ["amazon", "help", "kindle", "phone"]
    assert top_keywords(Counter({"a1": 0})) == []


def test_kindle_campaign_label():
    members = [f"kindle{w}{i}.club" for i, w in enumerate(["help", "phone", "support", "number"] * 3)]
    titles = {d: "Amazon Kindle Phone Support" for d in members}
    label = label_cluster(members, titles, top_k=3)
    assert {"amazon", "kindle", "phone"} <= set(label.keywords)
    assert not set(label.keywords) & {"call", "support", "toll", "free"}
    assert label.final_domain_count == 12


def test_degenerate_label():
    label = label_cluster(["aaa1.example", "aaa2.example"], {}, Lexicon({}))
    assert label.keywords == [] and label.final_domain_count == 2
    with pytest.raises(ValueError):
        label_cluster([], {})


def test_keywords_count_once_per_domain():
    freq = keyword_counts(["virusvirus.com"], {"virusvirus.com": "virus virus virus"})
    assert freq["virus"] == 1


# svd

def test_svd_eckart_young_and_variance():
    rng = np.random.default_rng(0)
    low = rng.normal(size=(60, 2)) @ rng.normal(size=(2, 12))
    x = low + 0.01 * rng.normal(size=low.shape)
    z = reduce_svd(x, 2)
    eig = np.sort(np.linalg.eigvalsh(x.T @ x))[::-1]
    assert (z ** 2).sum() / (x ** 2).sum() >= 0.95
    assert math.isclose((z ** 2).sum(), eig[:2].sum(), rel_tol=1e-6)
    # reconstruction from the projection hits the optimal rank-2 error
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    signs = np.sign(vt[:2][np.arange(2), np.argmax(np.abs(vt[:2]), axis=1)])
    recon = z @ (vt[:2] * signs[:, None])
    assert math.isclose(((x - recon) ** 2).sum(), (s[2:] ** 2).sum(), rel_tol=1e-6)


def test_svd_full_rank_preserves_distances_and_zero_matrix():
    x = np.eye(5) + 0.1 * np.arange(25).reshape(5, 5) / 25
    z = reduce_svd(x, 5)
    dx = np.linalg.norm(x[:, None] - x[None], axis=2)
    dz = np.linalg.norm(z[:, None] - z[None], axis=2)
    assert np.allclose(dx, dz, atol=1e-9)
    assert not reduce_svd(np.zeros((4, 3)), 2).any()
    with pytest.raises(ValueError):
        reduce_svd(x, 0)
    with pytest.raises(ValueError):
        reduce_svd(x, 6)


def test_choose_rank_mass():
    assert choose_rank([4.0, 1.0, 0.1]) == 1
    assert choose_rank([3.0, 1.0, 0.1]) == 2
    assert choose_rank([1.0, 1.0, 1.0, 1.0]) == 4
    assert choose_rank([0.0, 0.0]) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 12), st.integers(2, 8))
def test_svd_projection_contracts(seed, rows, cols):
    x = np.random.default_rng(seed).normal(size=(rows, cols))
    z = reduce_svd(x, None)
    dx = np.linalg.norm(x[:, None] - x[None], axis=2)
    dz = np.linalg.norm(z[:, None] - z[None], axis=2)
    assert (dz <= dx + 1e-9).all()


# x-means

@pytest.mark.parametrize("seed", range(3))
def test_xmeans_recovers_blobs(seed):
    x, truth = blobs(seed)
    labels = xmeans(x, 1, 10, seed=seed)
    assert len(set(labels)) == 5
    assert adjusted_rand_score(truth, labels) >= 0.9


def test_xmeans_edge_cases():
    assert set(xmeans(np.ones((20, 3)), 1, 5)) == {0}
    two = np.array([[0.0, 0.0], [5.0, 5.0]])
    assert np.array_equal(xmeans(two, 1, 2, seed=7), xmeans(two, 1, 2, seed=7))
    with pytest.raises(ValueError):
        xmeans(np.ones((2, 2)), 3, 5)
    with pytest.raises(ValueError):
        xmeans(np.ones((4, 2)), 1, 0)


def test_bic_prefers_true_split():
    x, truth = blobs(1, k=2)
    one = bic(x, np.zeros(len(x), dtype=int), x.mean(0)[None])
    centers = np.vstack([x[truth == j].mean(0) for j in range(2)])
    assert bic(x, truth, centers) > one


# ncl / acl

@pytest.fixture(scope="module")
def eco():
    return planted_ecosystem(0)


def test_ncl_separates_hosting_groups(eco):
    groups = ncl(eco.final_domains, eco.chains, DnsStore(eco.observations), ClusterParams(seed=0))
    got = {d: i for i, g in enumerate(groups) for d in g}
    truth = [eco.network_of[d] for d in eco.final_domains]
    assert adjusted_rand_score(truth, [got[d] for d in eco.final_domains]) == 1.0


def test_acl_splits_shared_hosting_by_template(eco):
    members = [d for d in eco.final_domains if eco.network_of[d] == 0]
    subs, excluded = acl(members, eco.snapshots, ClusterParams(seed=0))
    assert excluded == {} and len(subs) == 2
    assert all(len({eco.truth[d] for d in s}) == 1 for s in subs)


def test_acl_keeps_a_single_template_together(eco):
    members = [d for d in eco.final_domains if eco.truth[d] == "B:apple"]
    subs, _ = acl(members, eco.snapshots, ClusterParams(seed=0))
    assert len(subs) == 1


def test_acl_excludes_missing_snapshots(eco):
    members = [d for d in eco.final_domains if eco.network_of[d] == 1]
    snaps = dict(eco.snapshots)
    del snaps[members[0]]
    subs, excluded = acl(members, snaps)
    assert excluded == {members[0]: "missing snapshot"}
    assert sorted(d for s in subs for d in s) == members[1:]


def test_single_domain_tree(eco):
    d = eco.final_domains[0]
    tree = build_tree([d], eco.chains, DnsStore(eco.observations), eco.snapshots)
    assert tree.ncl_clusters == [("N0", [d])]
    assert len(tree.campaigns) == 1 and tree.campaigns[0].members == [d]


def _check_tree(tree, eco):
    final = set(eco.final_domains)
    ncl_members = [d for _, m in tree.ncl_clusters for d in m]
    assert sorted(ncl_members) == sorted(final)
    leaves = [d for m in tree.leaves().values() for d in m]
    assert len(leaves) == len(set(leaves)) and set(leaves) == final - set(tree.excluded)
    for cid, members in tree.ncl_clusters:
        assert sorted(d for _, m in tree.acl_clusters[cid] for d in m) == sorted(members)
    assert set(tree.labels) == set(tree.leaves())


@pytest.mark.parametrize("seed", range(3))
def test_tree_recovers_campaigns_and_labels(seed):
    eco = planted_ecosystem(seed)
    tree = build_tree(eco.final_domains, eco.chains, DnsStore(eco.observations), eco.snapshots,
                      ClusterParams(seed=seed))
    _check_tree(tree, eco)
    leaf = tree.leaf_of()
    assert adjusted_rand_score([eco.truth[d] for d in eco.final_domains],
                               [leaf[d] for d in eco.final_domains]) >= 0.9
    for c in tree.campaigns:
        themes = {eco.theme_of[eco.truth[d]] for d in c.members}
        assert len(themes) == 1 and themes.pop() in c.label.keywords
        assert c.support_domains and not set(c.support_domains) & set(eco.final_domains)
        assert list(c.row()) == list(CAMPAIGN_COLUMNS)


def test_suffix_labels_never_counted(eco):
    sl = default_suffixes()
    for tld in ("desk", "computer", "support", "phone"):
        assert sl.suffix_of(f"x.{tld}") == tld
        members = [f"qqq{i}.{tld}" for i in range(5)]
        assert label_cluster(members, {}).keywords == []
    tree = build_tree(eco.final_domains, eco.chains, DnsStore(eco.observations), eco.snapshots)
    from tsshunt.cluster.segment import domain_parts, segment_words as seg
    from tsshunt.text import page_title
    for c in tree.campaigns:
        allowed = set()
        for d in c.members:
            for part in domain_parts(d) + [page_title(eco.snapshots[d])]:
                allowed.update(seg(part))
        assert set(c.label.keywords) <= allowed


def test_tree_is_seed_deterministic_and_roundtrips(eco, tmp_path):
    args = (eco.final_domains, eco.chains, DnsStore(eco.observations), eco.snapshots, ClusterParams(seed=42))
    a, b = build_tree(*args), build_tree(*args)
    assert a.to_json() == b.to_json()
    a.write(tmp_path / "tree.json")
    import json
    again = ClusterTree.from_json(json.loads((tmp_path / "tree.json").read_text()))
    assert again.to_json()["campaigns"] == a.to_json()["campaigns"]
    assert again.leaves() == a.leaves()
