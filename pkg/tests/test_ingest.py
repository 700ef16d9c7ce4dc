import json
import random
from datetime import date, datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from tsshunt.ingest import (
    AD,
    SR,
    FetchError,
    FixtureFetcher,
    FixtureMiss,
    FixtureResolver,
    LiveFetcher,
    RateLimiter,
    SerpFixtures,
    SnapshotConflict,
    SnapshotStore,
    capture_page,
    crawl,
    default_engines,
    detect_cloaking,
    parse_serp,
    read_tracked,
    resolve_domain,
    track_listing,
    track_uri,
)
from tsshunt.ingest.dns import parse_zone_text
from tsshunt.ingest.models import (
    HTTP_3XX,
    JS_LOCATION,
    META_REFRESH,
    ORIGIN,
    TERMINAL,
    FetcherConfig,
    ListingRecord,
    PageSnapshot,
)
from tsshunt.ingest.testserver import RouteServer
from tsshunt.ingest.tracker import find_js_redirect, find_meta_refresh
from tsshunt.synthetic import redirect_routes

T0 = datetime(2016, 4, 1, tzinfo=timezone.utc)
BING = default_engines()["bing"]


def serp(engine, ads, srs):
    """Independent SERP writer for the bing/google style descriptors."""
    def tag(selector, inner, **attrs):
        name, _, cls = selector.partition(".")
        extra = "".join(f' {k}="{v}"' for k, v in attrs.items())
        return f'<{name} class="{cls}"{extra}>{inner}</{name}>'

    def item(rules, row):
        return tag(rules["item"], tag(rules["title"], row["title"]) + tag(rules["link"], row["title"], href=row["uri"])
                   + tag(rules["snippet"], row["snippet"]) + tag(rules["display"], row["display"])
                   + (tag(rules["phone"], row["phone"]) if row.get("phone") and rules.get("phone") else ""))

    return "<html><body><ol>" + "".join(item(engine.ad, r) for r in ads) + \
        "".join(item(engine.sr, r) for r in srs) + "</ol></body></html>"


def rows(n, prefix, rng=None):
    rng = rng or random.Random(0)
    return [{"title": f"{prefix} title {i}", "uri": f"http://{prefix}{i}.com/p?x={rng.randint(0, 9)}",
             "snippet": f"snippet {i}", "display": f"{prefix}{i}.com", "phone": ""} for i in range(n)]


# serp parsing

def test_three_ads_ten_results():
    html = serp(BING, rows(3, "ad"), rows(10, "sr"))
    recs = parse_serp(html.encode(), BING, T0, "virus help")
    ads = [r for r in recs if r.kind == AD]
    srs = [r for r in recs if r.kind == SR]
    assert [r.position for r in ads] == [1, 2, 3]
    assert [r.position for r in srs] == list(range(1, 11))
    assert ads[0].display_domain == "ad0.com" and srs[9].title == "sr title 9"


def test_sr_cap_at_100():
    recs = parse_serp(serp(BING, [], rows(120, "sr")), BING, T0)
    assert len(recs) == 100 and recs[-1].position == 100


def test_unparseable_serp_is_empty(caplog):
    assert parse_serp(b"\xff\xfe\x00garbage", BING, T0) == []
    assert parse_serp("no markup at all", BING, T0) == []
    assert any("serp" in r.message for r in caplog.records)


def test_ad_call_extension_and_invalid_uri_skipped():
    ads = rows(2, "ad")
    ads[0]["phone"] = "1-888-555-0199"
    ads[1]["uri"] = "javascript:void(0)"
    recs = parse_serp(serp(BING, ads, []), BING, T0)
    assert len(recs) == 1 and recs[0].extensions == {"call": "1-888-555-0199"}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 8), st.integers(0, 130), st.sampled_from(["bing", "google", "yahoo"]), st.integers(0, 999))
def test_random_serp_matches_generator_manifest(n_ad, n_sr, engine_name, seed):
    engine = default_engines()[engine_name]
    rng = random.Random(seed)
    ads, srs = rows(n_ad, "ad", rng), rows(n_sr, "sr", rng)
    recs = parse_serp(serp(engine, ads, srs), engine, T0, "q")
    manifest = [(AD, i + 1, r["uri"], r["display"]) for i, r in enumerate(ads)] + \
        [(SR, i + 1, r["uri"], r["display"]) for i, r in enumerate(srs[:100])]
    assert [(r.kind, r.position, r.uri, r.display_domain) for r in recs] == manifest


# redirect tracking

def test_redirect_pattern_scanners():
    assert find_meta_refresh('<meta http-equiv="Refresh" content="3;URL=\'http://c.com/\'">') == "http://c.com/"
    assert find_js_redirect("<script>window.location.replace('http://x.com/')</script>") == "http://x.com/"
    assert find_js_redirect('<script>top.location.href = "http://y.com/";</script>') == "http://y.com/"
    assert find_js_redirect("<p>window.location = 'http://z.com/'</p>") is None


def test_local_server_302_then_meta_refresh():
    with RouteServer() as srv:
        srv.add("a.test", "/", status=302, headers={"Location": "http://b.test/"})
        srv.add("b.test", "/", body='<meta http-equiv="refresh" content="0; url=http://c.test/">')
        srv.add("c.test", "/", body="<html>landing</html>")
        chain = track_uri("http://a.test/", "https://www.bing.com/", "UA", fetcher=LiveFetcher({"*": srv.address}))
    assert [(h.fqdn, h.method) for h in chain.hops] == [("a.test", ORIGIN), ("b.test", HTTP_3XX), ("c.test", TERMINAL)]
    assert [h.via for h in chain.hops] == [ORIGIN, HTTP_3XX, META_REFRESH]
    assert chain.completed and chain.final_domain == "c.test"
    assert all(r[2] == "https://www.bing.com/" for r in srv.requests)


def test_self_loop_truncated():
    f = FixtureFetcher([{"uri": "http://a.test/", "status": 302, "headers": {"Location": "http://a.test/"}}])
    chain = track_uri("http://a.test/", "", "", fetcher=f)
    assert not chain.completed and chain.reason == "loop" and len(chain.hops) == 1


def test_network_failure_mid_chain():
    f = FixtureFetcher([{"uri": "http://a.test/", "status": 301, "headers": {"Location": "http://b.test/"}},
                        {"uri": "http://b.test/", "error": "connection reset"}])
    chain = track_uri("http://a.test/", "", "", fetcher=f)
    assert not chain.completed and chain.reason == "fetch_error"
    assert "connection reset" in chain.hops[-1].error


def test_chain_contract_first_origin_one_terminal():
    routes, cases = redirect_routes(seed=3, n_chains=20)
    with RouteServer(routes) as srv:
        fetcher = LiveFetcher({"*": srv.address}, retries=0)
        for case in cases:
            chain = track_uri(case.start_uri, "", "", fetcher=fetcher)
            # a listing that does not redirect is a single terminal hop reached as origin
            assert chain.hops[0].via == ORIGIN
            assert chain.hops[0].method == (TERMINAL if chain.completed and len(chain.hops) == 1 else ORIGIN)
            terminals = sum(h.method == TERMINAL for h in chain.hops)
            assert terminals == (1 if chain.completed else 0)
            assert all(h.fqdn == h.fqdn.lower() for h in chain.hops)


def test_fifty_chains_against_local_server():
    routes, cases = redirect_routes(seed=0)
    with RouteServer(routes) as srv:
        fetcher = LiveFetcher({"*": srv.address}, retries=0)
        good = [c for c in cases if not c.expect_reason]
        assert len(good) == 50
        for case in good:
            chain = track_uri(case.start_uri, "", "", fetcher=fetcher)
            assert chain.completed and chain.final_domain == case.final_domain
            assert [h.via for h in chain.hops[1:]] == case.methods


def test_ad_listing_never_contacts_click_host():
    ad = ListingRecord(AD, "Support", "helpdesk.test", "http://www.bing.com/aclk?ld=abc", "", "bing", 1, T0)
    f = FixtureFetcher([{"uri": "http://helpdesk.test/", "body": "<html>ok</html>"}])
    chain = track_listing(ad, "https://www.bing.com/", "UA", fetcher=f)
    assert chain.completed and chain.final_domain == "helpdesk.test"
    assert f.contacted_hosts() == {"helpdesk.test"}
    assert {e.referer for e in f.request_log} == {"https://www.bing.com/"}


def test_ad_redirect_into_ad_network_is_refused():
    ad = ListingRecord(AD, "Support", "helpdesk.test", "http://r.msn.com/click", "", "bing", 1, T0)
    f = FixtureFetcher([{"uri": "http://helpdesk.test/", "status": 302,
                         "headers": {"Location": "http://googleadservices.com/pagead"}}])
    chain = track_listing(ad, "https://www.bing.com/", "UA", fetcher=f)
    assert chain.reason == "blocked" and not chain.completed
    assert "googleadservices.com" not in f.contacted_hosts()


def test_organic_redirect_into_ad_network_is_refused():
    sr = ListingRecord(SR, "Fix", "site.test", "http://site.test/", "", "bing", 4, T0)
    f = FixtureFetcher([{"uri": "http://site.test/", "status": 302,
                         "headers": {"Location": "http://stats.doubleclick.net/x"}}])
    chain = track_listing(sr, "https://www.bing.com/", "UA", fetcher=f)
    assert chain.reason == "blocked" and f.contacted_hosts() == {"site.test"}


def test_fixture_chains_are_deterministic():
    recs = [{"uri": "http://a.test/", "status": 302, "headers": {"Location": "/b"}},
            {"uri": "http://a.test/b", "body": "<script>location.href='http://c.test/'</script>"},
            {"uri": "http://c.test/", "body": "end"}]
    a = track_uri("http://a.test/", "r", "u", fetcher=FixtureFetcher(recs))
    b = track_uri("http://a.test/", "r", "u", fetcher=FixtureFetcher(recs))
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert [h.uri for h in a.hops] == ["http://a.test/", "http://a.test/b", "http://c.test/"]


# capture

def test_capture_passthrough_and_distinct_times(tmp_path):
    body = b"<html>Call 1-877-884-6922</html>"
    f = FixtureFetcher([{"uri": "http://err365.com/", "body": body.decode()}])
    store = SnapshotStore(tmp_path / "snaps")
    cfg = FetcherConfig()
    s1 = capture_page("err365.com", cfg, fetcher=f, store=store, clock=lambda: T0)
    s2 = capture_page("err365.com", cfg, fetcher=f, store=store, clock=lambda: T0 + timedelta(hours=1))
    assert s1.html == body and s1.content_hash == PageSnapshot("x", T0, body).content_hash
    assert len(store) == 2 and len(store.for_domain("err365.com")) == 2
    reloaded = SnapshotStore(tmp_path / "snaps")
    assert [s.html for s in reloaded.for_domain("err365.com")] == [body, body]


def test_capture_fixture_miss():
    with pytest.raises(FixtureMiss, match="no fixture"):
        capture_page("nothing.test", FetcherConfig(), fetcher=FixtureFetcher(), store=SnapshotStore(),
                      clock=lambda: T0)


def test_capture_live_failure_reports_retries():
    class Broken(FixtureFetcher):
        def fetch(self, uri, referer="", user_agent=""):
            raise FetchError("down", uri)

    with pytest.raises(FetchError) as exc:
        capture_page("x.test", FetcherConfig(mode="live", retries=2), fetcher=Broken(), store=SnapshotStore(),
                      clock=lambda: T0)
    assert exc.value.attempts == 3


def test_snapshot_key_is_write_once():
    store = SnapshotStore()
    store.put(PageSnapshot("a.test", T0, b"one"))
    store.put(PageSnapshot("a.test", T0, b"one"))
    with pytest.raises(SnapshotConflict):
        store.put(PageSnapshot("a.test", T0, b"two"))
    with pytest.raises(ValueError):
        PageSnapshot("a.test", T0, b"one", content_hash="0" * 64)


def test_hundred_domain_batch_matches_manifest(tmp_path):
    import hashlib
    manifest = {f"site{i}.test": f"<html>page {i}</html>".encode() for i in range(100)}
    f = FixtureFetcher([{"uri": f"http://{d}/", "body": b.decode()} for d, b in manifest.items()])
    store = SnapshotStore(tmp_path)
    for d in manifest:
        capture_page(d, FetcherConfig(), fetcher=f, store=store, clock=lambda: T0)
    assert len(store) == 100
    assert {s.fqdn: s.content_hash for s in store} == {d: hashlib.sha256(b).hexdigest() for d, b in manifest.items()}


# dns

def test_resolve_two_records_share_time():
    res = resolve_domain("Support.Test", FixtureResolver({"support.test": ["1.2.3.4", "1.2.3.5"]}), T0)
    assert [(o.d, o.ip, o.t) for o in res] == [("support.test", "1.2.3.4", T0), ("support.test", "1.2.3.5", T0)]
    assert res.status == "noerror"


def test_resolve_nxdomain_and_timeout():
    r = FixtureResolver({"gone.test": "NXDOMAIN", "slow.test": "TIMEOUT"})
    assert (len(resolve_domain("gone.test", r, T0)), resolve_domain("gone.test", r, T0).status) == (0, "nxdomain")
    assert resolve_domain("slow.test", r, T0).status == "timeout"
    assert resolve_domain("unknown.test", r, T0).status == "nxdomain"


def test_zone_file_replay_matches_manifest():
    rng = random.Random(4)
    manifest = {f"h{i}.test": sorted({f"10.0.{rng.randint(0, 3)}.{rng.randint(1, 254)}" for _ in range(rng.randint(1, 3))})
                for i in range(40)}
    text = "; generated\n" + "".join(f"{d}. 300 IN A {ip}\n" for d, ips in manifest.items() for ip in ips)
    resolver = FixtureResolver(parse_zone_text(text))
    got = {(o.d, o.ip) for d in manifest for o in resolve_domain(d, resolver, T0)}
    assert got == {(d, ip) for d, ips in manifest.items() for ip in ips}


# cloaking

def test_identical_pages_do_not_differ():
    f = FixtureFetcher([{"uri": "http://same.test/", "body": "<p>hello world page</p>"}])
    rep = detect_cloaking("http://same.test/", "https://www.google.com/", fetcher=f)
    assert rep.similarity == 1.0 and not rep.differs


def test_stuffed_page_for_crawler_differs():
    f = FixtureFetcher([
        {"uri": "http://zkhubm.win/", "referer": "https://www.google.com/",
         "body": "<script>window.location='http://err365.com/'</script>"},
        {"uri": "http://zkhubm.win/", "referer": "",
         "body": "<p>" + " ".join(f"windows error support help{i}" for i in range(40)) + "</p>"},
    ])
    rep = detect_cloaking("http://zkhubm.win/", "https://www.google.com/", fetcher=f)
    assert rep.differs and rep.similarity < 0.5


@settings(max_examples=40, deadline=None)
@given(st.sets(st.sampled_from([f"w{i}" for i in range(30)]), min_size=1),
       st.sets(st.sampled_from([f"w{i}" for i in range(30)]), min_size=1))
def test_cloaking_similarity_is_jaccard(a, b):
    f = FixtureFetcher([
        {"uri": "http://p.test/", "referer": "R", "body": "<p>" + " ".join(sorted(a)) + "</p>"},
        {"uri": "http://p.test/", "referer": "", "body": "<p>" + " ".join(sorted(b)) + " </p>"},
    ])
    rep = detect_cloaking("http://p.test/", "R", fetcher=f)
    assert abs(rep.similarity - len(a & b) / len(a | b)) < 1e-9


def test_cloaking_fetch_error_propagates():
    with pytest.raises(FetchError):
        detect_cloaking("http://none.test/", "R", fetcher=FixtureFetcher())


# rate limiting and crawl

def test_rate_limiter_caps_per_engine_per_day():
    lim = RateLimiter({"bing": 3})
    day = date(2016, 4, 1)
    assert [lim.acquire("bing", day) for _ in range(5)] == [True, True, True, False, False]
    assert lim.acquire("bing", date(2016, 4, 2)) and lim.acquire("google", day)
    assert lim.dispatched("bing", day) == 3


def test_live_mode_rejects_zero_cap():
    with pytest.raises(ValueError):
        FetcherConfig(mode="live", daily_rate_cap={"bing": 0})


def _mini_world(tmp_path):
    ads = [{"title": "Fix", "uri": "http://www.bing.com/aclk?u=1", "snippet": "s", "display": "door.test", "phone": ""}]
    srs = [{"title": "Help", "uri": "http://land.test/", "snippet": "s", "display": "land.test", "phone": ""}]
    serps = tmp_path / "serps"
    serps.mkdir()
    (serps / "q.html").write_text(serp(BING, ads, srs))
    (serps / "manifest.jsonl").write_text(json.dumps(
        {"engine": "bing", "phrase": "virus help", "file": "q.html", "issued_at": "2016-04-02T00:00:00Z"}) + "\n")
    fetcher_rows = [
        {"uri": "http://door.test/", "status": 302, "headers": {"Location": "http://land.test/"}},
        {"uri": "http://land.test/", "body": "<html>Call 1-866-555-0101</html>"},
    ]
    return SerpFixtures(serps), fetcher_rows


def test_fixture_crawl_end_to_end(tmp_path):
    serps, fetcher_rows = _mini_world(tmp_path)
    outs = []
    for k in range(2):
        f = FixtureFetcher(fetcher_rows)
        result = crawl(["virus help", "unlisted phrase"], {"bing": BING}, fetcher=f,
                       resolver=FixtureResolver({"door.test": ["10.0.0.1"], "land.test": ["10.0.0.2"]}),
                       store=SnapshotStore(), config=FetcherConfig(), serp_fixtures=serps)
        assert "bing.com" not in f.contacted_hosts() and "www.bing.com" not in f.contacted_hosts()
        result.write(tmp_path / f"out{k}")
        outs.append((tmp_path / f"out{k}" / "listings" / "chains.jsonl").read_bytes())
    assert outs[0] == outs[1]
    tracked = read_tracked(tmp_path / "out0" / "listings" / "chains.jsonl")
    assert {t.chain.final_domain for t in tracked} == {"land.test"}
    assert result.skipped == [("bing", "unlisted phrase", "no fixture")]
    assert {o.d for o in result.observations} == {"door.test", "land.test"}


def test_live_crawl_respects_rate_cap():
    from tsshunt.ingest import EngineDescriptor
    rules = {"sr": BING.sr, "ad": BING.ad, "referer": "", "query_url": "http://www.bing.com/search?q={query}"}
    engine = EngineDescriptor.from_dict("bing", rules)
    with RouteServer() as srv:
        srv.add("www.bing.com", "/search", body=serp(engine, [], []))
        f = LiveFetcher({"*": srv.address}, retries=0)
        result = crawl([f"p{i}" for i in range(5)], {"bing": engine}, fetcher=f, resolver=FixtureResolver({}),
                       store=SnapshotStore(), config=FetcherConfig(mode="live", daily_rate_cap={"bing": 2}))
        assert len(srv.requests) == 2
    assert sum(1 for s in result.skipped if s[2] == "rate cap") == 3
