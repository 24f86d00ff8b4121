import random

import pytest
from hypothesis import given, strategies as st

from archvoids.profiler import loads
from archvoids.router import (IndexBuildError, ProfileIndex, RoutingDecision, build_index,
                              decision_tsv, match, match_batch, match_key)
from archvoids.urinorm import canonicalize, surt_string, to_surt
from router_oracle import brute_route, random_key, random_uri

HOLDINGS = ["com,example)/a/*", "com,example)/b/*"]
VOIDS = ["com,example)/a/4", "com,example)/b/3", "com,example)/c/*"]


@pytest.fixture
def example_index():
    return build_index(HOLDINGS, VOIDS)


@pytest.mark.parametrize("path, verdict, source, key", [
    ("/a/1", "route", "holdings", "com,example)/a/*"),
    ("/a/1/z", "route", "holdings", "com,example)/a/*"),
    ("/a", "route", "holdings", "com,example)/a/*"),
    ("/a/4", "no-route", "voids", "com,example)/a/4"),
    ("/b/3", "no-route", "voids", "com,example)/b/3"),
    ("/c/1", "no-route", "voids", "com,example)/c/*"),
    ("/d", "route", "default", None),
])
def test_worked_example(example_index, path, verdict, source, key):
    d = match(example_index, "http://example.com" + path)
    assert (d.verdict, d.source, d.matched_key) == (verdict, source, key)


def test_exact_outranks_wildcard_at_same_segment(example_index):
    d = example_index.match("http://example.com/a/4")
    assert d.depth == 4
    assert example_index.match("http://example.com/a/1").depth == 3


def test_index_sizes():
    idx = build_index(["com,example)/a/*"], ["com,example)/a/4"])
    assert idx.sizes == {"holdings": 1, "voids": 1} and len(idx) == 2


def test_empty_index_routes():
    idx = build_index()
    assert idx.match("http://anything.org/x") == RoutingDecision("route", None, "default", 0)


def test_unparseable_uri_routes():
    idx = build_index(voids=["com,*"], default="no-route")
    assert idx.match("http://[broken").verdict == "route"
    assert idx.match("http://x.org/").verdict == "no-route"


def test_tie_break():
    assert build_index(["com,e)/x"], ["com,e)/x"]).match("http://e.com/x").verdict == "route"
    d = build_index(["com,e)/x"], ["com,e)/x"], prefer_voids=True).match("http://e.com/x")
    assert (d.verdict, d.source) == ("no-route", "voids")


def test_malformed_key_aborts():
    with pytest.raises(IndexBuildError) as info:
        build_index(["com,e)/ok"], ["com,e)/a*b"])
    assert info.value.key == "com,e)/a*b"
    with pytest.raises(ValueError):
        build_index(default="maybe")


def test_profile_objects_accepted():
    voids = loads("!type voids\ncom,e)/x 3\n")
    assert build_index(None, voids).match("http://e.com/x").verdict == "no-route"


def test_match_key():
    idx = build_index(HOLDINGS, VOIDS)
    assert match_key(idx, "com,example)/a/4").verdict == "no-route"
    with pytest.raises(ValueError):
        match_key(idx, "com,example)/a/*")


def test_batch_equals_single(example_index):
    uris = ["http://example.com/a/1", "http://example.com/a/4", "http://example.com/zz"]
    out = list(match_batch(example_index, uris))
    assert [u for u, _ in out] == uris
    assert [d for _, d in out] == [example_index.match(u) for u in uris]


def test_decision_tsv(example_index):
    d = example_index.match("http://example.com/a/4")
    assert decision_tsv("u", d) == "u\tno-route\tvoids\tcom,example)/a/4\t4"
    assert decision_tsv("u", example_index.match("http://z.org/")) == "u\troute\tdefault\t-\t0"


def test_self_lookup_10k_keys():
    rng = random.Random(11)
    keys = {f"org,site{rng.randrange(500)})/{rng.randrange(50)}/{rng.randrange(10**6)}"
            for _ in range(10_000)}
    idx = build_index(voids=keys)
    for k in keys:
        d = match_key(idx, k)
        assert (d.verdict, d.matched_key) == ("no-route", k)


def _check(holdings, voids, uri, prefer=False):
    idx = ProfileIndex(holdings, voids, prefer)
    d = idx.match(uri)
    assert (d.verdict, d.matched_key, d.source) == brute_route(holdings, voids, uri, prefer), uri


_seeds = st.integers(0, 2**32 - 1)


@given(_seeds, st.booleans())
def test_matches_brute_force(seed, prefer):
    rng = random.Random(seed)
    holdings = sorted({random_key(rng) for _ in range(rng.randint(0, 12))})
    voids = sorted({random_key(rng) for _ in range(rng.randint(0, 12))})
    for _ in range(10):
        _check(holdings, voids, random_uri(rng), prefer)


_uri_chars = st.text("aAbB0/._-~%?=&:;@!$'()+,*#[] 9éZ", max_size=25)


@given(st.sampled_from(["http://", "https://", "HTTP://", ""]),
       st.sampled_from(["example.com", "Www.Example.com", "1.2.3.4", "x-y.org", "a_b.pt"]),
       _uri_chars)
def test_fast_path_equals_canonical_path(scheme, host, tail):
    uri = f"{scheme}{host}/{tail}"
    try:
        key = to_surt(canonicalize(uri))
    except ValueError:
        return
    idx = build_index(voids=[str(key)])
    d = idx.match(uri)
    assert (d.verdict, d.matched_key) == ("no-route", str(key)), uri


@given(_seeds)
def test_removing_voids_key_never_blocks(seed):
    rng = random.Random(seed)
    holdings = sorted({random_key(rng) for _ in range(6)})
    voids = sorted({random_key(rng) for _ in range(8)})
    if not voids:
        return
    fewer = voids[:]
    fewer.pop(rng.randrange(len(fewer)))
    full, reduced = build_index(holdings, voids), build_index(holdings, fewer)
    for _ in range(20):
        uri = random_uri(rng)
        if full.match(uri).verdict == "route":
            assert reduced.match(uri).verdict == "route"


@given(_seeds)
def test_no_route_implies_voids(seed):
    rng = random.Random(seed)
    idx = build_index([random_key(rng) for _ in range(5)], [random_key(rng) for _ in range(5)])
    for _ in range(20):
        d = idx.match(random_uri(rng))
        assert d.verdict == "route" or d.source == "voids"


def test_surt_of_lookup_is_used():
    idx = build_index(voids=[surt_string("http://Example.com:80/A/./b?Q")])
    assert idx.match("HTTP://example.COM/a/b?q").verdict == "no-route"
