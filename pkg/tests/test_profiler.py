import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from archvoids.history import StatusHistory, build_histories, filter_redirects
from archvoids.profiler import (ProfileFormatError, ProfileMetadata, SummarizationPolicy,
                                VoidsProfile, bucket_histogram, bucket_label, dumps, loads,
                                read_profile, select_void_candidates, success_keys,
                                summarize_keys, write_profile)
from archvoids.urinorm import surt_string


def _h(urir, collapsed, n404=0, n200=0):
    counts = {s: n for s, n in ((200, n200), (404, n404)) if n}
    return StatusHistory(urir, total_requests=n404 + n200, counts_by_status=counts,
                         collapsed=collapsed)


def test_select_examples():
    hs = {"a": _h("a", "404", 150), "b": _h("b", "404,200", 10**6, 1)}
    assert select_void_candidates(hs, 100) == {"a": 150}
    hs = {u: _h(u, "404", n) for u, n in (("x", 5), ("y", 50), ("z", 500))}
    assert len(select_void_candidates(hs, 10)) == 2


@given(st.lists(st.integers(1, 5000), max_size=40), st.integers(1, 3000), st.integers(1, 3000))
def test_selection_monotone(counts, t1, t2):
    t1, t2 = sorted((t1, t2))
    hs = {str(i): _h(str(i), "404", n) for i, n in enumerate(counts)}
    assert set(select_void_candidates(hs, t2)) <= set(select_void_candidates(hs, t1))


def test_buckets():
    assert bucket_histogram({"a": 3, "b": 7}) == {"1s": 2}
    assert bucket_histogram({"a": 9, "b": 10, "c": 99, "d": 100}) == {"1s": 1, "10s": 2,
                                                                      "100s": 1}
    assert bucket_label(10**4) == bucket_label(10**7) == "10000s"
    with pytest.raises(ValueError):
        bucket_label(0)


@given(st.integers(1, 10**6))
def test_bucket_range(n):
    label = bucket_label(n)
    i = len(label) - 2
    assert 10**i <= n and (label == "10000s" or n < 10 ** (i + 1))


def test_summarize_path_depth_sums():
    cands = {"http://example.com/a/1": 40, "http://example.com/a/2": 60}
    p = summarize_keys(cands, SummarizationPolicy(path_depth=1))
    assert p.entries == {"com,example)/a/*": 100}
    p = summarize_keys(cands)
    assert p.entries == {"com,example)/a/1": 40, "com,example)/a/2": 60}
    assert p.metadata.policy == "exact"


def test_summarize_host_groups():
    rng = random.Random(5)
    hosts = [f"h{i}.example.org" for i in range(5)]
    cands, per_host = {}, Counter()
    for i in range(100):
        h = rng.choice(hosts)
        n = rng.randint(1, 50)
        cands[f"http://{h}/p{i}/q"] = n
        per_host[h] += n
    p = summarize_keys(cands, SummarizationPolicy(path_depth=0))
    assert p.entries == {f"{surt_string('http://' + h + '/')}*": n for h, n in per_host.items()}


def test_summarize_host_depth():
    cands = {"http://a.b.example.com/x": 2, "http://c.example.com/y": 3, "http://other.org/": 1}
    p = summarize_keys(cands, SummarizationPolicy(host_depth=2))
    assert p.entries == {"com,example,*": 5, "org,other)/": 1}


def test_wildcard_swallows_earlier_exact_key():
    # 'http://e.com/a' sorts first and stays exact at depth 1; '/a/b' then makes '/a/*'.
    cands = {"http://e.com/a": 1, "http://e.com/a/b/c": 2}
    p = summarize_keys(cands, SummarizationPolicy(path_depth=1))
    assert p.entries == {"com,e)/a/*": 3}


def test_unparseable_dropped():
    p = summarize_keys({"http://[bad": 5, "http://ok.pt/": 7})
    assert p.entries == {"pt,ok)/": 7} and p.metadata.dropped == 1


def test_protected_keys():
    cands = {"http://e.com/a/1": 5, "http://e.com/a/2": 5, "HTTP://E.com/a/3": 5}
    protected = {"com,e)/a/3", "com,e)/a/9"}
    exact = summarize_keys(cands, protected=protected)
    assert exact.entries == {"com,e)/a/1": 5, "com,e)/a/2": 5}
    assert exact.metadata.protected == 1
    # '/a/*' would cover '/a/9', so children stay exact.
    wild = summarize_keys(cands, SummarizationPolicy(path_depth=1), protected)
    assert wild.entries == {"com,e)/a/1": 5, "com,e)/a/2": 5}


def test_success_keys():
    hs = {"http://E.com/x": _h("http://E.com/x", "404,200", 1, 1),
          "http://e.com/y": _h("http://e.com/y", "404", 4)}
    assert success_keys(hs) == {"com,e)/x"}


_cands = st.dictionaries(
    st.builds(lambda h, a, b: f"http://{h}.pt/{a}/{b}", st.sampled_from("abc"),
              st.sampled_from("xyz"), st.sampled_from("123")),
    st.integers(1, 100), max_size=20)


@given(_cands, st.one_of(st.none(), st.integers(0, 2)), st.one_of(st.none(), st.integers(1, 2)))
def test_count_conservation(cands, path_depth, host_depth):
    p = summarize_keys(cands, SummarizationPolicy(host_depth, path_depth))
    assert p.total == sum(cands.values())
    assert list(p.entries) == sorted(p.entries)


def test_profile_file_example():
    p = summarize_keys({"http://example.com/a/1": 40, "http://example.com/a/2": 60},
                       SummarizationPolicy(path_depth=1), archive="arquivo.pt", threshold=100)
    text = dumps(p)
    lines = text.splitlines()
    assert lines[0] == "!type voids"
    assert "!archive arquivo.pt" in lines and "!threshold 100" in lines
    assert lines[-1] == "com,example)/a/* 100"
    assert loads(text) == p


def test_empty_profile_round_trip(tmp_path):
    p = VoidsProfile(metadata=ProfileMetadata(archive="x"))
    path = tmp_path / "empty.profile"
    write_profile(p, path)
    assert all(l.startswith("!") for l in path.read_text().splitlines())
    assert read_profile(path) == p


@given(_cands, st.integers(1, 1000), st.text("abcdef", min_size=1, max_size=5))
def test_round_trip_and_canonical_bytes(cands, threshold, extra):
    p = summarize_keys(cands, threshold=threshold, archive="a", generated="2020-01-01")
    p.metadata.extra["note"] = extra
    assert loads(dumps(p)) == p
    assert dumps(loads(dumps(p))) == dumps(p)


@pytest.mark.parametrize("text, lineno", [
    ("!type voids\ncom,e)/a 1\ncom,e)/a 2\n", 3),
    ("com,e)/a 1\n!type voids\n", 2),
    ("!threshold x\n", 1),
    ("COM,e)/a 1\n", 1),
    ("com,e)/a one\n", 1),
    ("com,e)/a 1 2\n", 1),
    ("com,e)/a -1\n", 1),
])
def test_read_errors(text, lineno):
    with pytest.raises(ProfileFormatError) as info:
        loads(text)
    assert info.value.lineno == lineno


def test_count_optional_for_external_records():
    assert loads("com,e)/takedown/*\n").entries == {"com,e)/takedown/*": 1}


def test_candidates_never_saw_success(amended_requests, corpus):
    hs = build_histories(filter_redirects(amended_requests))
    for urir in select_void_candidates(hs, 1):
        assert corpus.labels.uri_counts[urir][1] == 0
