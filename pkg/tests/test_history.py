import itertools
import random
from datetime import datetime, timedelta, timezone

from hypothesis import given, strategies as st

from archvoids.history import (agent_report, build_histories, collapse, exclude_upper_hosts,
                               filter_redirects, fluctuation_report, group_pattern)
from archvoids.logs import Kind, LogEntry, MementoRequest

T0 = datetime(2019, 1, 1, tzinfo=timezone.utc)


def _req(urir, status, sec, kind=Kind.URI_T, ua="MemGator"):
    e = LogEntry("1.2.3.4", "", "", T0 + timedelta(seconds=sec), "GET", "/x", "HTTP/1.1",
                 status, 10, "", ua)
    return MementoRequest(kind, urir, "", e)


def _hist(statuses, urir="http://a.pt/"):
    return build_histories([_req(urir, s, i) for i, s in enumerate(statuses)])[urir]


def test_collapse_examples():
    assert _hist([404, 404, 404]).collapsed == "404"
    assert _hist([404, 404, 200, 200]).collapsed == "404,200"
    assert _hist([200, 404, 200, 404, 200, 404]).collapsed == "200,404,200,404,200,404"


def test_other_statuses_count_but_do_not_collapse():
    h = _hist([404, 503, 429, 404, 500, 200])
    assert h.collapsed == "404,200"
    assert h.total_requests == 6
    assert h.counts_by_status == {200: 1, 404: 2, 429: 1, 500: 1, 503: 1}
    assert h.successes == 1
    assert _hist([500, 503]).collapsed == ""


def test_seen_range():
    h = _hist([404, 200, 404])
    assert (h.first_seen, h.last_seen) == (T0, T0 + timedelta(seconds=2))


def test_filter_redirects():
    reqs = [_req("u", s, i) for i, s in enumerate([301, 302, 200])]
    assert [r.status for r in filter_redirects(reqs)] == [200]
    assert list(filter_redirects([])) == []
    rng = random.Random(0)
    mixed = [_req("u", rng.choice([100, 200, 204, 301, 304, 404, 500]), i) for i in range(1000)]
    n3xx = sum(300 <= r.status < 400 for r in mixed)
    out = list(filter_redirects(mixed))
    assert len(out) == 1000 - n3xx and not any(300 <= r.status < 400 for r in out)


def test_group_pattern():
    assert group_pattern("404,200,404,200") == "404,200,404,200"
    assert group_pattern("200,404,200,404,200") == "200,404,200,404,200++"
    assert group_pattern("200,404,200,404,200,404,200") == "200,404,200,404,200++"


def test_fluctuation_report_examples():
    reqs = [_req(f"u{i}", 404, i) for i in range(10)]
    reqs += [_req(f"v{i}", s, 100 + 2 * i + j) for i in range(3) for j, s in enumerate([404, 200])]
    assert fluctuation_report(build_histories(reqs)) == {"404": 10, "404,200": 3}
    assert fluctuation_report(build_histories([_req("u", 200, 0)])) == {"200": 1}


def test_non_memento_ignored_and_raw_identity():
    reqs = [_req("", 200, 0, kind=Kind.NON_MEMENTO), _req("http://A.pt/", 404, 1),
            _req("http://a.pt/", 200, 2)]
    hs = build_histories(reqs)
    assert set(hs) == {"http://A.pt/", "http://a.pt/"}
    assert set(build_histories(reqs, canonical=True)) == {"http://a.pt/"}
    assert build_histories(reqs, canonical=True)["http://a.pt/"].collapsed == "404,200"


def test_exclude_upper_hosts():
    reqs = [_req("http://Apple.com/", 404, 0), _req("http://apple.com/X", 200, 1)]
    assert [r.urir for r in exclude_upper_hosts(reqs)] == ["http://apple.com/X"]


def test_agent_report():
    reqs = [_req("u", 200, 0, ua="UptimeRobot"), _req("u", 404, 1, ua="UptimeRobot"),
            _req("u", 404, 2, ua="MemGator"), _req("w", 404, 3)]
    assert agent_report(reqs, "u") == {"MemGator": {404: 1}, "UptimeRobot": {200: 1, 404: 1}}


# -- oracle ---------------------------------------------------------------------

def naive_report(reqs):
    """Sort by (urir, time, status), group, collapse, fold long patterns."""
    rows = sorted((r.urir, r.entry.timestamp, r.status) for r in reqs
                  if r.kind is not Kind.NON_MEMENTO and not 300 <= r.status < 400)
    out = {}
    for _, grp in itertools.groupby(rows, key=lambda row: row[0]):
        codes = [str(s) for _, _, s in grp if s in (200, 404)]
        runs = [c for i, c in enumerate(codes) if i == 0 or codes[i - 1] != c]
        if not runs:
            continue
        pat = ",".join(runs[:5]) + "++" if len(runs) >= 5 else ",".join(runs)
        out[pat] = out.get(pat, 0) + 1
    return out


_events = st.lists(st.tuples(st.sampled_from(["a", "b", "c", "d"]),
                             st.sampled_from([200, 200, 404, 404, 301, 500]),
                             st.integers(0, 30)), max_size=60)


@given(_events, st.randoms())
def test_permutation_invariance(events, rnd):
    reqs = [_req(u, s, t) for u, s, t in events]
    shuffled = reqs[:]
    rnd.shuffle(shuffled)
    assert build_histories(reqs) == build_histories(shuffled)


@given(_events)
def test_history_invariants_and_oracle(events):
    reqs = [_req(u, s, t) for u, s, t in events]
    hs = build_histories(filter_redirects(reqs))
    for h in hs.values():
        codes = h.collapsed.split(",") if h.collapsed else []
        assert all(a != b for a, b in zip(codes, codes[1:]))
        assert sum(h.counts_by_status.values()) == h.total_requests
        assert (h.collapsed == "") == (not ({200, 404} & set(h.counts_by_status)))
    report = fluctuation_report(hs)
    assert sum(report.values()) == sum(1 for h in hs.values() if h.collapsed)
    assert report == naive_report(reqs)


def test_collapse_plain():
    assert collapse([]) == ""
    assert collapse([200, 200, 301, 404, 404, 200]) == "200,404,200"


def test_oracle_on_corpus(amended_requests):
    hs = build_histories(filter_redirects(amended_requests))
    assert fluctuation_report(hs) == naive_report(amended_requests)
