from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from archvoids.logs import Kind, LogEntry, MementoRequest
from archvoids.soft404 import (DEFAULT_VALID_UNTIL, FitError, Soft404Model, amend, amend_one,
                               fit_model, load_samples, predict_bytes, urir_length)

WAIL = "http://example.net/abcde"
M = Soft404Model(3, 150)


def test_published_samples_fit():
    model = fit_model([(24, 222), (25, 225)])
    assert (model.k, model.c) == (3, 150)
    assert model.valid_until == datetime(2019, 11, 18, tzinfo=timezone.utc)


def test_identity_line():
    model = fit_model([(10, 10), (20, 20)])
    assert (model.k, model.c) == (1, 0)
    assert predict_bytes(model, 0) == 0


@pytest.mark.parametrize("samples", [
    [(24, 222), (25, 225), (30, 999)],
    [(24, 222)],
    [(24, 222), (24, 222)],
    [(10, 10), (12, 13)],      # slope 1.5
    [(10, 20), (20, 10)],      # negative slope
    [(10, 10), (20, 10)],      # zero slope
])
def test_fit_errors(samples):
    with pytest.raises(FitError):
        fit_model(samples)


def test_negative_intercept_rejected():
    with pytest.raises(FitError):
        fit_model([(100, 50), (101, 53)])


def test_predictions_match_table_rows():
    assert urir_length(WAIL) == 24 and urir_length(WAIL + "/") == 25
    assert predict_bytes(M, urir_length(WAIL)) == 222
    assert predict_bytes(M, urir_length(WAIL + "/")) == 225


def test_urir_length_is_byte_length():
    assert urir_length("http://ex.pt/ç") == len("http://ex.pt/ç".encode()) == 15


def test_model_validation():
    with pytest.raises(ValueError):
        Soft404Model(0, 150)
    with pytest.raises(ValueError):
        Soft404Model(1, -1)
    with pytest.raises(ValueError):
        Soft404Model(1, 1, datetime(2019, 1, 1))


def _req(kind=Kind.URI_T, status=200, size=222, when=datetime(2019, 6, 1, tzinfo=timezone.utc),
         urir=WAIL):
    e = LogEntry("1.2.3.4", "", "", when, "GET", "/wayback/timemap/*/" + urir, "HTTP/1.1",
                 status, size, "", "MemGator")
    return MementoRequest(kind, urir, "", e)


def test_amend_soft404_before_fix():
    out = amend_one(_req(), M)
    assert out.amended and out.status == 404 and out.entry.bytes == 222


def test_after_valid_until_unchanged():
    r = _req(when=datetime(2019, 11, 18, tzinfo=timezone.utc))
    assert amend_one(r, M) is r
    r = _req(when=datetime(2019, 11, 17, 23, 59, 59, tzinfo=timezone.utc))
    assert amend_one(r, M).amended


def test_valid_until_compares_instants():
    # 2019-11-18T00:30 +0100 is still 2019-11-17 in UTC.
    r = _req(when=datetime(2019, 11, 18, 0, 30, tzinfo=timezone(timedelta(hours=1))))
    assert amend_one(r, M).amended


@pytest.mark.parametrize("r", [
    _req(kind=Kind.URI_M),
    _req(size=223),
    _req(size=None),
    _req(status=404),
    _req(status=302),
    _req(status=503),
])
def test_amend_leaves_others_alone(r):
    assert amend_one(r, M) is r


def test_amend_report_counts():
    reqs = [_req(), _req(size=1), _req(kind=Kind.URI_M)]
    stream, report = amend(reqs, M)
    out = list(stream)
    assert [r.status for r in out] == [404, 200, 200]
    assert report.to_dict() == {"amended": 1, "unchanged": 2, "fit": {"k": 3, "c": 150}}


_reqs = st.lists(st.builds(
    _req,
    kind=st.sampled_from(list(Kind)),
    status=st.sampled_from([200, 301, 302, 404, 500, 503]),
    size=st.one_of(st.none(), st.integers(150, 400)),
    when=st.sampled_from([datetime(2018, 1, 1, tzinfo=timezone.utc), DEFAULT_VALID_UNTIL,
                          datetime(2020, 1, 1, tzinfo=timezone.utc)]),
    urir=st.sampled_from([WAIL, WAIL + "/", "http://a.pt/", "http://a.pt/" + "x" * 40]),
), max_size=30)


@given(_reqs)
def test_amend_idempotent_and_status_only(reqs):
    once = list(amend(reqs, M)[0])
    twice = list(amend(once, M)[0])
    assert [r.entry for r in twice] == [r.entry for r in once]
    for before, after in zip(reqs, once):
        assert after.entry.bytes == before.entry.bytes
        assert after.entry._replace(status=0) == before.entry._replace(status=0)
        if before.status != 200:
            assert after is before


@given(k=st.integers(1, 50), c=st.integers(0, 5000),
       lengths=st.lists(st.integers(0, 2000), min_size=2, max_size=10, unique=True))
def test_fit_recovers_template(k, c, lengths):
    model = fit_model([(n, k * n + c) for n in lengths])
    assert (model.k, model.c) == (k, c)
    assert all(predict_bytes(model, n) >= c for n in lengths)


def test_load_samples(tmp_path):
    p = tmp_path / "samples.txt"
    p.write_text(f"# urir bytes\n{WAIL} 222\n{WAIL}/\t225\n30 240\n")
    assert load_samples(p) == [(24, 222), (25, 225), (30, 240)]
    p.write_text("oops\n")
    with pytest.raises(FitError):
        load_samples(p)
