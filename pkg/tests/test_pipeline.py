import json
from datetime import date

import pytest

from archvoids import pipeline
from archvoids.config import PipelineConfig
from archvoids.pipeline import PipelineError, run_pipeline
from archvoids.profiler import read_profile


def test_empty_log_dir(tmp_path):
    (tmp_path / "logs").mkdir()
    r = run_pipeline(PipelineConfig(), tmp_path / "logs", tmp_path / "out")
    assert len(read_profile(r.profile_path)) == 0
    assert r.reports["evaluation"]["total_requests"] == 0
    assert r.reports["amend"]["amended"] == 0
    assert json.loads(r.reports_path.read_text()) == r.reports


def test_amended_equals_planted(corpus, tmp_path):
    r = run_pipeline(PipelineConfig(), corpus.log_dir, tmp_path)
    assert r.reports["amend"]["amended"] == len(corpus.labels.soft404)
    assert r.reports["parse"]["errors"] == 0
    assert set(r.timings) >= {"parse", "amend", "histories", "profile", "eval"}


def test_fit_from_samples(corpus, tmp_path):
    samples = tmp_path / "samples.txt"
    samples.write_text("http://example.net/abcde 222\nhttp://example.net/abcde/ 225\n")
    cfg = PipelineConfig(soft404_samples=str(samples))
    r = run_pipeline(cfg, corpus.log_dir, tmp_path / "out")
    assert r.reports["amend"]["fit"] == {"k": 3, "c": 150}


def test_bad_samples_named_stage(corpus, tmp_path):
    samples = tmp_path / "samples.txt"
    samples.write_text("10 10\n20 25\n30 31\n")
    with pytest.raises(PipelineError) as info:
        run_pipeline(PipelineConfig(soft404_samples=str(samples)), corpus.log_dir, tmp_path / "o")
    assert info.value.stage == "config"
    assert not (tmp_path / "o").exists()


def test_missing_logs(tmp_path):
    with pytest.raises(PipelineError) as info:
        run_pipeline(PipelineConfig(), tmp_path / "nope", tmp_path / "out")
    assert info.value.stage == "parse"


def test_failed_write_leaves_no_outputs(corpus, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk full")
    monkeypatch.setattr(pipeline.json, "dumps", boom)
    with pytest.raises(PipelineError) as info:
        run_pipeline(PipelineConfig(), corpus.log_dir, tmp_path)
    assert info.value.stage == "write"
    assert sorted(p.name for p in tmp_path.iterdir()) == []


def test_exclusions(corpus, tmp_path):
    cfg = PipelineConfig(exclusions_start=date(2019, 12, 1), exclusions_uppercase_host=True)
    r = run_pipeline(cfg, corpus.log_dir, tmp_path)
    assert min(r.reports["access"]["daily_counts"]) == "2019-12-01"
    assert r.reports["amend"]["amended"] == 0


def test_wildcard_policy_keeps_zero_fn(corpus, tmp_path):
    cfg = PipelineConfig(profiling_exact=False, profiling_path_depth=0, profiling_min_count=1)
    r = run_pipeline(cfg, corpus.log_dir, tmp_path)
    assert r.reports["profile"]["policy"] == "h*p0"
    assert r.reports["evaluation"]["false_negatives"] == 0
    assert all(s["false_negatives"] == 0 for s in r.reports["sweep"])
