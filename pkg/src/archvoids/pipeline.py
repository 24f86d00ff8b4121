"""End-to-end composition: logs in, a voids profile and a JSON report out."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .config import PipelineConfig
from .evaluator import access_reports, evaluate, threshold_sweep
from .history import build_histories, exclude_upper_hosts, filter_redirects, fluctuation_report
from .logs import Kind, LogStream, classify_all
from .profiler import (VoidsProfile, bucket_histogram, dumps, read_profile,
                       select_void_candidates, success_keys, summarize_keys)
from .router import build_index
from .soft404 import Soft404Model, amend, fit_model, load_samples

__all__ = ["PipelineError", "PipelineResult", "run_pipeline", "soft404_model"]

log = logging.getLogger(__name__)

PROFILE_NAME = "voids.profile"
REPORTS_NAME = "reports.json"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    profile_path: Path
    reports_path: Path
    profile: VoidsProfile
    reports: dict
    timings: dict[str, float] = field(default_factory=dict)


def soft404_model(config: PipelineConfig) -> Soft404Model:
    if config.soft404_samples:
        return fit_model(load_samples(config.soft404_samples), config.soft404_valid_until)
    return Soft404Model(config.soft404_k, config.soft404_c, config.soft404_valid_until)


def _agent_filter(requests, agent: Optional[str]):
    if not agent:
        return requests
    return [r for r in requests if agent in (r.entry.user_agent or "")]


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(prefix="." + path.name, dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def run_pipeline(config: PipelineConfig, log_dir: Union[str, Path],
                 out_dir: Union[str, Path],
                 holdings: Union[str, Path, VoidsProfile, None] = None) -> PipelineResult:
    """Parse, amend, profile and evaluate one directory of access logs.

    Writes ``voids.profile`` and ``reports.json`` into ``out_dir``.  Both
    depend only on the logs and the config (not on ``jobs`` or the clock);
    stage timings are returned and logged but not written.
    """
    timings: dict[str, float] = {}
    out = Path(out_dir)

    @contextmanager
    def stage(name: str):
        t0 = time.perf_counter()
        try:
            yield
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
        log.info("stage %s: %.3fs", name, timings[name])

    with stage("config"):
        model = soft404_model(config)
        if isinstance(holdings, (str, Path)):
            holdings = read_profile(holdings)
        out.mkdir(parents=True, exist_ok=True)

    with stage("parse"):
        stream = LogStream(log_dir, config.exclusions_start, config.exclusions_end,
                           config.jobs)
        requests = list(classify_all(stream, config.endpoints))
        if config.exclusions_uppercase_host:
            requests = [r for r in requests if r.kind is Kind.NON_MEMENTO] + list(
                exclude_upper_hosts(r for r in requests if r.kind is not Kind.NON_MEMENTO))
            requests.sort(key=lambda r: r.entry.utc)
        parse_stats = {
            "files": len(stream.stats),
            "lines": sum(s.lines for s in stream.stats.values()),
            "entries": sum(s.entries for s in stream.stats.values()),
            "errors": stream.parse_errors,
            "unreadable_files": stream.unreadable,
        }

    with stage("amend"):
        amended, amend_report = amend(requests, model)
        amended = list(amended)

    with stage("reports"):
        access = access_reports(amended, config.reports_top_min_count, config.reports_agents)

    with stage("histories"):
        mementos = [r for r in amended if r.kind is not Kind.NON_MEMENTO]
        histories = build_histories(filter_redirects(mementos), config.profiling_canonical)

    with stage("profile"):
        threshold = config.profiling_min_count
        candidates = select_void_candidates(histories, threshold)
        stamps = [r.entry.utc for r in amended]
        meta = {"archive": config.profiling_archive, "threshold": threshold}
        if stamps:
            lo, hi = min(stamps), max(stamps)
            meta["generated"] = hi.isoformat()
            meta["range"] = f"{lo.date().isoformat()}/{hi.date().isoformat()}"
        protected = success_keys(histories) if config.profiling_conservative else ()
        profile = summarize_keys(candidates, config.policy, protected, **meta)
        profile_text = dumps(profile)

    with stage("eval"):
        replay = [(r.urir, r.entry.status) for r in _agent_filter(mementos, config.eval_agent)]
        index = build_index(holdings, profile, config.routing_prefer_voids,
                            config.routing_default)
        report = evaluate(index, replay, threshold)
        sweep = threshold_sweep(histories, replay, config.eval_sweep, config.policy,
                                config.profiling_conservative, holdings)

    reports = {
        "parse": parse_stats,
        "amend": amend_report.to_dict(),
        "histories": {"uris": len(histories),
                      "fluctuations": fluctuation_report(histories)},
        "buckets": bucket_histogram(select_void_candidates(histories, 1)),
        "profile": {"entries": len(profile), "observations": profile.total,
                    "policy": profile.metadata.policy, "threshold": threshold,
                    "dropped": profile.metadata.dropped,
                    "protected": profile.metadata.protected},
        "evaluation": report.to_dict(),
        "sweep": [r.to_dict() for r in sweep],
        "access": access.to_dict(),
    }

    profile_path, reports_path = out / PROFILE_NAME, out / REPORTS_NAME
    with stage("write"):
        try:
            _atomic_write(profile_path, profile_text)
            _atomic_write(reports_path, json.dumps(reports, indent=2) + "\n")
        except BaseException:
            for p in (profile_path, reports_path):
                p.unlink(missing_ok=True)
            raise
    return PipelineResult(profile_path, reports_path, profile, reports, timings)
