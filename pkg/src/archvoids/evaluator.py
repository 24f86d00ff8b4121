"""Replay evaluation of voids profiles and access-log pivot reports."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .history import StatusHistory
from .logs import Kind, LogEntry, MementoRequest
from .profiler import (EXACT_POLICY, SummarizationPolicy, VoidsProfile,
                       select_void_candidates, success_keys, summarize_keys)
from .router import NO_ROUTE, ProfileIndex, build_index
from .urinorm import UriError, canonicalize

__all__ = [
    "EvalReport",
    "evaluate",
    "threshold_sweep",
    "replay_from_requests",
    "AccessReports",
    "access_reports",
    "DEFAULT_AGENT_PATTERNS",
]


def _is_success(status: int) -> bool:
    return 200 <= status < 300


@dataclass
class EvalReport:
    total_requests: int = 0
    avoided: int = 0
    routed: int = 0
    false_negatives: int = 0
    true_negatives: int = 0
    threshold: Optional[int] = None
    profile_size: int = 0

    @property
    def savings_pct(self) -> float:
        return 100.0 * self.avoided / self.total_requests if self.total_requests else 0.0

    @property
    def fn_pct(self) -> float:
        return 100.0 * self.false_negatives / self.total_requests if self.total_requests else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["savings_pct"] = round(self.savings_pct, 6)
        d["fn_pct"] = round(self.fn_pct, 6)
        return d


def replay_from_requests(requests: Iterable[MementoRequest]) -> list[tuple[str, int]]:
    """(urir, status) pairs for every memento request, in stream order."""
    return [(r.urir, r.entry.status) for r in requests if r.kind is not Kind.NON_MEMENTO]


def evaluate(index: ProfileIndex, replay: Iterable[tuple[str, int]],
             threshold: Optional[int] = None) -> EvalReport:
    """Route every replayed request; count what a voids profile would have saved.

    ``replay`` carries the archive's actual (amended) status per request.  A
    no-route on a 2xx is a false negative, any other no-route a true negative.
    """
    report = EvalReport(threshold=threshold, profile_size=index.sizes["voids"])
    m = index.match
    for urir, status in replay:
        report.total_requests += 1
        if m(urir).verdict == NO_ROUTE:
            report.avoided += 1
            if _is_success(status):
                report.false_negatives += 1
            else:
                report.true_negatives += 1
        else:
            report.routed += 1
    return report


def threshold_sweep(histories: Mapping[str, StatusHistory],
                    replay: Iterable[tuple[str, int]],
                    thresholds: Sequence[int],
                    policy: SummarizationPolicy = EXACT_POLICY,
                    conservative: bool = True,
                    holdings: Optional[VoidsProfile] = None) -> list[EvalReport]:
    """One report per threshold, rebuilding the voids profile each time."""
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError(f"thresholds must be strictly increasing: {list(thresholds)}")
    replay = list(replay)
    protected = success_keys(histories) if conservative else ()
    reports = []
    for t in thresholds:
        profile = summarize_keys(select_void_candidates(histories, t), policy, protected,
                                 threshold=t)
        reports.append(evaluate(build_index(holdings, profile), replay, threshold=t))
    return reports


# -- access reports -------------------------------------------------------------

DEFAULT_AGENT_PATTERNS = ("MemGator", "TimeTravel", "UptimeRobot", "Googlebot",
                          "YandexBot", "bingbot", "curl", "python-requests")


@dataclass
class AccessReports:
    daily_counts: dict[str, int] = field(default_factory=dict)
    tld_by_year: dict[int, dict[str, int]] = field(default_factory=dict)
    top_uris: dict[str, int] = field(default_factory=dict)
    timemap_status_distribution: dict[int, int] = field(default_factory=dict)
    source_totals: dict[str, int] = field(default_factory=dict)
    source_monthly: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "daily_counts": self.daily_counts,
            "tld_by_year": {str(y): t for y, t in self.tld_by_year.items()},
            "top_uris": self.top_uris,
            "timemap_status_distribution": {str(s): n for s, n in
                                            self.timemap_status_distribution.items()},
            "source_totals": self.source_totals,
            "source_monthly": self.source_monthly,
        }


def _tld(urir: str) -> Optional[str]:
    try:
        host = canonicalize(urir).host
    except UriError:
        return None
    if host.startswith("[") or host.replace(".", "").isdigit():
        return None
    return host.rsplit(".", 1)[-1]


def attribute(user_agent: Optional[str], patterns: Sequence[str]) -> str:
    """First pattern that is a substring of the user-agent, else ``other``."""
    ua = user_agent or ""
    for p in patterns:
        if p in ua:
            return p
    return "other"


def access_reports(requests: Iterable, top_min_count: int = 10000,
                   agent_patterns: Sequence[str] = DEFAULT_AGENT_PATTERNS) -> AccessReports:
    """Pivot tables over a classified request stream (LogEntry items count as
    non-memento traffic).

    TLDs that are missing from any year present in the data are left out of
    ``tld_by_year``; source attribution covers TimeMap requests.
    """
    daily: Counter = Counter()
    tld_year: dict[int, Counter] = defaultdict(Counter)
    uris: Counter = Counter()
    tm_status: Counter = Counter()
    sources: Counter = Counter()
    monthly: dict[str, Counter] = defaultdict(Counter)
    tld_cache: dict[str, Optional[str]] = {}

    for r in requests:
        if isinstance(r, LogEntry):
            e, kind, urir = r, Kind.NON_MEMENTO, ""
        else:
            e, kind, urir = r.entry, r.kind, r.urir
        ts = e.utc
        daily[ts.date().isoformat()] += 1
        if kind is Kind.NON_MEMENTO:
            continue
        uris[urir] += 1
        tld = tld_cache.get(urir, "")
        if tld == "":
            tld = tld_cache[urir] = _tld(urir)
        if tld is not None:
            tld_year[ts.year][tld] += 1
        if kind is Kind.URI_T:
            tm_status[e.status] += 1
            src = attribute(e.user_agent, agent_patterns)
            sources[src] += 1
            monthly[f"{ts.year:04d}-{ts.month:02d}"][src] += 1

    years = sorted(tld_year)
    common = set.intersection(*(set(tld_year[y]) for y in years)) if years else set()

    def ranked(c: Mapping) -> dict:
        return dict(sorted(c.items(), key=lambda kv: (-kv[1], kv[0])))

    return AccessReports(
        daily_counts=dict(sorted(daily.items())),
        tld_by_year={y: ranked({t: n for t, n in tld_year[y].items() if t in common})
                     for y in years},
        top_uris=ranked({u: n for u, n in uris.items() if n >= top_min_count}),
        timemap_status_distribution=dict(sorted(tm_status.items())),
        source_totals=ranked(sources),
        source_monthly={m: ranked(c) for m, c in sorted(monthly.items())},
    )
