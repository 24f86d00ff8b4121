"""Per-URI status histories and 200/404 fluctuation patterns."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Iterator, Optional

from .logs import Kind, MementoRequest
from .urinorm import UriError, canonicalize, has_upper_host

__all__ = [
    "StatusHistory",
    "build_histories",
    "collapse",
    "filter_redirects",
    "exclude_upper_hosts",
    "fluctuation_report",
    "group_pattern",
    "agent_report",
    "TRACKED_STATUSES",
]

TRACKED_STATUSES = (200, 404)
LONG_PATTERN = 5


@dataclass
class StatusHistory:
    urir: str
    first_seen: Optional[datetime] = None
    last_seen: Optional[datetime] = None
    total_requests: int = 0
    counts_by_status: dict[int, int] = field(default_factory=dict)
    collapsed: str = ""

    @property
    def successes(self) -> int:
        return sum(n for s, n in self.counts_by_status.items() if 200 <= s < 300)


def collapse(statuses: Iterable[int]) -> str:
    """Run-length collapse of the 200/404 subsequence, e.g. ``"404,200"``."""
    out: list[int] = []
    for s in statuses:
        if s in TRACKED_STATUSES and (not out or out[-1] != s):
            out.append(s)
    return ",".join(map(str, out))


def filter_redirects(requests: Iterable) -> Iterator:
    """Drop 3xx records (works for LogEntry and MementoRequest alike)."""
    for r in requests:
        if not 300 <= r.status < 400:
            yield r


def exclude_upper_hosts(requests: Iterable[MementoRequest]) -> Iterator[MementoRequest]:
    for r in requests:
        if not (r.urir and has_upper_host(r.urir)):
            yield r


def _canonical_id(urir: str) -> str:
    try:
        return str(canonicalize(urir))
    except UriError:
        return urir


def build_histories(requests: Iterable[MementoRequest],
                    canonical: bool = False) -> dict[str, StatusHistory]:
    """One history per distinct URI-R (raw string unless ``canonical``).

    Records are ordered by (time, status) per URI, so the result does not
    depend on input order.  Non-memento records are ignored.
    """
    events: dict[str, list] = defaultdict(list)
    for r in requests:
        if r.kind is Kind.NON_MEMENTO or not r.urir:
            continue
        key = _canonical_id(r.urir) if canonical else r.urir
        e = r.entry
        events[key].append((e.timestamp, e.status))

    out = {}
    for key in sorted(events):
        seq = sorted(events[key])
        counts = Counter(s for _, s in seq)
        out[key] = StatusHistory(
            urir=key,
            first_seen=seq[0][0],
            last_seen=seq[-1][0],
            total_requests=len(seq),
            counts_by_status=dict(sorted(counts.items())),
            collapsed=collapse(s for _, s in seq),
        )
    return out


def group_pattern(collapsed: str) -> str:
    """Patterns of five or more codes fold into their 5-code prefix plus ``++``."""
    codes = collapsed.split(",")
    if len(codes) >= LONG_PATTERN:
        return ",".join(codes[:LONG_PATTERN]) + "++"
    return collapsed


def fluctuation_report(histories: dict[str, StatusHistory]) -> dict[str, int]:
    """URI count per collapsed pattern, largest first."""
    counts = Counter(group_pattern(h.collapsed) for h in histories.values() if h.collapsed)
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def agent_report(requests: Iterable[MementoRequest], urir: str) -> dict[str, dict[int, int]]:
    """Status counts per user-agent for one URI-R."""
    table: dict[str, Counter] = defaultdict(Counter)
    for r in requests:
        if r.urir == urir:
            table[r.entry.user_agent or ""][r.entry.status] += 1
    return {ua: dict(sorted(c.items())) for ua, c in sorted(table.items())}
