"""Access-log ingestion: Combined Log Format parsing and memento classification.

A record looks like::

    172.17.0.1 - - [13/Nov/2020:19:01:18 +0000] "GET /favicon.ico HTTP/1.1" 200 238 "http://localhost/" "Mozilla/5.0 ..."

Common Log Format records (no referrer/user-agent) are accepted too, as are
records with extra trailing fields after the user-agent; those fields are
kept verbatim in ``LogEntry.extra`` and otherwise ignored.
"""

from __future__ import annotations

import enum
import gzip
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Union

log = logging.getLogger(__name__)

__all__ = [
    "ParseError",
    "LogEntry",
    "Kind",
    "MementoRequest",
    "EndpointConfig",
    "DEFAULT_ENDPOINTS",
    "parse_log_line",
    "format_log_line",
    "classify_request",
    "classify_all",
    "read_log_file",
    "stream_directory",
    "LogStream",
    "FileStats",
    "entry_to_tsv",
    "entry_from_tsv",
]

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_MONTH_NUM = {m: i for i, m in enumerate(MONTHS, 1)}

_QUOTED = r'"([^"\\]*(?:\\.[^"\\]*)*)"'
_TRAILING = r'((?: (?:"[^"\\]*(?:\\.[^"\\]*)*"|[^\s"]+))*)'
_LINE_RE = re.compile(
    r"(\S+) (\S+) (\S+) "
    r"\[(\d{2})/([A-Z][a-z]{2})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-]\d{4})\] "
    + _QUOTED + r" (\d{3}) (\d+|-)"
    r"(?: " + _QUOTED + " " + _QUOTED + _TRAILING + r")?\Z",
    re.ASCII,
)
_REQUEST_RE = re.compile(r"([!#$%&'*+.^_`|~0-9A-Za-z-]+) (\S+) (HTTP/\d+(?:\.\d+)?)\Z", re.ASCII)
_TS_RE = re.compile(r"(\d{2})/([A-Z][a-z]{2})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})\Z", re.ASCII)


class ParseError(ValueError):
    """A malformed log record; ``offset`` is the character offset of the failure."""

    def __init__(self, reason: str, offset: int = 0, line: str = ""):
        super().__init__(f"{reason} at offset {offset}")
        self.reason = reason
        self.offset = offset
        self.line = line


class LogEntry(NamedTuple):
    client_ip: str
    ident: str
    auth_user: str
    timestamp: datetime
    method: str
    path: str
    http_version: str
    status: int
    bytes: Optional[int]
    # None when the record is in Common Log Format (field absent).
    referrer: Optional[str] = None
    user_agent: Optional[str] = None
    extra: str = ""

    @property
    def utc(self) -> datetime:
        return self.timestamp.astimezone(timezone.utc)


def _parse_timestamp(text: str) -> datetime:
    m = _TS_RE.match(text)
    if m is None:
        raise ValueError("bad timestamp")
    d, mon, y, hh, mm, ss, sign, oh, om = m.groups()
    return _make_timestamp(d, mon, y, hh, mm, ss, sign + oh + om)


def _make_timestamp(d: str, mon: str, y: str, hh: str, mm: str, ss: str,
                    offset: str) -> datetime:
    month = _MONTH_NUM.get(mon)
    if month is None:
        raise ValueError(f"bad month {mon!r}")
    return datetime(int(y), month, int(d), int(hh), int(mm), int(ss), tzinfo=_tz(offset))


@lru_cache(maxsize=None)
def _tz(offset: str) -> timezone:
    """``+hhmm`` / ``-hhmm`` to a timezone."""
    if int(offset[3:]) >= 60:
        raise ValueError("bad UTC offset")
    delta = timedelta(hours=int(offset[1:3]), minutes=int(offset[3:]))
    if not delta:
        return timezone.utc
    return timezone(-delta if offset[0] == "-" else delta)


def format_timestamp(ts: datetime) -> str:
    off = ts.utcoffset() or timedelta(0)
    minutes = int(off.total_seconds()) // 60
    sign = "-" if minutes < 0 else "+"
    hh, mm = divmod(abs(minutes), 60)
    return (f"{ts.day:02d}/{MONTHS[ts.month - 1]}/{ts.year:04d}:"
            f"{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d} {sign}{hh:02d}{mm:02d}")


def _diagnose(line: str) -> ParseError:
    """Locate the first malformed field of a line the fast regex rejected."""
    pos = 0
    for name in ("client IP", "identity", "user"):
        m = re.compile(r"\S+ ").match(line, pos)
        if m is None:
            return ParseError(f"missing {name}", pos, line)
        pos = m.end()
    m = re.compile(r"\[([^\]]*)\] ").match(line, pos)
    if m is None:
        return ParseError("missing [timestamp]", pos, line)
    try:
        _parse_timestamp(m.group(1))
    except ValueError as exc:
        return ParseError(f"invalid timestamp: {exc}", pos + 1, line)
    pos = m.end()
    m = re.compile(_QUOTED).match(line, pos)
    if m is None:
        return ParseError("missing quoted request line", pos, line)
    if _REQUEST_RE.match(m.group(1)) is None:
        return ParseError("malformed request line", pos + 1, line)
    pos = m.end()
    m = re.compile(r" (\d{3}) ").match(line, pos)
    if m is None:
        return ParseError("missing status", pos, line)
    pos = m.end()
    m = re.compile(r"(\d+|-)").match(line, pos)
    if m is None:
        return ParseError("missing byte count", pos, line)
    pos = m.end()
    if pos == len(line):
        return ParseError("unexpected end of record", pos, line)
    m = re.compile(" " + _QUOTED + " " + _QUOTED).match(line, pos)
    if m is None:
        return ParseError("malformed referrer/user-agent", pos, line)
    return ParseError("malformed trailing fields", m.end(), line)


def parse_log_line(line: Union[str, bytes]) -> LogEntry:
    """Parse one record (no trailing newline); raises ParseError."""
    if isinstance(line, bytes):
        line = line.decode("utf-8", "surrogateescape")
    m = _LINE_RE.match(line)
    if m is None:
        raise _diagnose(line)
    (ip, ident, user, d, mon, y, hh, mm, ss, offset, request, status, size,
     referrer, agent, extra) = m.groups()
    try:
        timestamp = _make_timestamp(d, mon, y, hh, mm, ss, offset)
    except ValueError as exc:
        raise ParseError(f"invalid timestamp: {exc}", m.start(4) - 1, line) from None
    rm = _REQUEST_RE.match(request)
    if rm is None:
        raise ParseError("malformed request line", m.start(11), line)
    code = int(status)
    if not 100 <= code <= 599:
        raise ParseError(f"status {code} out of range", m.start(12), line)
    if referrer is not None:
        referrer = "" if referrer == "-" else referrer
        agent = "" if agent == "-" else agent
    return LogEntry(
        ip,
        "" if ident == "-" else ident,
        "" if user == "-" else user,
        timestamp,
        rm.group(1),
        rm.group(2),
        rm.group(3),
        code,
        None if size == "-" else int(size),
        referrer,
        agent,
        extra or "",
    )


def format_log_line(entry: LogEntry) -> str:
    """Serialize back to Combined (or Common) Log Format."""
    size = "-" if entry.bytes is None else str(entry.bytes)
    out = (f'{entry.client_ip} {entry.ident or "-"} {entry.auth_user or "-"} '
           f'[{format_timestamp(entry.timestamp)}] '
           f'"{entry.method} {entry.path} {entry.http_version}" {entry.status} {size}')
    if entry.referrer is not None or entry.user_agent is not None:
        out += f' "{entry.referrer or "-"}" "{entry.user_agent or "-"}"{entry.extra}'
    return out


# -- memento classification -------------------------------------------------

class Kind(str, enum.Enum):
    URI_M = "URI-M"
    URI_G = "URI-G"
    URI_T = "URI-T"
    NON_MEMENTO = "non-memento"

    def __str__(self) -> str:
        return self.value


class MementoRequest(NamedTuple):
    kind: Kind
    urir: str
    request_datetime: str
    entry: LogEntry
    amended: bool = False

    @property
    def status(self) -> int:
        return self.entry.status


@dataclass(frozen=True)
class EndpointConfig:
    """Path prefixes of an archive's Memento endpoints.

    Defaults cover both TimeMap forms Arquivo.pt has served.
    """

    memento: tuple[str, ...] = ("/wayback/",)
    timemap: tuple[str, ...] = ("/wayback/timemap/*/", "/wayback/timemap/link/")
    timegate: tuple[str, ...] = ("/wayback/",)
    _memento_res: tuple = field(init=False, repr=False, compare=False)
    _timegate_res: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_memento_res", tuple(
            re.compile(re.escape(p) + r"(\d{14})(?:[a-z]{2}_)?/(.+)", re.S | re.ASCII)
            for p in self.memento))
        object.__setattr__(self, "_timegate_res", tuple(
            re.compile(re.escape(p) + r"((?:[Hh][Tt][Tt][Pp][Ss]?:|www\.).*)", re.S)
            for p in self.timegate))


DEFAULT_ENDPOINTS = EndpointConfig()


def _valid_datetime14(s: str) -> bool:
    mo, d, h, mi, se = int(s[4:6]), int(s[6:8]), int(s[8:10]), int(s[10:12]), int(s[12:14])
    return 1 <= mo <= 12 and 1 <= d <= 31 and h < 24 and mi < 60 and se < 61


def classify_request(entry: LogEntry,
                     endpoints: EndpointConfig = DEFAULT_ENDPOINTS) -> MementoRequest:
    path = entry.path
    for prefix in endpoints.timemap:
        if path.startswith(prefix) and len(path) > len(prefix):
            return MementoRequest(Kind.URI_T, path[len(prefix):], "", entry)
    for rx in endpoints._memento_res:
        m = rx.match(path)
        if m is not None and _valid_datetime14(m.group(1)):
            return MementoRequest(Kind.URI_M, m.group(2), m.group(1), entry)
    for rx in endpoints._timegate_res:
        m = rx.match(path)
        if m is not None:
            return MementoRequest(Kind.URI_G, m.group(1), "", entry)
    return MementoRequest(Kind.NON_MEMENTO, "", "", entry)


def classify_all(entries: Iterable[LogEntry],
                 endpoints: EndpointConfig = DEFAULT_ENDPOINTS) -> Iterator[MementoRequest]:
    for e in entries:
        yield classify_request(e, endpoints)


# -- files and directories ----------------------------------------------------

@dataclass
class FileStats:
    lines: int = 0
    entries: int = 0
    errors: int = 0
    unreadable: bool = False


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", errors="surrogateescape", newline="\n")
    return open(path, "rt", encoding="utf-8", errors="surrogateescape", newline="\n")


def read_log_file(path: Union[str, Path], stats: Optional[FileStats] = None
                  ) -> Iterator[Union[LogEntry, ParseError]]:
    """Yield a LogEntry or ParseError per line; never raises on bad records."""
    stats = stats if stats is not None else FileStats()
    with _open_text(Path(path)) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            stats.lines += 1
            try:
                entry = parse_log_line(line)
            except ParseError as err:
                stats.errors += 1
                err.lineno = lineno
                yield err
                continue
            stats.entries += 1
            yield entry


def _date_in_name(name: str) -> Optional[date]:
    m = re.search(r"(\d{4})-?(\d{2})-?(\d{2})", name)
    if m is None:
        return None
    try:
        return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    except ValueError:
        return None


def _parse_file(path: Path) -> tuple[list[LogEntry], FileStats]:
    stats = FileStats()
    try:
        entries = [e for e in read_log_file(path, stats) if isinstance(e, LogEntry)]
    except (OSError, EOFError, gzip.BadGzipFile) as exc:
        log.warning("skipping unreadable log file %s: %s", path, exc)
        return [], FileStats(unreadable=True)
    return entries, stats


class LogStream:
    """Entries from a directory of daily log files, in file-name then line order.

    ``stats`` maps file names to per-file counts and fills in as the stream
    is consumed.  With ``jobs > 1`` files are parsed in worker processes and
    merged in the same order, so the stream is identical for any ``jobs``.
    """

    def __init__(self, directory: Union[str, Path], start: Optional[date] = None,
                 end: Optional[date] = None, jobs: int = 1):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"log directory not found: {self.directory}")
        self.start, self.end, self.jobs = start, end, max(1, int(jobs))
        self.files = sorted(p for p in self.directory.iterdir() if p.is_file()
                            and not p.name.startswith("."))
        if start or end:
            self.files = [p for p in self.files if self._file_may_overlap(p)]
        self.stats: dict[str, FileStats] = {}

    def _file_may_overlap(self, path: Path) -> bool:
        d = _date_in_name(path.name)
        if d is None:
            return True
        # One day of slack for records logged in a non-UTC offset.
        if self.start and d < self.start - timedelta(days=1):
            return False
        if self.end and d > self.end + timedelta(days=1):
            return False
        return True

    def _keep(self, entry: LogEntry) -> bool:
        d = entry.utc.date()
        return not ((self.start and d < self.start) or (self.end and d > self.end))

    def _batches(self) -> Iterator[tuple[Path, Iterable[LogEntry]]]:
        if self.jobs == 1:
            for path in self.files:
                yield path, self._lazy(path)
            return
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            for path, (entries, stats) in zip(self.files, pool.map(_parse_file, self.files)):
                self.stats[path.name] = stats
                yield path, entries

    def _lazy(self, path: Path) -> Iterator[LogEntry]:
        stats = self.stats.setdefault(path.name, FileStats())
        try:
            for item in read_log_file(path, stats):
                if isinstance(item, LogEntry):
                    yield item
        except (OSError, EOFError, gzip.BadGzipFile) as exc:
            log.warning("skipping unreadable log file %s: %s", path, exc)
            stats.unreadable = True

    def __iter__(self) -> Iterator[LogEntry]:
        filtered = self.start is not None or self.end is not None
        for _, entries in self._batches():
            for entry in entries:
                if not filtered or self._keep(entry):
                    yield entry

    @property
    def parse_errors(self) -> int:
        return sum(s.errors for s in self.stats.values())

    @property
    def unreadable(self) -> int:
        return sum(1 for s in self.stats.values() if s.unreadable)


def stream_directory(directory: Union[str, Path], start: Optional[date] = None,
                     end: Optional[date] = None, jobs: int = 1) -> LogStream:
    return LogStream(directory, start, end, jobs)


# -- normalized TSV records ---------------------------------------------------

_ESC = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_ESC_RE = re.compile(r"[\\\t\n\r]")
_UNESC = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}
_UNESC_RE = re.compile(r"\\[\\tnr]")

TSV_COLUMNS = ("client_ip", "ident", "auth_user", "timestamp", "method", "path",
               "http_version", "status", "bytes", "referrer", "user_agent")


def _esc(s: str) -> str:
    return _ESC_RE.sub(lambda m: _ESC[m.group(0)], s) if s else ""


def _unesc(s: str) -> str:
    return _UNESC_RE.sub(lambda m: _UNESC[m.group(0)], s) if "\\" in s else s


def entry_to_tsv(entry: LogEntry, amended: Optional[bool] = None) -> str:
    """One normalized record (11 columns, plus an ``amended`` 0/1 column if given)."""
    cols = [
        _esc(entry.client_ip), _esc(entry.ident), _esc(entry.auth_user),
        entry.timestamp.isoformat(), _esc(entry.method), _esc(entry.path),
        _esc(entry.http_version), str(entry.status),
        "-" if entry.bytes is None else str(entry.bytes),
        _esc(entry.referrer or ""), _esc(entry.user_agent or ""),
    ]
    if amended is not None:
        cols.append("1" if amended else "0")
    return "\t".join(cols)


def entry_from_tsv(line: str) -> tuple[LogEntry, Optional[bool]]:
    """Inverse of :func:`entry_to_tsv`; raises ParseError."""
    cols = line.rstrip("\n").split("\t")
    if len(cols) not in (11, 12):
        raise ParseError(f"expected 11 or 12 columns, got {len(cols)}", 0, line)
    try:
        ts = datetime.fromisoformat(cols[3])
        if ts.tzinfo is None:
            raise ValueError("timestamp lacks a UTC offset")
        status = int(cols[7])
        size = None if cols[8] == "-" else int(cols[8])
    except ValueError as exc:
        raise ParseError(str(exc), 0, line) from None
    if not 100 <= status <= 599:
        raise ParseError(f"status {status} out of range", 0, line)
    entry = LogEntry(_unesc(cols[0]), _unesc(cols[1]), _unesc(cols[2]), ts,
                     _unesc(cols[4]), _unesc(cols[5]), _unesc(cols[6]), status, size,
                     _unesc(cols[9]), _unesc(cols[10]))
    amended = None if len(cols) == 11 else cols[11] == "1"
    return entry, amended
