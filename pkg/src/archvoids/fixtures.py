"""Deterministic synthetic archive access logs with ground-truth labels.

The generated corpus mirrors the structure the toolkit has to cope with:

* TimeMap requests for absent URI-Rs logged as Soft-404s (``200`` with
  ``k*len(urir)+c`` bytes) until a boundary date, genuine 404s after it
* the TimeMap endpoint moving from ``/timemap/*/`` to ``/timemap/link/`` at
  the boundary, with 302s on the old endpoint
* URI-Rs following given 200/404 fluctuation patterns
* 404-only URI-Rs whose request counts fall in given frequency buckets
* non-memento noise, 5xx/429 responses, and post-boundary "lookalike"
  TimeMaps whose real 200 responses happen to match the template size

Daily log files go to ``<out>/logs/``, labels to ``<out>/labels.tsv``::

    uri    <urir>  <pattern>  <n404>  <n200>
    entry  <seq>   <soft404>  <lookalike>  <agent>  <kind>

``seq`` is the 0-based position of the record in the date-ordered stream.
"""

from __future__ import annotations

import configparser
import gzip
import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Union

from .logs import MONTHS

__all__ = ["CorpusSpec", "Corpus", "Labels", "generate", "default_spec",
           "load_spec", "load_labels", "AGENTS"]

# label -> (user-agent, client IP prefix)
AGENTS = {
    "MemGator": ("MemGator:1.0-rc7 <https://github.com/oduwsdl/memgator>", "128.82.4."),
    "TimeTravel": ("Memento TimeTravel (http://timetravel.mementoweb.org/about/)", "192.0.2."),
    "UptimeRobot": ("Mozilla/5.0+(compatible; UptimeRobot/2.0; http://www.uptimerobot.com/)",
                    "198.51.100."),
    "Googlebot": ("Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)",
                  "66.249.66."),
    "curl": ("curl/7.58.0", "203.0.113."),
    "other": ("Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) "
              "Chrome/87.0.4280.66 Safari/537.36", "172.17.0."),
}
_AGENT_WEIGHTS = {"MemGator": 5, "TimeTravel": 2, "UptimeRobot": 1, "Googlebot": 2,
                  "curl": 1, "other": 3}
_KIND_WEIGHTS = (("URI-T", 5), ("URI-M", 3), ("URI-G", 2))
_TLDS = ("pt", "com", "org", "net", "eu")
_WORDS = ("arquivo", "publico", "example", "news", "sapo", "blog", "shop", "uni",
          "museu", "camara", "jornal", "radio")
_NOISE_PATHS = ("/favicon.ico", "/robots.txt", "/", "/static/app.js", "/search?q=lisboa",
                "/about.html")


@dataclass
class CorpusSpec:
    seed: int = 0
    start: date = date(2019, 10, 1)
    days: int = 90
    boundary: date = date(2019, 11, 18)
    k: int = 3
    c: int = 150
    # 404-only URI-Rs per frequency bucket
    buckets: dict[str, int] = field(default_factory=dict)
    # URI-Rs per collapsed 200/404 pattern
    patterns: dict[str, int] = field(default_factory=dict)
    noise: int = 0
    redirects: int = 0
    errors: int = 0
    lookalikes: int = 0
    # pad with noise up to this many lines
    total_lines: Optional[int] = None
    gzip_every: int = 0
    missing_days: tuple[date, ...] = ()

    def __post_init__(self):
        for pattern in self.patterns:
            codes = pattern.split(",")
            if any(c not in ("200", "404") for c in codes) or any(
                    a == b for a, b in zip(codes, codes[1:])):
                raise ValueError(f"bad pattern {pattern!r}")
        for b in self.buckets:
            if b not in ("1s", "10s", "100s", "1000s", "10000s"):
                raise ValueError(f"bad bucket {b!r}")


def default_spec(seed: int = 7) -> CorpusSpec:
    """The bundled ~10,000-line corpus used by tests and demos."""
    return CorpusSpec(
        seed=seed,
        buckets={"1s": 500, "10s": 60, "100s": 8, "1000s": 1},
        patterns={"404": 20, "200": 150, "404,200": 40, "200,404": 15, "200,404,200": 10,
                  "404,200,404": 8, "404,200,404,200": 6, "200,404,200,404,200": 4,
                  "200,404,200,404,200,404": 2},
        noise=300, redirects=150, errors=100, lookalikes=30, total_lines=10000,
        gzip_every=3, missing_days=(date(2019, 10, 20),),
    )


@dataclass
class Labels:
    uri_patterns: dict[str, str] = field(default_factory=dict)
    uri_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    soft404: set[int] = field(default_factory=set)
    lookalike: set[int] = field(default_factory=set)
    agents: list[str] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)


@dataclass
class Corpus:
    log_dir: Path
    files: list[Path]
    labels_path: Path
    labels: Labels
    lines: int


def _bucket_range(label: str) -> tuple[int, int]:
    lo = 10 ** (len(label) - 2)
    # Lower half of each bucket keeps corpora small.
    return lo, 2 * lo - 1


def _fmt_ts(t: datetime) -> str:
    return (f"{t.day:02d}/{MONTHS[t.month - 1]}/{t.year:04d}:"
            f"{t.hour:02d}:{t.minute:02d}:{t.second:02d} +0000")


def _line(ip: str, t: datetime, path: str, status: int, size: int, agent: str) -> str:
    return (f'{ip} - - [{_fmt_ts(t)}] "GET {path} HTTP/1.1" {status} {size} '
            f'"-" "{agent}"')


def generate(spec: CorpusSpec, out_dir: Union[str, Path]) -> Corpus:
    """Write ``logs/`` and ``labels.tsv`` into ``out_dir``."""
    rng = random.Random(spec.seed)
    out = Path(out_dir)
    log_dir = out / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    t0 = datetime(spec.start.year, spec.start.month, spec.start.day, tzinfo=timezone.utc)
    missing = set(spec.missing_days)
    day_ok = [s for s in range(spec.days) if (spec.start + timedelta(days=s)) not in missing]
    boundary = datetime(spec.boundary.year, spec.boundary.month, spec.boundary.day,
                        tzinfo=timezone.utc)

    def random_offsets(n: int) -> list[int]:
        picks = set()
        while len(picks) < n:
            picks.add(rng.choice(day_ok) * 86400 + rng.randrange(86400))
        return sorted(picks)

    agent_names = list(_AGENT_WEIGHTS)
    agent_w = list(_AGENT_WEIGHTS.values())
    kinds = [k for k, _ in _KIND_WEIGHTS]
    kind_w = [w for _, w in _KIND_WEIGHTS]

    uris: list[tuple[str, list[int]]] = []
    uid = 0

    def new_uri() -> str:
        nonlocal uid
        uid += 1
        host = f"{rng.choice(_WORDS)}{uid % 37}.{rng.choice(_TLDS)}"
        if rng.random() < 0.3:
            host = "www." + host
        tail = rng.choice(("", "index.html", "a/b", "news?id=%d" % rng.randrange(999)))
        return f"http://{host}/u{uid}/{tail}"

    for label in ("1s", "10s", "100s", "1000s", "10000s"):
        lo, hi = _bucket_range(label)
        for _ in range(spec.buckets.get(label, 0)):
            uris.append((new_uri(), [404] * rng.randint(lo, hi)))
    for pattern, count in spec.patterns.items():
        codes = [int(c) for c in pattern.split(",")]
        for _ in range(count):
            n = len(codes) + rng.randint(0, 6)
            cuts = sorted(rng.sample(range(1, n), len(codes) - 1))
            bounds = [0, *cuts, n]
            seq = [codes[i] for i in range(len(codes)) for _ in range(bounds[i + 1] - bounds[i])]
            uris.append((new_uri(), seq))

    # (offset, tiebreak, fields...) records
    events: list[tuple] = []
    labels = Labels()
    for urir, seq in uris:
        pattern = ",".join(str(c) for i, c in enumerate(seq) if i == 0 or seq[i - 1] != c)
        labels.uri_patterns[urir] = pattern
        labels.uri_counts[urir] = (seq.count(404), seq.count(200))
        for off, status in zip(random_offsets(len(seq)), seq):
            kind = rng.choices(kinds, kind_w)[0]
            agent = rng.choices(agent_names, agent_w)[0]
            events.append([off, len(events), urir, kind, status, agent, 0, 0])

    pool = [u for u, _ in uris]
    extra_statuses = (500, 503, 429)
    for _ in range(spec.errors):
        off = random_offsets(1)[0]
        events.append([off, len(events), rng.choice(pool), rng.choice(("URI-M", "URI-T")),
                       rng.choice(extra_statuses), rng.choices(agent_names, agent_w)[0], 0, 0])
    post = [s for s in day_ok if t0 + timedelta(days=s) >= boundary]
    for _ in range(spec.redirects if post else 0):
        off = rng.choice(post) * 86400 + rng.randrange(86400)
        events.append([off, len(events), rng.choice(pool), "URI-T-old", 302,
                       rng.choices(agent_names, agent_w)[0], 0, 0])

    base_lines = len(events) + spec.noise
    noise = spec.noise
    if spec.total_lines is not None and spec.total_lines > base_lines:
        noise += spec.total_lines - base_lines
    for _ in range(noise):
        off = random_offsets(1)[0]
        events.append([off, len(events), rng.choice(_NOISE_PATHS), "noise",
                       rng.choice((200, 200, 404)), rng.choices(agent_names, agent_w)[0], 0, 0])

    events.sort(key=lambda e: (e[0], e[1]))

    # lookalikes: genuine post-boundary 200 TimeMaps sized like the template
    cands = [i for i, e in enumerate(events)
             if e[3] == "URI-T" and e[4] == 200 and t0 + timedelta(seconds=e[0]) >= boundary]
    for i in rng.sample(cands, min(spec.lookalikes, len(cands))):
        events[i][7] = 1

    by_day: dict[int, list[str]] = {d: [] for d in range(spec.days)}
    for seq_no, (off, _, target, kind, status, agent, _, lookalike) in enumerate(events):
        t = t0 + timedelta(seconds=off)
        pre = t < boundary
        ua, ip_prefix = AGENTS[agent]
        ip = ip_prefix + str(1 + (hash_str(target) + off) % 250)
        pred = spec.k * len(target.encode("utf-8")) + spec.c
        soft = 0
        if kind == "URI-T":
            path = ("/wayback/timemap/*/" if pre else "/wayback/timemap/link/") + target
            if status == 404 and pre:
                status, size, soft = 200, pred, 1
            elif status == 200:
                size = pred if lookalike else pred + 1 + rng.randrange(20000)
            else:
                size = rng.randrange(100, 400)
        elif kind == "URI-T-old":
            kind, path, size = "URI-T", "/wayback/timemap/*/" + target, rng.randrange(200, 400)
        elif kind == "URI-M":
            ts14 = (t0 - timedelta(days=rng.randrange(1, 6000))).strftime("%Y%m%d%H%M%S")
            path = f"/wayback/{ts14}/{target}"
            size = rng.randrange(300, 90000)
        elif kind == "URI-G":
            path = "/wayback/" + target
            size = rng.randrange(0, 600)
        else:
            kind, path, size = "non-memento", target, rng.randrange(50, 5000)
        by_day[off // 86400].append(_line(ip, t, path, status, size, ua))
        if soft:
            labels.soft404.add(seq_no)
        if lookalike:
            labels.lookalike.add(seq_no)
        labels.agents.append(agent)
        labels.kinds.append(kind)

    files = []
    for d in range(spec.days):
        day = spec.start + timedelta(days=d)
        gz = spec.gzip_every and d % spec.gzip_every == spec.gzip_every - 1
        path = log_dir / f"access.log.{day.isoformat()}{'.gz' if gz else ''}"
        text = "".join(line + "\n" for line in by_day[d])
        if gz:
            with gzip.GzipFile(path, "wb", mtime=0) as fh:
                fh.write(text.encode("utf-8"))
        else:
            path.write_text(text, encoding="utf-8", newline="\n")
        files.append(path)

    labels_path = out / "labels.tsv"
    with open(labels_path, "w", encoding="utf-8", newline="\n") as fh:
        for urir in sorted(labels.uri_patterns):
            n404, n200 = labels.uri_counts[urir]
            fh.write(f"uri\t{urir}\t{labels.uri_patterns[urir]}\t{n404}\t{n200}\n")
        for i, (agent, kind) in enumerate(zip(labels.agents, labels.kinds)):
            fh.write(f"entry\t{i}\t{int(i in labels.soft404)}\t{int(i in labels.lookalike)}"
                     f"\t{agent}\t{kind}\n")
    return Corpus(log_dir, files, labels_path, labels, len(events))


def hash_str(s: str) -> int:
    """Small stable string hash (``hash()`` is salted per process)."""
    h = 0
    for ch in s:
        h = (h * 31 + ord(ch)) & 0xFFFFFFFF
    return h


def load_labels(path: Union[str, Path]) -> Labels:
    labels = Labels()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if cols[0] == "uri":
                labels.uri_patterns[cols[1]] = cols[2]
                labels.uri_counts[cols[1]] = (int(cols[3]), int(cols[4]))
            elif cols[0] == "entry":
                i = int(cols[1])
                if cols[2] == "1":
                    labels.soft404.add(i)
                if cols[3] == "1":
                    labels.lookalike.add(i)
                labels.agents.append(cols[4])
                labels.kinds.append(cols[5])
    return labels


def load_spec(path: Union[str, Path]) -> CorpusSpec:
    """Read a corpus spec from a flat ``key = value`` file.

    Keys: ``seed start days boundary k c noise redirects errors lookalikes
    total_lines gzip_every missing_days``, plus ``bucket.<label>`` and
    ``pattern.<codes>`` entries, e.g. ``pattern.404,200 = 3``.
    """
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    parser.read_string("[corpus]\n" + Path(path).read_text("utf-8"))
    kw: dict = {"buckets": {}, "patterns": {}}
    for key, raw in parser.items("corpus"):
        raw = raw.strip()
        if key.startswith("bucket."):
            kw["buckets"][key[7:]] = int(raw)
        elif key.startswith("pattern."):
            kw["patterns"][key[8:]] = int(raw)
        elif key in ("start", "boundary"):
            kw[key] = date.fromisoformat(raw)
        elif key == "missing_days":
            kw[key] = tuple(date.fromisoformat(x.strip()) for x in raw.split(",") if x.strip())
        elif key in ("seed", "days", "k", "c", "noise", "redirects", "errors", "lookalikes",
                     "total_lines", "gzip_every"):
            kw[key] = int(raw)
        else:
            raise ValueError(f"unknown corpus spec key {key!r}")
    return CorpusSpec(**kw)
