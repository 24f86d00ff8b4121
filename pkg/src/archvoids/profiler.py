"""Voids-profile construction and the profile text format.

A profile file is UTF-8 text: ``!``-prefixed metadata lines, then one
``<key> <count>`` record per line sorted by key::

    !type voids
    !archive arquivo.pt
    !threshold 100
    com,example)/a/* 100

Holdings profiles use the same format with ``!type holdings``.
"""

from __future__ import annotations

import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, TextIO, Union

from .history import StatusHistory
from .urinorm import SurtKey, UriError, canonicalize, key_matches, parse_surt, to_surt

__all__ = [
    "BUCKETS",
    "bucket_label",
    "bucket_histogram",
    "select_void_candidates",
    "success_keys",
    "SummarizationPolicy",
    "EXACT_POLICY",
    "summarize_keys",
    "ProfileMetadata",
    "VoidsProfile",
    "ProfileFormatError",
    "write_profile",
    "read_profile",
    "dumps",
    "loads",
]

BUCKETS = ("1s", "10s", "100s", "1000s", "10000s")


def bucket_label(count: int) -> str:
    """Decimal order of magnitude of a positive count; the top bucket is open."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    return BUCKETS[min(len(str(count)) - 1, len(BUCKETS) - 1)]


def bucket_histogram(candidates: Mapping[str, int]) -> dict[str, int]:
    hist = dict.fromkeys(BUCKETS, 0)
    for n in candidates.values():
        hist[bucket_label(n)] += 1
    return {b: n for b, n in hist.items() if n}


def select_void_candidates(histories: Mapping[str, StatusHistory],
                           min_count: int = 100) -> dict[str, int]:
    """URI-Rs that only ever returned 404, with at least ``min_count`` 404s."""
    out = {}
    for urir, h in histories.items():
        if h.collapsed == "404":
            n = h.counts_by_status.get(404, 0)
            if n >= min_count:
                out[urir] = n
    return out


def success_keys(histories: Mapping[str, StatusHistory]) -> set[str]:
    """Exact keys of every URI-R that returned a 2xx at least once."""
    keys = set()
    for urir, h in histories.items():
        if h.successes:
            try:
                keys.add(str(to_surt(canonicalize(urir))))
            except UriError:
                pass
    return keys


@dataclass(frozen=True)
class SummarizationPolicy:
    """Maximum host-label and path-segment depth; None means unlimited."""

    host_depth: Optional[int] = None
    path_depth: Optional[int] = None

    def __post_init__(self):
        if self.host_depth is not None and self.host_depth < 1:
            raise ValueError("host_depth must be >= 1")
        if self.path_depth is not None and self.path_depth < 0:
            raise ValueError("path_depth must be >= 0")

    @property
    def exact(self) -> bool:
        return self.host_depth is None and self.path_depth is None

    @property
    def id(self) -> str:
        if self.exact:
            return "exact"
        h = "*" if self.host_depth is None else self.host_depth
        p = "*" if self.path_depth is None else self.path_depth
        return f"h{h}p{p}"

    def truncate(self, key: SurtKey) -> SurtKey:
        labels = key.host.split(",")
        if self.host_depth is not None and len(labels) > self.host_depth:
            return SurtKey(",".join(labels[: self.host_depth]), None, True)
        if self.path_depth is not None:
            segs = key.path.split("?", 1)[0].split("/")[1:]
            if segs and segs[-1] == "":
                segs.pop()
            if len(segs) > self.path_depth:
                prefix = "/" + "".join(s + "/" for s in segs[: self.path_depth])
                return SurtKey(key.host, prefix, True)
        return key


EXACT_POLICY = SummarizationPolicy()


@dataclass
class ProfileMetadata:
    type: str = "voids"
    archive: Optional[str] = None
    generated: Optional[str] = None
    range: Optional[str] = None
    threshold: Optional[int] = None
    policy: Optional[str] = None
    dropped: Optional[int] = None
    protected: Optional[int] = None
    extra: dict[str, str] = field(default_factory=dict)


@dataclass
class VoidsProfile:
    entries: dict[str, int] = field(default_factory=dict)
    metadata: ProfileMetadata = field(default_factory=ProfileMetadata)

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self) -> list[SurtKey]:
        return [parse_surt(k) for k in self.entries]

    @property
    def total(self) -> int:
        return sum(self.entries.values())


class _Protected:
    def __init__(self, keys: Iterable[str]):
        self.exact = set(keys)
        self.by_host: dict[str, list[SurtKey]] = defaultdict(list)
        for k in self.exact:
            sk = parse_surt(k)
            self.by_host[sk.host].append(sk)

    def covers(self, pattern: SurtKey) -> bool:
        if pattern.path is not None:
            return any(key_matches(pattern, k) for k in self.by_host.get(pattern.host, ()))
        stem = pattern.host + ","
        return any(key_matches(pattern, k)
                   for host, ks in self.by_host.items()
                   if host == pattern.host or host.startswith(stem) for k in ks)


def summarize_keys(candidates: Mapping[str, int],
                   policy: SummarizationPolicy = EXACT_POLICY,
                   protected: Iterable[str] = (),
                   **metadata) -> VoidsProfile:
    """Key candidates by SURT, truncating to the policy depths.

    ``protected`` holds exact keys known to have succeeded; a candidate
    keyed onto one is dropped, and a wildcard that would cover one is not
    formed (its children stay exact).  Candidates that fail to canonicalize
    are dropped.  Both drop counts go into the metadata.
    """
    guard = _Protected(protected)
    entries: dict[str, int] = defaultdict(int)
    dropped = collided = 0
    for urir in sorted(candidates):
        count = candidates[urir]
        try:
            key = to_surt(canonicalize(urir))
        except UriError:
            dropped += 1
            continue
        if str(key) in guard.exact:
            collided += 1
            continue
        target = policy.truncate(key)
        if target.wildcard and guard.exact and guard.covers(target):
            target = key
        entries[str(target)] += count
    # A truncated wildcard may swallow an exact key emitted earlier.
    if not policy.exact:
        wild = [parse_surt(k) for k in entries if k.endswith("*")]
        for k in [k for k in entries if not k.endswith("*")]:
            sk = parse_surt(k)
            for w in wild:
                if key_matches(w, sk) and not guard.covers(w):
                    entries[str(w)] += entries.pop(k)
                    break
    meta = ProfileMetadata(policy=policy.id, dropped=dropped, protected=collided)
    for name, value in metadata.items():
        setattr(meta, name, value)
    return VoidsProfile(dict(sorted(entries.items())), meta)


# -- serialization ------------------------------------------------------------

class ProfileFormatError(ValueError):
    def __init__(self, reason: str, lineno: int):
        super().__init__(f"line {lineno}: {reason}")
        self.reason = reason
        self.lineno = lineno


_META_FIELDS = ("type", "archive", "generated", "range", "threshold", "policy",
                "dropped", "protected")
_INT_FIELDS = {"threshold", "dropped", "protected"}


def write_profile(profile: VoidsProfile, sink: Union[str, Path, TextIO]) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            write_profile(profile, fh)
        return
    meta = profile.metadata
    for name in _META_FIELDS:
        value = getattr(meta, name)
        if value is not None:
            sink.write(f"!{name} {value}\n")
    for name in sorted(meta.extra):
        sink.write(f"!{name} {meta.extra[name]}\n")
    for key in sorted(profile.entries):
        sink.write(f"{key} {profile.entries[key]}\n")


def read_profile(source: Union[str, Path, TextIO]) -> VoidsProfile:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_profile(fh)
    meta = ProfileMetadata(type="")
    entries: dict[str, int] = {}
    seen_type = False
    for lineno, raw in enumerate(source, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("!"):
            if entries:
                raise ProfileFormatError("metadata after records", lineno)
            name, _, value = line[1:].partition(" ")
            if not name:
                raise ProfileFormatError("empty metadata name", lineno)
            if name in _INT_FIELDS:
                try:
                    setattr(meta, name, int(value))
                except ValueError:
                    raise ProfileFormatError(f"{name} must be an integer", lineno) from None
            elif name in _META_FIELDS:
                setattr(meta, name, value)
                seen_type = seen_type or name == "type"
            else:
                meta.extra[name] = value
            continue
        parts = line.split()
        if len(parts) not in (1, 2):
            raise ProfileFormatError(f"expected '<key> <count>', got {line!r}", lineno)
        try:
            parse_surt(parts[0])
        except UriError as exc:
            raise ProfileFormatError(str(exc), lineno) from None
        try:
            # Externally authored records (ACLs, take-downs) may omit counts.
            count = int(parts[1]) if len(parts) == 2 else 1
        except ValueError:
            raise ProfileFormatError(f"bad count {parts[1]!r}", lineno) from None
        if count < 0:
            raise ProfileFormatError("negative count", lineno)
        if parts[0] in entries:
            raise ProfileFormatError(f"duplicate key {parts[0]}", lineno)
        entries[parts[0]] = count
    if not seen_type:
        meta.type = "voids"
    return VoidsProfile(dict(sorted(entries.items())), meta)


def dumps(profile: VoidsProfile) -> str:
    buf = io.StringIO()
    write_profile(profile, buf)
    return buf.getvalue()


def loads(text: str) -> VoidsProfile:
    return read_profile(io.StringIO(text))
