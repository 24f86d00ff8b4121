"""Route-or-skip decisions against combined holdings and voids profiles.

The most specific matching key across both profiles decides.  Specificity
is (depth, kind): depth counts host labels plus path segments, and at equal
depth an exact key beats a path wildcard, which beats a host wildcard.  When
both profiles carry the winning key, holdings wins unless ``prefer_voids``.

The index keeps, per reversed host, a table of exact key paths and a table
of wildcard path prefixes, plus one table of host-wildcard stems.  A lookup
probes candidate prefixes from the most specific down, so it costs at most
one dict probe per path segment and host label.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, NamedTuple, Optional, Union

from .profiler import VoidsProfile
from .urinorm import SurtKey, UriError, canonicalize, parse_surt, to_surt

__all__ = [
    "ROUTE",
    "NO_ROUTE",
    "RoutingDecision",
    "ProfileIndex",
    "IndexBuildError",
    "build_index",
    "match",
    "match_key",
    "match_batch",
    "decision_tsv",
]

ROUTE, NO_ROUTE = "route", "no-route"
HOLDINGS, VOIDS, DEFAULT = "holdings", "voids", "default"
_H, _V = 1, 2

# Lowercased URIs this simple map to a SURT key without the general
# canonicalizer.
_simple_match = re.compile(
    r"https?://"
    r"([a-z0-9_-]+(?:\.[a-z0-9_-]+)*)"
    r"(/[a-z0-9\-_~/!$&'()+,;=:@.]*)?"
    r"(\?[!\"$-)+-~]*)?\Z",
    re.ASCII,
).match


class RoutingDecision(NamedTuple):
    verdict: str
    matched_key: Optional[str]
    source: str
    depth: int


class IndexBuildError(ValueError):
    def __init__(self, key: str, reason: str = ""):
        super().__init__(f"malformed key {key!r}{': ' + reason if reason else ''}")
        self.key = key


ProfileLike = Union[VoidsProfile, Iterable[str], None]


def _keys(profile: ProfileLike) -> Iterable[str]:
    if profile is None:
        return ()
    if isinstance(profile, VoidsProfile):
        return profile.entries.keys()
    return profile


class ProfileIndex:
    """Immutable lookup structure over a holdings and a voids profile."""

    def __init__(self, holdings: ProfileLike = None, voids: ProfileLike = None,
                 prefer_voids: bool = False, default: str = ROUTE):
        if default not in (ROUTE, NO_ROUTE):
            raise ValueError(f"default verdict must be {ROUTE!r} or {NO_ROUTE!r}")
        self.prefer_voids = prefer_voids
        self.default = default
        self.sizes = {HOLDINGS: 0, VOIDS: 0}
        masks: dict[tuple, int] = {}
        for bit, name, profile in ((_H, HOLDINGS, holdings), (_V, VOIDS, voids)):
            for text in _keys(profile):
                try:
                    key = parse_surt(text)
                except UriError as exc:
                    raise IndexBuildError(text, str(exc)) from None
                slot = (key.host, key.path, key.wildcard)
                masks[slot] = masks.get(slot, 0) | bit
                self.sizes[name] += 1
        # host -> (exact path -> decision, wildcard prefix -> decision)
        self._by_host: dict[str, tuple[dict, dict]] = {}
        self._hosts: dict[str, RoutingDecision] = {}
        for (host, path, wildcard), mask in masks.items():
            key = SurtKey(host, path, wildcard)
            decision = self._decision(mask, str(key), key.depth)
            if path is None:
                self._hosts[host] = decision
            else:
                exact, prefixes = self._by_host.setdefault(host, ({}, {}))
                (prefixes if wildcard else exact)[path] = decision
        self._miss = RoutingDecision(default, None, DEFAULT, 0)
        # lowercased host -> (path tables, host-level decision); hosts repeat heavily
        self._rev: dict[str, tuple] = {}

    def _decision(self, mask: int, key: str, depth: int) -> RoutingDecision:
        if mask == _V or (mask == _H | _V and self.prefer_voids):
            return RoutingDecision(NO_ROUTE, key, VOIDS, depth)
        return RoutingDecision(ROUTE, key, HOLDINGS, depth)

    def __len__(self) -> int:
        return self.sizes[HOLDINGS] + self.sizes[VOIDS]

    def _host_miss(self, host: str) -> RoutingDecision:
        hosts = self._hosts
        if hosts:
            cand = host
            while True:
                hit = hosts.get(cand)
                if hit is not None:
                    return hit
                i = cand.rfind(",")
                if i == -1:
                    break
                cand = cand[:i]
        return self._miss

    def _path_hit(self, tables: tuple[dict, dict], path: str) -> Optional[RoutingDecision]:
        exact, prefixes = tables
        hit = exact.get(path)
        if hit is not None or not prefixes:
            return hit
        base = path.split("?", 1)[0]
        if base[-1] != "/":
            hit = prefixes.get(base + "/")
            if hit is not None:
                return hit
        i = len(base)
        while i > 0:
            i = base.rfind("/", 0, i)
            hit = prefixes.get(base[: i + 1])
            if hit is not None:
                return hit
        return None

    def lookup(self, host: str, path: str) -> RoutingDecision:
        """Decide for an exact key given as reversed host and key path."""
        tables = self._by_host.get(host)
        if tables is not None:
            hit = self._path_hit(tables, path)
            if hit is not None:
                return hit
        return self._host_miss(host)

    def match(self, uri: str) -> RoutingDecision:
        m = _simple_match(uri.lower())
        if m is not None:
            host, path, query = m.groups()
            if not host[-1].isdigit() and (path is None or "/." not in path):
                cached = self._rev.get(host)
                if cached is None:
                    if len(self._rev) > 1 << 16:
                        self._rev.clear()
                    rev = ",".join(reversed(host.split(".")))
                    cached = self._rev[host] = (self._by_host.get(rev), self._host_miss(rev))
                tables, fallback = cached
                if tables is None:
                    return fallback
                if path is None:
                    path = "/"
                if query and len(query) > 1:
                    path += query
                hit = tables[0].get(path)
                if hit is None:
                    hit = self._path_hit(tables, path)
                return fallback if hit is None else hit
        try:
            key = to_surt(canonicalize(uri))
        except UriError:
            return RoutingDecision(ROUTE, None, DEFAULT, 0)
        return self.lookup(key.host, key.path)


def build_index(holdings: ProfileLike = None, voids: ProfileLike = None,
                prefer_voids: bool = False, default: str = ROUTE) -> ProfileIndex:
    return ProfileIndex(holdings, voids, prefer_voids, default)


def match(index: ProfileIndex, uri: str) -> RoutingDecision:
    return index.match(uri)


def match_key(index: ProfileIndex, key: str) -> RoutingDecision:
    """Decide for an already-built exact SURT key string."""
    sk = parse_surt(key)
    if sk.wildcard:
        raise ValueError(f"lookup key must be exact: {key}")
    return index.lookup(sk.host, sk.path)


def match_batch(index: ProfileIndex, uris: Iterable[str]
                ) -> Iterator[tuple[str, RoutingDecision]]:
    m = index.match
    for uri in uris:
        yield uri, m(uri)


def decision_tsv(uri: str, d: RoutingDecision) -> str:
    return f"{uri}\t{d.verdict}\t{d.source}\t{d.matched_key or '-'}\t{d.depth}"
