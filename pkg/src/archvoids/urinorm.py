"""URI canonicalization and SURT keys.

SURT keys are the shared key space for voids/holdings profiles and routing::

    >>> str(to_surt(canonicalize("http://Sub.Example.com/a/1?b=2")))
    'com,example,sub)/a/1?b=2'

Three key shapes exist:

* exact keys, ``com,example)/a/1``
* path wildcards, ``com,example)/a/*`` (the prefix ``/a`` and everything below it)
* host wildcards, ``com,example,*`` (the host and all of its subdomains)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional
from urllib.parse import quote

__all__ = [
    "UriError",
    "CanonicalUri",
    "SurtKey",
    "canonicalize",
    "to_surt",
    "parse_surt",
    "has_upper_host",
    "key_prefixes",
    "key_matches",
    "surt_string",
]

DEFAULT_PORTS = {"http": 80, "https": 443}

EXACT, PATH_WILDCARD, HOST_WILDCARD = 2, 1, 0

_SCHEME_RE = re.compile(r"([A-Za-z][A-Za-z0-9+.\-]*):")
# Labels may not carry SURT syntax characters or whitespace.
_HOST_RE = re.compile(r"[^\s.,()/\\?#@:*\[\]%]+(?:\.[^\s.,()/\\?#@:*\[\]%]+)*")
_IPV4_RE = re.compile(r"\d{1,3}(?:\.\d{1,3}){3}")
_IPV6_RE = re.compile(r"\[[0-9a-f:.]+\]")
_PCT_RE = re.compile(r"%([0-9A-Fa-f]{2})")
_UNRESERVED = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-._~"
)
_WS_RE = re.compile(r"\s")
_KEY_HOST_RE = re.compile(r"[^\s,()/*]+(?:,[^\s,()/*]+)*")


class UriError(ValueError):
    """Raised for input that has no parseable host."""


@dataclass(frozen=True)
class CanonicalUri:
    scheme: str
    host: str
    port: Optional[int]
    path: str
    query: str = ""

    def __str__(self) -> str:
        netloc = self.host if self.port is None else f"{self.host}:{self.port}"
        q = f"?{self.query}" if self.query else ""
        return f"{self.scheme}://{netloc}{self.path}{q}"


@dataclass(frozen=True)
class SurtKey:
    """A parsed profile key.

    ``host`` is the comma-joined reversed host (port appended to the last
    label as ``:port``).  ``path`` is the path plus query for exact keys, the
    path prefix ending in ``/`` for path wildcards, and None for host
    wildcards.
    """

    host: str
    path: Optional[str]
    wildcard: bool = False

    @property
    def kind(self) -> int:
        if not self.wildcard:
            return EXACT
        return HOST_WILDCARD if self.path is None else PATH_WILDCARD

    @property
    def reversed_host(self) -> str:
        return self.host

    @property
    def path_suffix(self) -> str:
        if self.path is None:
            return "*"
        return ")" + self.path + ("*" if self.wildcard else "")

    @property
    def depth(self) -> int:
        """Host-label count plus path-segment count (query ignored).

        A trailing ``/`` does not open a segment, but inner empty segments
        count, so ``//*`` ranks deeper than ``/*``.
        """
        n = self.host.count(",") + 1
        if self.path is not None:
            base = self.path.split("?", 1)[0]
            n += base.count("/") - base.endswith("/")
        return n

    @property
    def specificity(self) -> tuple[int, int]:
        # Exact keys outrank path wildcards, which outrank host wildcards,
        # at equal depth.
        return (self.depth, self.kind)

    def __str__(self) -> str:
        if self.path is None:
            return self.host + ",*"
        return self.host + ")" + self.path + ("*" if self.wildcard else "")


def _normalize_escapes(path: str) -> str:
    def repl(m: re.Match) -> str:
        ch = chr(int(m.group(1), 16))
        return ch if ch in _UNRESERVED else "%" + m.group(1).upper()

    return _PCT_RE.sub(repl, path)


def _remove_dot_segments(path: str) -> str:
    # RFC 3986 section 5.2.4
    out: list[str] = []
    inp = path
    while inp:
        if inp.startswith("../"):
            inp = inp[3:]
        elif inp.startswith("./"):
            inp = inp[2:]
        elif inp.startswith("/./"):
            inp = inp[2:]
        elif inp == "/.":
            inp = "/"
        elif inp.startswith("/../"):
            inp = inp[3:]
            if out:
                out.pop()
        elif inp == "/..":
            inp = "/"
            if out:
                out.pop()
        elif inp in (".", ".."):
            inp = ""
        else:
            start = 1 if inp.startswith("/") else 0
            i = inp.find("/", start)
            if i == -1:
                i = len(inp)
            out.append(inp[:i])
            inp = inp[i:]
    return "".join(out)


def _split_authority(rest: str) -> tuple[str, str]:
    end = len(rest)
    for ch in "/?#":
        i = rest.find(ch)
        if i != -1 and i < end:
            end = i
    return rest[:end], rest[end:]


def canonicalize(uri: str) -> CanonicalUri:
    """Canonicalize an absolute or scheme-relative URI.

    Lowercases scheme and host, elides default ports, drops the fragment,
    decodes percent-escapes of unreserved characters, resolves dot segments
    and maps an empty path to ``/``.  Path case and the query are preserved.
    """
    if not isinstance(uri, str):
        raise UriError(f"not a string: {uri!r}")
    s = uri.strip()
    scheme = "http"
    m = _SCHEME_RE.match(s)
    if m and s[m.end():m.end() + 2] == "//":
        scheme = m.group(1).lower()
        s = s[m.end() + 2:]
    elif m and m.group(1).lower() in DEFAULT_PORTS:
        # Collapsed slashes ("http:/example.com") are common in replay paths.
        scheme = m.group(1).lower()
        s = s[m.end():].lstrip("/")
    elif s.startswith("//"):
        s = s[2:]

    authority, tail = _split_authority(s)
    tail = tail.split("#", 1)[0]
    if "@" in authority:
        authority = authority.rsplit("@", 1)[1]

    port: Optional[int] = None
    if authority.startswith("["):
        close = authority.find("]")
        if close == -1:
            raise UriError(f"unterminated IP literal in {uri!r}")
        host, port_text = authority[: close + 1], authority[close + 1:]
        if port_text and not port_text.startswith(":"):
            raise UriError(f"junk after IP literal in {uri!r}")
        port_text = port_text[1:]
    else:
        host, _, port_text = authority.partition(":")
    if port_text:
        if not port_text.isdigit() or not port_text.isascii():
            raise UriError(f"bad port {port_text!r} in {uri!r}")
        port = int(port_text)
    host = host.lower().rstrip(".")
    if not host or not (_HOST_RE.fullmatch(host) or _IPV6_RE.fullmatch(host)):
        raise UriError(f"no parseable host in {uri!r}")
    if port is not None and DEFAULT_PORTS.get(scheme) == port:
        port = None

    path, _, query = tail.partition("?")
    path = _remove_dot_segments(_normalize_escapes(path)) or "/"
    if not path.startswith("/"):
        path = "/" + path
    return CanonicalUri(scheme, host, port, path, query)


def _reverse_host(host: str, port: Optional[int]) -> str:
    if _IPV4_RE.fullmatch(host) or host.startswith("["):
        labels = host
    else:
        labels = ",".join(reversed(host.split(".")))
    return labels if port is None else f"{labels}:{port}"


def _key_path(path: str, query: str) -> str:
    text = path + ("?" + query if query else "")
    # '*' is reserved for the trailing wildcard; whitespace separates fields
    # in profile files.
    text = text.lower().replace("*", "%2a")
    if _WS_RE.search(text):
        text = _WS_RE.sub(lambda m: quote(m.group(0)).lower(), text)
    return text


def to_surt(uri: CanonicalUri) -> SurtKey:
    """Exact SURT key for a canonical URI; scheme dropped, path and query lowercased."""
    return SurtKey(_reverse_host(uri.host, uri.port), _key_path(uri.path, uri.query))


def surt_string(uri: str) -> str:
    """Shorthand for ``str(to_surt(canonicalize(uri)))``."""
    return str(to_surt(canonicalize(uri)))


def parse_surt(text: str) -> SurtKey:
    """Parse a serialized key, validating the grammar; raises UriError."""
    if not text or text != text.lower() or any(c.isspace() for c in text):
        raise UriError(f"malformed key {text!r}")
    if text.endswith(",*") and ")" not in text:
        host = text[:-2]
        if not _KEY_HOST_RE.fullmatch(host):
            raise UriError(f"malformed host in key {text!r}")
        return SurtKey(host, None, True)
    host, sep, path = text.partition(")")
    if not sep or not _KEY_HOST_RE.fullmatch(host) or not path.startswith("/"):
        raise UriError(f"malformed key {text!r}")
    wildcard = path.endswith("*")
    if wildcard:
        path = path[:-1]
        if not path.endswith("/") or "?" in path:
            raise UriError(f"wildcard must follow a '/' path segment in {text!r}")
    if "*" in path:
        raise UriError(f"'*' may only end a key: {text!r}")
    return SurtKey(host, path, wildcard)


def has_upper_host(uri: str) -> bool:
    """True iff the hostname portion of the raw URI contains A-Z."""
    s = uri.strip()
    m = _SCHEME_RE.match(s)
    if m and s[m.end():m.end() + 2] == "//":
        s = s[m.end() + 2:]
    elif m and m.group(1).lower() in DEFAULT_PORTS:
        s = s[m.end():].lstrip("/")
    elif s.startswith("//"):
        s = s[2:]
    authority, _ = _split_authority(s)
    host = authority.rsplit("@", 1)[-1].partition(":")[0]
    if not _HOST_RE.fullmatch(host):
        return False
    return any("A" <= c <= "Z" for c in host)


def key_matches(pattern: SurtKey, key: SurtKey) -> bool:
    """Whether ``pattern`` covers the exact ``key``."""
    if not pattern.wildcard:
        return pattern == key
    if pattern.path is None:
        return key.host == pattern.host or key.host.startswith(pattern.host + ",")
    if key.host != pattern.host or key.path is None:
        return False
    prefix = pattern.path
    p = key.path
    if p.startswith(prefix):
        return True
    # ``/a/*`` also covers ``/a`` and ``/a?q``; ``//*`` does not cover ``/``.
    stem = prefix[:-1]
    return not stem.endswith("/") and (p == stem or p.startswith(stem + "?"))


def key_prefixes(key: SurtKey) -> list[SurtKey]:
    """Ancestor keys of an exact key, most specific first.

    Path segments are stripped right to left (a query counts as the last
    segment), then host labels.
    """
    if key.wildcard:
        raise ValueError(f"key_prefixes needs an exact key, got {key}")
    out = [key]
    seen = {str(key)}

    def add(k: SurtKey) -> None:
        s = str(k)
        if s not in seen:
            seen.add(s)
            out.append(k)

    base, qmark, _ = key.path.partition("?")
    if qmark:
        add(SurtKey(key.host, base if base.endswith("/") else base + "/", True))
    i = len(base)
    while True:
        i = base.rfind("/", 0, i)
        if i == -1:
            break
        add(SurtKey(key.host, base[: i + 1], True))
    labels = key.host.split(",")
    for n in range(len(labels) - 1, 0, -1):
        add(SurtKey(",".join(labels[:n]), None, True))
    return out
