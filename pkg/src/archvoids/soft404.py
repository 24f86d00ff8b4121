"""Soft-404 TimeMap repair.

Before its replay upgrade, an archive may answer TimeMap requests for
resources it does not hold with ``200 OK`` and a fixed template that echoes
the URI-R ``k`` times.  Such responses have a byte size that is an exact
linear function of the URI-R length::

    bytes = k * len(urir) + c

Given a fitted model, :func:`amend` rewrites those entries to 404.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .logs import Kind, MementoRequest

__all__ = [
    "FitError",
    "Soft404Model",
    "AmendReport",
    "DEFAULT_VALID_UNTIL",
    "fit_model",
    "predict_bytes",
    "urir_length",
    "amend",
    "amend_one",
    "load_samples",
]

DEFAULT_VALID_UNTIL = datetime(2019, 11, 18, tzinfo=timezone.utc)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class Soft404Model:
    k: int
    c: int
    valid_until: datetime = DEFAULT_VALID_UNTIL
    applicable_kind: Kind = Kind.URI_T

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if self.valid_until.tzinfo is None:
            raise ValueError("valid_until must carry a UTC offset")


@dataclass
class AmendReport:
    amended: int = 0
    unchanged: int = 0
    k: int = 0
    c: int = 0

    def to_dict(self) -> dict:
        return {"amended": self.amended, "unchanged": self.unchanged,
                "fit": {"k": self.k, "c": self.c}}


def urir_length(urir: str) -> int:
    """Length of the URI-R as the server echoed it, in bytes."""
    if urir.isascii():
        return len(urir)
    return len(urir.encode("utf-8", "surrogateescape"))


def predict_bytes(model: Soft404Model, length: int) -> int:
    if length < 0:
        raise ValueError("length must be non-negative")
    return model.k * length + model.c


def fit_model(samples: Sequence[tuple[int, int]],
              valid_until: datetime = DEFAULT_VALID_UNTIL) -> Soft404Model:
    """Exact integer fit of ``bytes = k*length + c`` through every sample.

    Samples are ``(urir_length, bytes)`` pairs from URI-Rs known to be
    absent.  Any sample off the line raises FitError: the response is then
    not a template, and a least-squares compromise would amend real pages.
    """
    samples = [(int(n), int(b)) for n, b in samples]
    if len(samples) < 2:
        raise FitError("need at least two samples")
    lengths = sorted({n for n, _ in samples})
    if len(lengths) < 2:
        raise FitError("need at least two distinct URI-R lengths")
    (n1, b1) = min(samples)
    (n2, b2) = max(samples)
    k, rem = divmod(b2 - b1, n2 - n1)
    if rem or k < 1:
        raise FitError(f"no positive integer slope through {samples}")
    c = b1 - k * n1
    if c < 0:
        raise FitError(f"negative template size {c}")
    bad = [(n, b) for n, b in samples if k * n + c != b]
    if bad:
        raise FitError(f"samples {bad} off the line bytes = {k}*len + {c}")
    return Soft404Model(k, c, valid_until)


def amend_one(req: MementoRequest, model: Soft404Model) -> MementoRequest:
    e = req.entry
    if (req.kind is model.applicable_kind and e.status == 200 and e.bytes is not None
            and e.timestamp < model.valid_until
            and e.bytes == model.k * urir_length(req.urir) + model.c):
        return req._replace(entry=e._replace(status=404), amended=True)
    return req


def amend(requests: Iterable[MementoRequest], model: Soft404Model
          ) -> tuple[Iterator[MementoRequest], AmendReport]:
    """Lazily amend a request stream.

    Returns the amended stream and a report whose counts are complete once
    the stream is exhausted.
    """
    report = AmendReport(k=model.k, c=model.c)

    def run() -> Iterator[MementoRequest]:
        for req in requests:
            out = amend_one(req, model)
            if out is not req:
                report.amended += 1
            else:
                report.unchanged += 1
            yield out

    return run(), report


def load_samples(path: Union[str, Path]) -> list[tuple[int, int]]:
    """Read fit samples: ``<urir or length><TAB or space><bytes>`` per line."""
    out = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, tail = line.rpartition(" ") if "\t" not in line else line.rpartition("\t")
        head = head.strip()
        try:
            size = int(tail)
            length = int(head) if head.isdigit() else urir_length(head)
        except ValueError:
            raise FitError(f"{path}:{lineno}: malformed sample {line!r}") from None
        out.append((length, size))
    return out
