"""Pipeline configuration: a flat ``key = value`` text file.

Every key is optional; missing keys take the defaults below.  Lists are
comma-separated.  Example::

    # arquivo.pt, 2013-2019
    soft404.k = 3
    soft404.c = 150
    profiling.min_count = 100
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional, Union

from .logs import EndpointConfig
from .profiler import EXACT_POLICY, SummarizationPolicy
from .soft404 import DEFAULT_VALID_UNTIL

__all__ = ["PipelineConfig", "ConfigError", "load_config", "parse_config", "dump_config"]

_SECTION = "pipeline"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    endpoints_memento: tuple[str, ...] = EndpointConfig.memento
    endpoints_timemap: tuple[str, ...] = EndpointConfig.timemap
    endpoints_timegate: tuple[str, ...] = EndpointConfig.timegate
    # Either a samples file to fit, or k and c directly.
    soft404_samples: Optional[str] = None
    soft404_k: Optional[int] = 3
    soft404_c: Optional[int] = 150
    soft404_valid_until: datetime = DEFAULT_VALID_UNTIL
    exclusions_uppercase_host: bool = False
    exclusions_start: Optional[date] = None
    exclusions_end: Optional[date] = None
    profiling_min_count: int = 100
    profiling_host_depth: Optional[int] = None
    profiling_path_depth: Optional[int] = None
    profiling_exact: bool = True
    profiling_conservative: bool = True
    profiling_canonical: bool = False
    profiling_archive: str = "archive"
    routing_prefer_voids: bool = False
    routing_default: str = "route"
    reports_top_min_count: int = 10000
    reports_agents: tuple[str, ...] = ("MemGator", "TimeTravel", "UptimeRobot",
                                       "Googlebot", "YandexBot", "bingbot", "curl",
                                       "python-requests")
    eval_sweep: tuple[int, ...] = (1, 10, 100, 1000)
    eval_agent: Optional[str] = None
    jobs: int = 1

    @property
    def policy(self) -> SummarizationPolicy:
        if self.profiling_exact:
            return EXACT_POLICY
        return SummarizationPolicy(self.profiling_host_depth, self.profiling_path_depth)

    @property
    def endpoints(self) -> EndpointConfig:
        return EndpointConfig(self.endpoints_memento, self.endpoints_timemap,
                              self.endpoints_timegate)


def _key(name: str) -> str:
    head, _, tail = name.partition("_")
    return f"{head}.{tail}" if tail and head in {
        "endpoints", "soft404", "exclusions", "profiling", "routing", "reports", "eval"} else name


_FIELDS = {_key(f.name): f for f in fields(PipelineConfig)}


def _convert(name: str, default, raw: str):
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        if default and isinstance(default[0], int):
            try:
                return tuple(int(x) for x in items)
            except ValueError:
                raise ConfigError(f"{name}: expected integers, got {raw!r}") from None
        return tuple(items)
    if raw == "":
        return None
    if name.endswith("valid_until"):
        try:
            dt = datetime.fromisoformat(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an ISO date, got {raw!r}") from None
        return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)
    if name.startswith("exclusions.") and name != "exclusions.uppercase_host":
        try:
            return date.fromisoformat(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected YYYY-MM-DD, got {raw!r}") from None
    if isinstance(default, int) or name in ("soft404.k", "soft404.c", "profiling.host_depth",
                                            "profiling.path_depth"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    return raw


def parse_config(text: str) -> PipelineConfig:
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = PipelineConfig()
    for name, raw in parser.items(_SECTION):
        f = _FIELDS.get(name)
        if f is None:
            raise ConfigError(f"unknown config key {name!r}")
        setattr(cfg, f.name, _convert(name, getattr(PipelineConfig(), f.name), raw))
    if cfg.routing_default not in ("route", "no-route"):
        raise ConfigError("routing.default must be 'route' or 'no-route'")
    if cfg.soft404_samples is None and (cfg.soft404_k is None or cfg.soft404_c is None):
        raise ConfigError("set soft404.samples, or both soft404.k and soft404.c")
    return cfg


def load_config(path: Union[str, Path, None]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return parse_config(Path(path).read_text("utf-8"))


def dump_config(cfg: PipelineConfig) -> str:
    """Effective configuration, one ``key = value`` per line."""
    lines = []
    for name, f in _FIELDS.items():
        value = getattr(cfg, f.name)
        if value is None:
            text = ""
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ", ".join(map(str, value))
        elif isinstance(value, (date, datetime)):
            text = value.isoformat()
        else:
            text = str(value)
        lines.append(f"{name} = {text}".rstrip())
    return "\n".join(lines) + "\n"
