"""Archival voids: find what a web archive does not hold, from its access logs.

The toolkit parses archive access logs, repairs Soft-404 TimeMap responses,
builds per-URI status histories, writes voids profiles keyed by SURT, routes
lookups against holdings and voids profiles, and measures how many
aggregator requests a profile would have saved.
"""

__version__ = "0.1.0"

from .logs import (EndpointConfig, Kind, LogEntry, LogStream, MementoRequest, ParseError,
                   classify_request, format_log_line, parse_log_line)
from .urinorm import SurtKey, UriError, canonicalize, surt_string, to_surt
from .soft404 import AmendReport, FitError, Soft404Model, amend, fit_model, predict_bytes
from .history import StatusHistory, build_histories, filter_redirects, fluctuation_report
from .profiler import (SummarizationPolicy, VoidsProfile, read_profile,
                       select_void_candidates, summarize_keys, write_profile)
from .router import NO_ROUTE, ROUTE, ProfileIndex, RoutingDecision, build_index
from .evaluator import EvalReport, access_reports, evaluate, threshold_sweep
from .config import PipelineConfig, load_config
from .pipeline import PipelineError, run_pipeline

__all__ = [
    "EndpointConfig", "Kind", "LogEntry", "LogStream", "MementoRequest", "ParseError",
    "classify_request", "format_log_line", "parse_log_line",
    "SurtKey", "UriError", "canonicalize", "surt_string", "to_surt",
    "AmendReport", "FitError", "Soft404Model", "amend", "fit_model", "predict_bytes",
    "StatusHistory", "build_histories", "filter_redirects", "fluctuation_report",
    "SummarizationPolicy", "VoidsProfile", "read_profile", "select_void_candidates",
    "summarize_keys", "write_profile",
    "NO_ROUTE", "ROUTE", "ProfileIndex", "RoutingDecision", "build_index",
    "EvalReport", "access_reports", "evaluate", "threshold_sweep",
    "PipelineConfig", "load_config", "PipelineError", "run_pipeline",
]
