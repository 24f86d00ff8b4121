"""Command-line front end.

Stages talk through the normalized TSV record format, so they compose::

    archvoids parse logs/ | archvoids amend | archvoids profile --out voids.profile
    archvoids route --voids voids.profile < uris.txt

Data goes to stdout, diagnostics to stderr.  Exit status is 0 on success,
1 on bad input data and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterator, Optional, TextIO

from . import __version__
from .config import ConfigError, PipelineConfig, dump_config, load_config
from .evaluator import access_reports, evaluate, threshold_sweep
from .fixtures import default_spec, generate, load_spec
from .history import (agent_report, build_histories, exclude_upper_hosts, filter_redirects,
                      fluctuation_report)
from .logs import (Kind, LogStream, MementoRequest, ParseError, classify_request,
                   entry_from_tsv, entry_to_tsv, read_log_file)
from .pipeline import PipelineError, run_pipeline, soft404_model
from .profiler import (ProfileFormatError, SummarizationPolicy, bucket_histogram, dumps,
                       read_profile, select_void_candidates, success_keys, summarize_keys)
from .router import IndexBuildError, build_index, decision_tsv
from .soft404 import FitError, amend, fit_model, load_samples
from .urinorm import UriError, surt_string

log = logging.getLogger("archvoids")


class InputError(Exception):
    """Bad input data; reported on stderr with exit status 1."""


# -- helpers --------------------------------------------------------------------

def _open_in(path: Optional[str]):
    if path is None or path == "-":
        return nullcontext(sys.stdin)
    return open(path, encoding="utf-8", errors="surrogateescape", newline="\n")


def _records(src: TextIO, cfg: PipelineConfig) -> Iterator[tuple[MementoRequest, Optional[bool]]]:
    endpoints = cfg.endpoints
    for lineno, line in enumerate(src, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            entry, amended = entry_from_tsv(line)
        except ValueError as exc:
            raise InputError(f"record {lineno}: {exc}") from None
        yield classify_request(entry, endpoints)._replace(amended=bool(amended)), amended


def _requests(path: Optional[str], cfg: PipelineConfig) -> list[MementoRequest]:
    with _open_in(path) as src:
        reqs = [r for r, _ in _records(src, cfg)]
    if cfg.exclusions_uppercase_host:
        keep = set(map(id, exclude_upper_hosts(r for r in reqs if r.kind is not Kind.NON_MEMENTO)))
        reqs = [r for r in reqs if r.kind is Kind.NON_MEMENTO or id(r) in keep]
    return reqs


def _histories(reqs, cfg: PipelineConfig):
    mementos = (r for r in reqs if r.kind is not Kind.NON_MEMENTO)
    return build_histories(filter_redirects(mementos), cfg.profiling_canonical)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def _day(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD: {text!r}")


def _write_tsv(rows, out: TextIO = None) -> None:
    out = out or sys.stdout
    for row in rows:
        out.write("\t".join(map(str, row)) + "\n")


# -- subcommands ----------------------------------------------------------------

def cmd_parse(args, cfg: PipelineConfig) -> int:
    out = sys.stdout
    errors = 0
    start = args.start or cfg.exclusions_start
    end = args.end or cfg.exclusions_end
    for p in map(Path, args.paths):
        if p.is_dir():
            stream = LogStream(p, start, end, cfg.jobs)
            for entry in stream:
                out.write(entry_to_tsv(entry) + "\n")
            errors += stream.parse_errors
            continue
        for item in read_log_file(p):
            if isinstance(item, ParseError):
                errors += 1
                if args.verbose:
                    print(f"{p}:{item.lineno}: {item}", file=sys.stderr)
            else:
                d = item.utc.date()
                if (start and d < start) or (end and d > end):
                    continue
                out.write(entry_to_tsv(item) + "\n")
    if errors:
        print(f"skipped {errors} malformed lines", file=sys.stderr)
    return 0


def cmd_canon(args, cfg) -> int:
    failed = 0
    for lineno, line in enumerate(sys.stdin, 1):
        uri = line.strip()
        if not uri:
            continue
        try:
            sys.stdout.write(surt_string(uri) + "\n")
        except UriError as exc:
            failed += 1
            print(f"line {lineno}: {exc}", file=sys.stderr)
    return 1 if failed else 0


def cmd_amend(args, cfg: PipelineConfig) -> int:
    if args.samples:
        cfg.soft404_samples = args.samples
    if args.k is not None:
        cfg.soft404_k, cfg.soft404_samples = args.k, None
    if args.c is not None:
        cfg.soft404_c, cfg.soft404_samples = args.c, None
    if args.valid_until:
        cfg.soft404_valid_until = args.valid_until
    model = soft404_model(cfg)
    with _open_in(args.input) as src:
        stream, report = amend((r for r, _ in _records(src, cfg)), model)
        for r in stream:
            sys.stdout.write(entry_to_tsv(r.entry, r.amended) + "\n")
    doc = json.dumps(report.to_dict())
    if args.report:
        Path(args.report).write_text(doc + "\n", encoding="utf-8")
    else:
        print(doc, file=sys.stderr)
    return 0


def _policy(args, cfg: PipelineConfig):
    if args.exact:
        return SummarizationPolicy()
    if args.host_depth is not None or args.path_depth is not None:
        return SummarizationPolicy(args.host_depth, args.path_depth)
    return cfg.policy


def cmd_profile(args, cfg: PipelineConfig) -> int:
    reqs = _requests(args.input, cfg)
    histories = _histories(reqs, cfg)
    threshold = args.min_count if args.min_count is not None else cfg.profiling_min_count
    protected = success_keys(histories) if cfg.profiling_conservative else ()
    meta = {"archive": args.archive or cfg.profiling_archive, "threshold": threshold}
    if reqs:
        stamps = [r.entry.utc for r in reqs]
        meta["generated"] = max(stamps).isoformat()
        meta["range"] = f"{min(stamps).date().isoformat()}/{max(stamps).date().isoformat()}"
    profile = summarize_keys(select_void_candidates(histories, threshold), _policy(args, cfg),
                             protected, **meta)
    text = dumps(profile)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _index(args, cfg: PipelineConfig):
    holdings = read_profile(args.holdings) if args.holdings else None
    voids = read_profile(args.voids) if args.voids else None
    prefer = args.prefer_voids or cfg.routing_prefer_voids
    return build_index(holdings, voids, prefer, args.default or cfg.routing_default)


def cmd_route(args, cfg: PipelineConfig) -> int:
    index = _index(args, cfg)
    out = sys.stdout
    for line in sys.stdin:
        uri = line.strip()
        if uri:
            out.write(decision_tsv(uri, index.match(uri)) + "\n")
    return 0


def cmd_eval(args, cfg: PipelineConfig) -> int:
    reqs = _requests(args.replay, cfg)
    mementos = [r for r in reqs if r.kind is not Kind.NON_MEMENTO]
    agent = args.agent or cfg.eval_agent
    if agent:
        mementos = [r for r in mementos if agent in (r.entry.user_agent or "")]
    replay = [(r.urir, r.entry.status) for r in mementos]
    doc: dict = {}
    if args.voids:
        doc["evaluation"] = evaluate(_index(args, cfg), replay).to_dict()
    if args.sweep:
        holdings = read_profile(args.holdings) if args.holdings else None
        sweep = threshold_sweep(_histories(reqs, cfg), replay, args.sweep, cfg.policy,
                                cfg.profiling_conservative, holdings)
        doc["sweep"] = [r.to_dict() for r in sweep]
    if not doc:
        raise InputError("nothing to evaluate: give --voids and/or --sweep")
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_stats(args, cfg: PipelineConfig) -> int:
    reqs = _requests(args.input, cfg)
    table = args.table
    if table == "fluctuations":
        _write_tsv(fluctuation_report(_histories(reqs, cfg)).items())
    elif table == "agent":
        if not args.urir:
            raise InputError("stats agent needs --urir")
        _write_tsv((ua or "-", status, n)
                   for ua, counts in agent_report(reqs, args.urir).items()
                   for status, n in counts.items())
    elif table == "buckets":
        cands = select_void_candidates(_histories(reqs, cfg), 1)
        _write_tsv(bucket_histogram(cands).items())
    else:
        rep = access_reports(reqs, args.min_count if args.min_count is not None
                             else cfg.reports_top_min_count, cfg.reports_agents)
        if table == "daily":
            _write_tsv(rep.daily_counts.items())
        elif table == "tld":
            _write_tsv((y, t, n) for y, tlds in rep.tld_by_year.items() for t, n in tlds.items())
        elif table == "top":
            _write_tsv(rep.top_uris.items())
        elif table == "timemap":
            _write_tsv(rep.timemap_status_distribution.items())
        elif table == "sources":
            _write_tsv(rep.source_totals.items())
        elif table == "monthly":
            _write_tsv((m, s, n) for m, srcs in rep.source_monthly.items() for s, n in srcs.items())
    return 0


def cmd_fit(args, cfg) -> int:
    model = fit_model(load_samples(args.samples))
    print(json.dumps({"k": model.k, "c": model.c}))
    return 0


def cmd_fixtures(args, cfg) -> int:
    spec = load_spec(args.spec) if args.spec else default_spec()
    if args.seed is not None:
        spec.seed = args.seed
    corpus = generate(spec, args.out)
    print(f"wrote {corpus.lines} lines in {len(corpus.files)} files to {corpus.log_dir}",
          file=sys.stderr)
    return 0


def cmd_run(args, cfg: PipelineConfig) -> int:
    result = run_pipeline(cfg, args.logs, args.out, args.holdings)
    for name, secs in result.timings.items():
        print(f"{name}\t{secs:.3f}s", file=sys.stderr)
    print(result.profile_path)
    print(result.reports_path)
    return 0


def cmd_config(args, cfg) -> int:
    sys.stdout.write(dump_config(cfg))
    return 0


# -- argument parsing -------------------------------------------------------------

def _valid_until(text: str) -> datetime:
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an ISO date: {text!r}")
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key = value config file")
    common.add_argument("--jobs", type=int, metavar="N", help="parallel log-file parsers")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="archvoids", parents=[common],
                                description="Archival voids profiles from access logs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("parse", cmd_parse, "parse access logs into normalized TSV records")
    sp.add_argument("paths", nargs="+", help="log files or directories")
    sp.add_argument("--start", type=_day)
    sp.add_argument("--end", type=_day)

    add("canon", cmd_canon, "map URIs on stdin to SURT keys")

    sp = add("amend", cmd_amend, "rewrite Soft-404 TimeMap records to 404")
    sp.add_argument("input", nargs="?", help="TSV records (default stdin)")
    sp.add_argument("--samples", help="fit k and c from '<urir or length> <bytes>' lines")
    sp.add_argument("--k", type=int)
    sp.add_argument("--c", type=int)
    sp.add_argument("--valid-until", type=_valid_until)
    sp.add_argument("--report", metavar="FILE", help="write the JSON report here")

    sp = add("fit", cmd_fit, "fit the Soft-404 size template from samples")
    sp.add_argument("samples")

    sp = add("profile", cmd_profile, "build a voids profile from amended TSV records")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--min-count", type=int)
    sp.add_argument("--host-depth", type=int)
    sp.add_argument("--path-depth", type=int)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--archive")
    sp.add_argument("--out", metavar="FILE")

    for name, func, help in (("route", cmd_route, "route URIs on stdin"),
                             ("eval", cmd_eval, "replay amended records against a profile")):
        sp = add(name, func, help)
        sp.add_argument("--holdings", metavar="FILE")
        sp.add_argument("--voids", metavar="FILE")
        sp.add_argument("--prefer-voids", action="store_true")
        sp.add_argument("--default", choices=("route", "no-route"))
        if name == "eval":
            sp.add_argument("--replay", metavar="FILE", help="amended TSV (default stdin)")
            sp.add_argument("--sweep", type=_ints, metavar="T1,T2,...")
            sp.add_argument("--agent", help="replay only user-agents containing this")

    sp = add("stats", cmd_stats, "pivot tables as TSV")
    sp.add_argument("table", choices=("fluctuations", "agent", "buckets", "daily", "tld", "top",
                                      "timemap", "sources", "monthly"))
    sp.add_argument("input", nargs="?")
    sp.add_argument("--urir")
    sp.add_argument("--min-count", type=int)

    fx = sub.add_parser("fixtures", help="synthetic labeled corpora")
    fxs = fx.add_subparsers(dest="fixtures_command", required=True, metavar="ACTION")
    sp = fxs.add_parser("generate", parents=[common], help="write logs/ and labels.tsv")
    sp.set_defaults(func=cmd_fixtures)
    sp.add_argument("--spec", metavar="FILE")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True, metavar="DIR")

    sp = add("run", cmd_run, "full pipeline: logs in, profile and reports.json out")
    sp.add_argument("logs", help="directory of daily log files")
    sp.add_argument("--out", required=True, metavar="DIR")
    sp.add_argument("--holdings", metavar="FILE")

    add("config", cmd_config, "print the effective configuration")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.jobs is not None:
            cfg.jobs = args.jobs
        return args.func(args, cfg)
    except (ConfigError, OSError, InputError, FitError, ProfileFormatError, IndexBuildError,
            PipelineError, ValueError) as exc:
        print(f"archvoids {args.command}: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
