"""Command-line entry points.

Subcommands: serve, run-sim, rescore, analyze, print-config. Exit code 0
on success, 1 on usage errors, 2 on data errors (unreadable logs, bad
configs, failed simulations). Defaults for --config, --listen, --seed,
and --out may come from POLYTRAIN_-prefixed environment variables; an
explicit flag always wins.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

from .analysis import analyze_log, correlate_subjects
from .config import ConfigError, ConfigDocument, default_document, load_config
from .logio import (
    LogValidationError,
    MalformedLogError,
    read_log,
    rescore_records,
    write_log,
    write_report_csv,
    write_summary,
)
from .session import SessionConfig
from .subject import run_batch

ENV_PREFIX = "POLYTRAIN_"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="polytrain",
        description="Bimanual polyrhythm training engine: live service, simulation, and analysis.",
        epilog=f"Environment defaults: {ENV_PREFIX}CONFIG, {ENV_PREFIX}LISTEN, {ENV_PREFIX}SEED, {ENV_PREFIX}OUT.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    serve = sub.add_parser("serve", help="run the live session service", description="Run the live session service on a localhost socket.")
    serve.add_argument("--config", default=_env("CONFIG"), help="config JSON path")
    serve.add_argument("--listen", default=_env("LISTEN") or "127.0.0.1:4321", help="host:port to listen on")
    serve.add_argument("--out", default=_env("OUT"), help="directory for session logs")
    serve.add_argument("--ui", default=None, help="directory with the web client bundle to serve over HTTP")

    runsim = sub.add_parser("run-sim", help="run simulated sessions headlessly", description="Run virtual-subject sessions and write their logs.")
    runsim.add_argument("--config", default=_env("CONFIG"), help="config JSON path (session + subject sections)")
    runsim.add_argument("--batch", default=None, help="batch JSON path (session + subjects list); overrides --config")
    runsim.add_argument("--seed", type=int, default=None, help="base seed; entry i runs with seed+i")
    runsim.add_argument("--out", default=_env("OUT") or ".", help="output directory for logs")

    rescore = sub.add_parser("rescore", help="replay a log and recompute its summary", description="Replay a session log, validate it, and print the recomputed summary.")
    rescore.add_argument("log", help="session log (JSONL)")
    rescore.add_argument("--out", default=None, help="write the summary JSON here instead of stdout")

    analyze = sub.add_parser("analyze", help="statistics over session logs", description="Segment statistics, ANOVA, post-hoc comparisons, and cross-subject correlations.")
    analyze.add_argument("logs", nargs="+", help="session logs (JSONL)")
    analyze.add_argument("--out", default=_env("OUT"), help="write the report JSON here instead of stdout")
    analyze.add_argument("--csv", default=None, help="also write a flat per-segment CSV here")

    sub.add_parser("print-config", help="print the full default configuration document", description="Print the full default configuration document.")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        handler = {
            "serve": _cmd_serve,
            "run-sim": _cmd_run_sim,
            "rescore": _cmd_rescore,
            "analyze": _cmd_analyze,
            "print-config": _cmd_print_config,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ConfigError, MalformedLogError, LogValidationError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _session_config(args) -> tuple[SessionConfig, ConfigDocument | None]:
    if getattr(args, "config", None):
        document = load_config(args.config)
        return document.session, document
    return SessionConfig(), None


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise UsageError(f"--listen must be host:port, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise UsageError(f"--listen port is not an integer: {port!r}") from None


def _cmd_serve(args) -> int:
    from .server import serve

    config, _ = _session_config(args)
    host, port = _parse_listen(args.listen)
    try:
        serve(config, host=host, port=port, out_dir=args.out, ui_dir=args.ui)
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_run_sim(args) -> int:
    if args.batch:
        document = load_config(args.batch)
    elif args.config:
        document = load_config(args.config)
    else:
        document = None
    entries = document.batch_entries() if document else ConfigDocument(SessionConfig()).batch_entries()
    if args.seed is not None:
        entries = [
            (config, dataclasses.replace(params, seed=args.seed + i), label)
            for i, (config, params, label) in enumerate(entries)
        ]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for run in run_batch(entries):
        if run.ok:
            path = write_log(run.records, out_dir / f"{run.subject}.jsonl")
            print(path)
        else:
            failures += 1
            print(f"error: {run.subject}: {run.error}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_rescore(args) -> int:
    summary = rescore_records(read_log(args.log))
    if args.out:
        write_summary(summary, args.out)
        print(args.out)
    else:
        json.dump(_json_safe(summary), sys.stdout, indent=2)
        print()
    return 0


def _cmd_analyze(args) -> int:
    entries = []
    series = {}
    for path in args.logs:
        records = read_log(path)
        name = Path(path).stem
        entry = {"name": name}
        entry.update(analyze_log(records))
        entries.append(entry)
        totals = [r["scores"]["total"] for r in records if "mode" in r]
        if len(totals) >= 2:
            series[name] = totals
    report = {
        "logs": entries,
        "correlations": correlate_subjects(series) if len(series) >= 2 else [],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(_json_safe(report), fh, indent=2)
            fh.write("\n")
        print(args.out)
    else:
        json.dump(_json_safe(report), sys.stdout, indent=2)
        print()
    if args.csv:
        write_report_csv(report, args.csv)
    return 0


def _cmd_print_config(args) -> int:
    json.dump(default_document(), sys.stdout, indent=2)
    print()
    return 0


def _json_safe(obj):
    """Replace non-finite floats so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


if __name__ == "__main__":
    sys.exit(main())
