"""Session log persistence and replay.

Logs are JSON-Lines: a header object first, then one object per frame
interleaved with event objects, append-only and strictly time-ordered.
Serialization is canonical (compact separators, insertion order), so
parse -> serialize round-trips byte-identically.

`rescore` replays the raw kinematics of a log through a fresh engine and
checks every logged mode, force, score, and event against the replay;
any drift beyond tolerance means the log was edited or produced by a
different engine, and is reported with its line number.
"""

from __future__ import annotations

import json
from pathlib import Path

from .session import SensedInput, HandSample, SessionEngine, config_from_dict
from .kinematics import PlanarPoint

REPLAY_TOLERANCE = 1e-9


class MalformedLogError(ValueError):
    """Log file cannot be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class LogValidationError(ValueError):
    """Replayed values disagree with the logged ones."""


def dumps_record(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


def write_log(records: list[dict], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_record(record))
            fh.write("\n")
    return path


def read_log(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedLogError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise MalformedLogError("record is not an object", line=lineno)
            records.append(record)
    if not records:
        raise MalformedLogError("empty log", line=1)
    if "header" not in records[0]:
        raise MalformedLogError("first record must be the header", line=1)
    return records


def write_summary(summary: dict, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def _close(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= REPLAY_TOLERANCE
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y) for x, y in zip(a, b))
    return a == b


def _first_mismatch(a: dict, b: dict, prefix: str = "") -> str | None:
    if isinstance(a, dict) and isinstance(b, dict):
        for key in sorted(set(a) | set(b)):
            if key not in a or key not in b:
                return f"{prefix}{key} (missing on one side)"
            sub = _first_mismatch(a[key], b[key], f"{prefix}{key}.")
            if sub:
                return sub
        return None
    if not _close(a, b):
        return f"{prefix.rstrip('.')}: logged {a!r} vs replayed {b!r}"
    return None


def rescore_records(records: list[dict]) -> dict:
    """Replay a log's kinematics through a fresh engine; return its summary.

    Raises LogValidationError naming the first disagreeing record if the
    logged modes, forces, scores, or events differ from the replay.
    """
    header = records[0].get("header")
    if header is None:
        raise MalformedLogError("first record must be the header", line=1)
    try:
        config = config_from_dict(header["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedLogError(f"bad header config: {exc}", line=1) from exc
    engine = SessionEngine(config, subject=header.get("subject", "anon"), seeds=header.get("seeds"))

    end_reason = None
    for record in records:
        if "event" in record and record["event"] == "SessionEnd":
            end_reason = record.get("reason", "stopped")

    for lineno, record in enumerate(records[1:], start=2):
        if "mode" not in record:
            continue
        try:
            nd, dom = record["nd"], record["dom"]
            sensed = SensedInput(
                nd=HandSample(PlanarPoint(nd["y"], nd["z"]), nd["vy"], nd["vz"]),
                dom=HandSample(PlanarPoint(dom["y"], dom["z"]), dom["vy"], dom["vz"]),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedLogError(f"frame record missing field: {exc}", line=lineno) from exc
        if engine.ended:
            raise LogValidationError(f"line {lineno}: frames continue past session end")
        engine.step(sensed)

    if not engine.ended:
        if end_reason is None:
            raise LogValidationError("log has no SessionEnd event")
        engine.finish(end_reason)

    replayed = engine.records
    if len(replayed) != len(records):
        raise LogValidationError(
            f"record count differs: logged {len(records)}, replayed {len(replayed)}"
        )
    for lineno, (logged, fresh) in enumerate(zip(records, replayed), start=1):
        mismatch = _first_mismatch(logged, fresh)
        if mismatch:
            raise LogValidationError(f"line {lineno}: {mismatch}")
    return engine.summary()


def rescore(path: str | Path) -> dict:
    return rescore_records(read_log(path))


def write_report_csv(report: dict, path: str | Path) -> Path:
    """Flatten an analysis report to CSV: one row per testing segment."""
    import csv

    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(
            ["log", "segment", "start_t", "end_t", "frames", "mean", "percent_change_from_prev"]
        )
        for entry in report.get("logs", []):
            name = entry.get("name", "")
            changes = entry.get("percent_change", [])
            for seg in entry.get("segments", []):
                idx = seg["index"]
                change = changes[idx - 1] if 0 < idx <= len(changes) else None
                writer.writerow(
                    [
                        name,
                        idx,
                        seg["start_t"],
                        seg["end_t"],
                        seg["frames"],
                        seg["mean"],
                        "" if change is None else change,
                    ]
                )
    return path
