"""Event-log serialization: JSONL (canonical) and CSV (accepted on input).

One record per active user-day: ``{"user_id", "day", "variant", "value"}``
with variant ``"T"``/``"C"`` or null. Multiple raw rows for the same
(user, day) are summed into one daily value before analysis. Writers are
byte-deterministic for a fixed trace collection; a JSON metadata sidecar
(``<name>.meta.json``) records how a log was produced.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .core import DataFormatError, ExperimentCalendar, UserTrace, Variant

SCHEMA_VERSION = 1

_CSV_COLUMNS = ("user_id", "day", "variant", "value")


@dataclass(frozen=True)
class EventLogRecord:
    user_id: str
    day: int
    value: float
    variant: Variant | None = None


@dataclass
class IngestReport:
    """Row accounting for one ingested log."""

    total_rows: int = 0
    accepted_rows: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    @property
    def n_rejected(self) -> int:
        return sum(self.rejected.values())

    @property
    def reject_fraction(self) -> float:
        return self.n_rejected / self.total_rows if self.total_rows else 0.0

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1


def iter_records(traces: Iterable[UserTrace]) -> Iterator[EventLogRecord]:
    for trace in traces:
        for day, value in zip(trace.days, trace.values):
            yield EventLogRecord(trace.user_id, day, value, trace.variant)


def record_to_json(record: EventLogRecord) -> str:
    payload = {
        "user_id": record.user_id,
        "day": record.day,
        "variant": record.variant.value if record.variant else None,
        "value": record.value,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def write_event_log(path: str | Path, traces: Iterable[UserTrace]) -> int:
    """Write traces as JSONL, one active user-day per line. Returns row count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in iter_records(traces):
            fh.write(record_to_json(record))
            fh.write("\n")
            n += 1
    return n


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_metadata(log_path: str | Path, metadata: dict) -> Path:
    target = sidecar_path(log_path)
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"schema": SCHEMA_VERSION, **metadata}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return target


def _parse_variant(raw: object, report: IngestReport) -> tuple[Variant | None, bool]:
    if raw is None or raw == "":
        return None, True
    if isinstance(raw, str):
        if raw in ("T", "C"):
            return Variant(raw), True
    report.reject("invalid-variant")
    return None, False


def _parse_common(
    user_id: object, day: object, value: object, variant: object,
    calendar: ExperimentCalendar, report: IngestReport,
) -> EventLogRecord | None:
    if not isinstance(user_id, str) or not user_id:
        report.reject("missing-user-id")
        return None
    if isinstance(day, bool) or not isinstance(day, int):
        try:
            day = int(str(day))
        except (TypeError, ValueError):
            report.reject("invalid-day")
            return None
    if not 1 <= day <= calendar.k:
        report.reject("day-out-of-range")
        return None
    try:
        value = float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        report.reject("invalid-value")
        return None
    if not math.isfinite(value):
        report.reject("invalid-value")
        return None
    parsed_variant, ok = _parse_variant(variant, report)
    if not ok:
        return None
    return EventLogRecord(user_id, day, value, parsed_variant)


def _iter_jsonl(fh: TextIO, calendar: ExperimentCalendar, report: IngestReport) -> Iterator[EventLogRecord]:
    for line in fh:
        line = line.strip()
        if not line:
            continue
        report.total_rows += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            report.reject("invalid-json")
            continue
        if not isinstance(obj, dict):
            report.reject("invalid-json")
            continue
        record = _parse_common(
            obj.get("user_id"), obj.get("day"), obj.get("value"), obj.get("variant"),
            calendar, report,
        )
        if record is not None:
            yield record


def _iter_csv(fh: TextIO, calendar: ExperimentCalendar, report: IngestReport) -> Iterator[EventLogRecord]:
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [c for c in ("user_id", "day", "value") if c not in header]
    if missing:
        raise DataFormatError(f"CSV header missing required columns: {', '.join(missing)}")
    for row in reader:
        report.total_rows += 1
        record = _parse_common(
            row.get("user_id"), row.get("day"), row.get("value"), row.get("variant"),
            calendar, report,
        )
        if record is not None:
            yield record


def build_traces(
    records: Iterable[EventLogRecord],
    report: IngestReport,
    require_variant: bool = False,
) -> list[UserTrace]:
    """Aggregate records into traces: daily values summed, users sorted by id.

    A record whose variant contradicts an earlier one for the same user is
    rejected; with ``require_variant`` records without one are too.
    """
    daily: dict[str, dict[int, float]] = {}
    variants: dict[str, Variant | None] = {}
    for record in records:
        known = variants.get(record.user_id)
        if record.variant is not None and known is not None and record.variant is not known:
            report.reject("variant-conflict")
            continue
        if require_variant and record.variant is None and known is None:
            report.reject("missing-variant")
            continue
        if record.variant is not None:
            variants[record.user_id] = record.variant
        else:
            variants.setdefault(record.user_id, None)
        days = daily.setdefault(record.user_id, {})
        days[record.day] = days.get(record.day, 0.0) + record.value
        report.accepted_rows += 1
    traces = []
    for user_id in sorted(daily):
        days = sorted(daily[user_id])
        traces.append(
            UserTrace(
                user_id=user_id,
                variant=variants[user_id],
                days=tuple(days),
                values=tuple(daily[user_id][t] for t in days),
            )
        )
    return traces


def read_event_log(
    path: str | Path,
    calendar: ExperimentCalendar,
    require_variant: bool = False,
) -> tuple[list[UserTrace], IngestReport]:
    """Load a JSONL or CSV event log (dispatched on the ``.csv`` extension)."""
    path = Path(path)
    report = IngestReport()
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            if path.suffix.lower() == ".csv":
                rows = _iter_csv(fh, calendar, report)
            else:
                rows = _iter_jsonl(fh, calendar, report)
            traces = build_traces(rows, report, require_variant)
    except OSError as exc:
        raise DataFormatError(f"cannot read event log {path}: {exc}") from exc
    return traces, report
