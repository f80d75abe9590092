"""Parse workload trace files into a canonical, chronologically ordered job stream.

Only three fields matter downstream: who submitted, when (integer seconds),
and an optional accounting group.  Everything else in a trace line is ignored.
"""

from __future__ import annotations

import csv
import io
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

__all__ = [
    "CANONICAL_COLUMNS",
    "CANONICAL_HEADER",
    "ColumnMap",
    "JobRecord",
    "JobStream",
    "ParseError",
    "TraceDataset",
    "build_stream",
    "normalize",
    "parse_delimited",
    "parse_swf",
    "write_canonical",
]

# SWF field positions (0-indexed): field 2 = submit time, 12 = user, 13 = group.
_SWF_SUBMIT = 1
_SWF_USER = 11
_SWF_GROUP = 12
_SWF_MIN_FIELDS = 18

CANONICAL_HEADER = ("user", "time", "group")


class ParseError(ValueError):
    """Raised when an input cannot be parsed at all (not per-line noise)."""


@dataclass(frozen=True)
class JobRecord:
    """One job submission: who, when (seconds), and optional group.

    ``seq`` is the position of the record in its source file; it only breaks
    ordering ties between records that agree on (submit_time, user_id) and is
    ignored by equality.
    """

    user_id: str
    submit_time: int
    group_id: str | None = None
    seq: int = field(default=0, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.submit_time < 0:
            raise ValueError(f"submit_time must be >= 0, got {self.submit_time}")


@dataclass(frozen=True, eq=False)
class JobStream:
    """Chronologically ordered job records plus a dense user registry.

    Registry order is first appearance in the sorted stream, so matrix rows
    and columns keep a stable meaning across runs on identical input.
    """

    records: tuple[JobRecord, ...]
    user_registry: tuple[str, ...]
    user_index: Mapping[str, int] = field(repr=False)
    user_times: tuple[np.ndarray, ...] = field(repr=False)
    times: np.ndarray = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JobStream):
            return NotImplemented
        return self.records == other.records and self.user_registry == other.user_registry

    def __len__(self) -> int:
        return len(self.records)


def build_stream(records: Iterable[JobRecord]) -> JobStream:
    """Sort records into canonical order and derive the user registry.

    Order is (submit_time, user_id, original order); the sort is total, so
    parsing the same bytes twice yields an identical stream.
    """
    ordered = tuple(sorted(records, key=lambda r: (r.submit_time, r.user_id, r.seq)))
    registry: list[str] = []
    index: dict[str, int] = {}
    buckets: list[list[int]] = []
    for rec in ordered:
        idx = index.get(rec.user_id)
        if idx is None:
            index[rec.user_id] = len(registry)
            registry.append(rec.user_id)
            buckets.append([])
            idx = index[rec.user_id]
        buckets[idx].append(rec.submit_time)
    user_times = tuple(np.asarray(b, dtype=np.int64) for b in buckets)
    times = np.asarray([r.submit_time for r in ordered], dtype=np.int64)
    return JobStream(
        records=ordered,
        user_registry=tuple(registry),
        user_index=index,
        user_times=user_times,
        times=times,
    )


@dataclass(frozen=True)
class TraceDataset:
    """Per-group job streams plus source metadata."""

    streams: Mapping[str, JobStream]
    source: str
    format: str
    parse_errors: int

    def __post_init__(self) -> None:
        total = sum(len(s) for s in self.streams.values())
        object.__setattr__(self, "_total_records", total)

    @property
    def total_records(self) -> int:
        return self._total_records  # type: ignore[attr-defined]

    def groups(self) -> tuple[str, ...]:
        return tuple(self.streams.keys())


@dataclass(frozen=True)
class ColumnMap:
    """Column layout for delimited traces (0-indexed columns)."""

    user_col: int
    time_col: int
    group_col: int | None = None
    delimiter: str = ","
    has_header: bool = False

    def __post_init__(self) -> None:
        if self.user_col < 0 or self.time_col < 0:
            raise ValueError("column indices must be >= 0")
        if self.group_col is not None and self.group_col < 0:
            raise ValueError("group_col must be >= 0")


# Layout of the canonical delimited format this package writes.
CANONICAL_COLUMNS = ColumnMap(user_col=0, time_col=1, group_col=2, delimiter=",", has_header=True)


def _read_text(source: bytes | str | os.PathLike[str] | IO[bytes]) -> tuple[str, str]:
    """Return (text, source name).  str/PathLike are paths, bytes/file-like are content."""
    if isinstance(source, bytes):
        return source.decode("utf-8"), "<bytes>"
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        return path.read_bytes().decode("utf-8"), str(path)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data, getattr(source, "name", "<stream>")


def _parse_time(token: str) -> int:
    # Integer seconds; sub-second precision is truncated toward zero.
    value = float(token)
    if value != value:  # NaN
        raise ValueError("submit time is NaN")
    truncated = int(value)
    if truncated < 0:
        raise ValueError("negative submit time")
    return truncated


def _group_records(
    records: list[JobRecord], source: str, fmt: str, errors: int
) -> TraceDataset:
    by_group: dict[str, list[JobRecord]] = defaultdict(list)
    for rec in records:
        by_group[rec.group_id if rec.group_id is not None else ""].append(rec)
    streams = {gid: build_stream(recs) for gid, recs in by_group.items()}
    return TraceDataset(streams=streams, source=source, format=fmt, parse_errors=errors)


def parse_swf(source: bytes | str | os.PathLike[str] | IO[bytes]) -> TraceDataset:
    """Parse a Standard Workload Format trace.

    Lines whose first non-blank character is ';' are comments.  Data lines
    carry >= 18 whitespace-separated fields; we keep submit time (field 2,
    1-indexed), user (field 12) and group (field 13).  Records with user
    ``-1`` (unknown submitter) are dropped and counted as parse errors, as
    are malformed lines.  Input where nothing parses at all is a hard error.
    """
    text, name = _read_text(source)
    records: list[JobRecord] = []
    errors = 0
    first_bad: tuple[int, str] | None = None
    seq = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        fields = line.split()
        try:
            if len(fields) < _SWF_MIN_FIELDS:
                raise ValueError(f"expected >= {_SWF_MIN_FIELDS} fields, got {len(fields)}")
            submit = _parse_time(fields[_SWF_SUBMIT])
            user = fields[_SWF_USER]
            if user == "-1":
                raise ValueError("unknown user (-1)")
            group = fields[_SWF_GROUP]
        except ValueError as exc:
            errors += 1
            if first_bad is None:
                first_bad = (lineno, str(exc))
            continue
        records.append(JobRecord(user_id=user, submit_time=submit, group_id=group, seq=seq))
        seq += 1
    if not records and first_bad is not None:
        raise ParseError(f"{name}: no parseable records; first bad line {first_bad[0]}: {first_bad[1]}")
    return _group_records(records, name, "swf", errors)


def parse_delimited(
    source: bytes | str | os.PathLike[str] | IO[bytes], columns: ColumnMap
) -> TraceDataset:
    """Parse a delimited trace using an explicit column layout.

    Rows missing a mapped column, or with an unusable time or empty user,
    are counted as errors and skipped.  An empty group field means no group.
    """
    text, name = _read_text(source)
    reader = csv.reader(io.StringIO(text), delimiter=columns.delimiter)
    need = max(columns.user_col, columns.time_col, columns.group_col or 0)
    records: list[JobRecord] = []
    errors = 0
    first_bad: tuple[int, str] | None = None
    seq = 0
    for lineno, row in enumerate(reader, start=1):
        if columns.has_header and lineno == 1:
            continue
        if not row:
            continue
        try:
            if len(row) <= need:
                raise ValueError(f"expected > {need} columns, got {len(row)}")
            submit = _parse_time(row[columns.time_col])
            user = row[columns.user_col]
            if not user:
                raise ValueError("empty user field")
            group = row[columns.group_col] if columns.group_col is not None else ""
        except ValueError as exc:
            errors += 1
            if first_bad is None:
                first_bad = (lineno, str(exc))
            continue
        records.append(
            JobRecord(user_id=user, submit_time=submit, group_id=group or None, seq=seq)
        )
        seq += 1
    if not records and first_bad is not None:
        raise ParseError(f"{name}: no parseable records; first bad line {first_bad[0]}: {first_bad[1]}")
    return _group_records(records, name, "csv", errors)


def normalize(
    dataset: TraceDataset,
    group: str | None = None,
    min_jobs_per_user: int | None = None,
) -> JobStream:
    """Merge selected groups into one stream, optionally dropping rare users.

    ``min_jobs_per_user`` keeps only users with at least that many jobs in
    the selection; by default nothing is filtered.
    """
    if group is not None:
        if group not in dataset.streams:
            available = ", ".join(repr(g) for g in dataset.groups()) or "<none>"
            raise ValueError(f"unknown group {group!r}; available groups: {available}")
        selected = [dataset.streams[group]]
    else:
        selected = list(dataset.streams.values())
    merged: list[JobRecord] = [rec for stream in selected for rec in stream.records]
    if min_jobs_per_user is not None:
        counts: dict[str, int] = defaultdict(int)
        for rec in merged:
            counts[rec.user_id] += 1
        merged = [rec for rec in merged if counts[rec.user_id] >= min_jobs_per_user]
    return build_stream(merged)


def write_canonical(stream: JobStream, destination: str | os.PathLike[str] | IO[str]) -> None:
    """Write a stream in the canonical delimited format (``user,time,group``).

    UTF-8, LF line endings.  Re-parsing the output with ``CANONICAL_COLUMNS``
    and normalizing yields an identical stream.
    """
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fp:
            _write_canonical_rows(stream, fp)
    else:
        _write_canonical_rows(stream, destination)


def _write_canonical_rows(stream: JobStream, fp: IO[str]) -> None:
    writer = csv.writer(fp, delimiter=",", lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for rec in stream.records:
        writer.writerow([rec.user_id, rec.submit_time, rec.group_id or ""])
