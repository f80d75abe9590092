"""Offline co-submission influence matrix.

Entry (i, j) is the fraction of user i's jobs that have at least one job of
user j submitted strictly within the gap threshold, before or after.  Counts
are kept as exact integers and turned into floats only for reporting, so the
streaming implementation can be checked against this one bit-exactly.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence

import numpy as np

from .ingest import JobStream

__all__ = [
    "InfluenceMatrix",
    "Thresholds",
    "exact_fraction",
    "exceeds_threshold",
    "influence_matrix",
    "influence_matrix_naive",
    "min_gaps",
    "write_matrix_csv",
    "write_matrix_json",
]

_INT64_MAX = np.iinfo(np.int64).max


def exact_fraction(value: float | str | Fraction) -> Fraction:
    """Exact rational for a human-entered threshold ("0.5", 0.8, 50%-style Fraction)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # str() gives the shortest decimal, i.e. the value the user typed.
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class Thresholds:
    """Connection thresholds: job-level gap (seconds) and user-level fraction."""

    c_job: int = 1800
    c_user: Fraction = Fraction(1, 2)

    def __post_init__(self) -> None:
        if isinstance(self.c_job, float):
            if not self.c_job.is_integer():
                raise ValueError(f"c_job must be whole seconds, got {self.c_job}")
            object.__setattr__(self, "c_job", int(self.c_job))
        if self.c_job <= 0:
            raise ValueError(f"c_job must be > 0, got {self.c_job}")
        object.__setattr__(self, "c_user", exact_fraction(self.c_user))
        if not 0 < self.c_user < 1:
            raise ValueError(f"c_user must be in (0, 1), got {self.c_user}")


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Connected-job counts per ordered user pair, over a shared registry.

    ``connected[i, j]`` counts user i's jobs with a job of user j strictly
    within ``thresholds.c_job``; ``totals[i]`` is user i's job count.  The
    reported fraction is their exact ratio.
    """

    users: tuple[str, ...]
    connected: np.ndarray
    totals: np.ndarray
    thresholds: Thresholds

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InfluenceMatrix):
            return NotImplemented
        return (
            self.users == other.users
            and np.array_equal(self.connected, other.connected)
            and np.array_equal(self.totals, other.totals)
        )

    def values(self) -> np.ndarray:
        """Fractions in [0, 1]; diagonal is exactly 1."""
        return self.connected / self.totals[:, None]

    def fraction(self, follower: str, dominant: str) -> Fraction:
        i = self.users.index(follower)
        j = self.users.index(dominant)
        return Fraction(int(self.connected[i, j]), int(self.totals[i]))


def min_gaps(times_a: Sequence[int], times_b: Sequence[int]) -> list[int]:
    """Per element of ``times_a``, the minimum |gap| to any element of ``times_b``.

    Both inputs must be sorted ascending; a single merge-style pass, O(|a|+|b|).
    """
    if len(times_b) == 0:
        raise ValueError("times_b must be non-empty")
    out: list[int] = []
    q = 0
    last = len(times_b) - 1
    for x in times_a:
        # The nearest index never moves left as x grows.
        while q < last and abs(times_b[q + 1] - x) <= abs(times_b[q] - x):
            q += 1
        out.append(abs(times_b[q] - x))
    return out


def _count_connected(x: np.ndarray, y: np.ndarray, c_job: int) -> int:
    # Number of x entries with at least one y strictly inside (x - c, x + c).
    lo = np.searchsorted(y, x - c_job, side="right")
    hi = np.searchsorted(y, x + c_job, side="left")
    return int(np.count_nonzero(hi > lo))


def influence_matrix(stream: JobStream, thresholds: Thresholds, threads: int = 1) -> InfluenceMatrix:
    """Compute the influence matrix over the stream's registry.

    Rows are independent; with ``threads > 1`` disjoint row blocks are filled
    in parallel.  The result does not depend on the schedule.
    """
    if not stream.records:
        raise ValueError("empty trace: influence matrix needs at least one job")
    times = stream.user_times
    n = len(times)
    connected = np.zeros((n, n), dtype=np.int64)
    c_job = thresholds.c_job

    def fill_rows(rows: range) -> None:
        for i in rows:
            lo_edges = times[i] - c_job
            hi_edges = times[i] + c_job
            row = connected[i]
            for j in range(n):
                y = times[j]
                lo = np.searchsorted(y, lo_edges, side="right")
                hi = np.searchsorted(y, hi_edges, side="left")
                row[j] = np.count_nonzero(hi > lo)

    if threads <= 1 or n == 1:
        fill_rows(range(n))
    else:
        blocks = [range(start, min(start + -(-n // threads), n)) for start in range(0, n, -(-n // threads))]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for future in [pool.submit(fill_rows, block) for block in blocks]:
                future.result()

    totals = np.asarray([len(t) for t in times], dtype=np.int64)
    return InfluenceMatrix(
        users=stream.user_registry, connected=connected, totals=totals, thresholds=thresholds
    )


def influence_matrix_naive(stream: JobStream, thresholds: Thresholds) -> InfluenceMatrix:
    """Quadratic oracle: all pairwise |time differences|, then per-job minima.

    Deliberately the literal definition; used to validate influence_matrix.
    """
    if not stream.records:
        raise ValueError("empty trace: influence matrix needs at least one job")
    times = stream.user_times
    n = len(times)
    connected = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        x = times[i]
        for j in range(n):
            d = np.abs(x[:, None] - times[j][None, :]).min(axis=1)
            connected[i, j] = np.count_nonzero(d < thresholds.c_job)
    totals = np.asarray([len(t) for t in times], dtype=np.int64)
    return InfluenceMatrix(
        users=stream.user_registry, connected=connected, totals=totals, thresholds=thresholds
    )


def exceeds_threshold(connected: np.ndarray, totals: np.ndarray, c_user: Fraction) -> np.ndarray:
    """Boolean mask of connected[i, j] / totals[i] > c_user, evaluated exactly.

    Uses int64 arithmetic when products cannot overflow, otherwise falls back
    to Python integers.
    """
    p, q = c_user.numerator, c_user.denominator
    hi_connected = int(connected.max(initial=0))
    hi_total = int(totals.max(initial=0))
    if hi_connected * q <= _INT64_MAX and hi_total * p <= _INT64_MAX:
        return connected * np.int64(q) > totals[:, None] * np.int64(p)
    mask = np.zeros(connected.shape, dtype=bool)
    for i in range(connected.shape[0]):
        ti = int(totals[i]) * p
        for j in range(connected.shape[1]):
            mask[i, j] = int(connected[i, j]) * q > ti
    return mask


def write_matrix_csv(matrix: InfluenceMatrix, destination: str | os.PathLike[str] | IO[str]) -> None:
    """Delimited export: header row/column of user ids, fractions to 6 decimals."""
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fp:
            _write_matrix_rows(matrix, fp)
    else:
        _write_matrix_rows(matrix, destination)


def _write_matrix_rows(matrix: InfluenceMatrix, fp: IO[str]) -> None:
    values = matrix.values()
    fp.write("user," + ",".join(matrix.users) + "\n")
    for i, user in enumerate(matrix.users):
        fp.write(user + "," + ",".join(f"{v:.6f}" for v in values[i]) + "\n")


def write_matrix_json(matrix: InfluenceMatrix, destination: str | os.PathLike[str] | IO[str]) -> None:
    payload = {"users": list(matrix.users), "m": [[float(v) for v in row] for row in matrix.values()]}
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8") as fp:
            json.dump(payload, fp, indent=2, sort_keys=True)
            fp.write("\n")
    else:
        json.dump(payload, destination, indent=2, sort_keys=True)
        destination.write("\n")
