"""Streaming counterpart of the offline influence matrix.

Jobs are observed in chronological order.  A sliding window holds the recent
past (everything strictly within the gap threshold of the newest arrival);
each arrival is credited against the users present in the window, and older
jobs of those users are retroactively credited against the arriving user
where a connection only now materialized.  After a full replay the counters
equal the offline matrix exactly, integer for integer.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .influence import InfluenceMatrix, Thresholds, exact_fraction, exceeds_threshold
from .ingest import JobRecord

__all__ = ["OnlineInfluence", "StateSnapshot"]

_INITIAL_CAPACITY = 16


@dataclass(frozen=True, eq=False)
class StateSnapshot:
    """Point-in-time copy of the streaming counters, as exact integer pairs."""

    users: tuple[str, ...]
    connected: np.ndarray
    totals: np.ndarray
    jobs_seen: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateSnapshot):
            return NotImplemented
        return (
            self.users == other.users
            and self.jobs_seen == other.jobs_seen
            and np.array_equal(self.connected, other.connected)
            and np.array_equal(self.totals, other.totals)
        )

    def values(self) -> np.ndarray:
        return self.connected / self.totals[:, None] if len(self.users) else self.connected.astype(float)

    def same_ratios(self, matrix: InfluenceMatrix) -> bool:
        """Exact integer-pair equality with an offline matrix."""
        return (
            self.users == matrix.users
            and np.array_equal(self.connected, matrix.connected)
            and np.array_equal(self.totals, matrix.totals)
        )

    def as_matrix(self, thresholds: Thresholds) -> InfluenceMatrix:
        """View the counters as an offline-style matrix for shared reporting."""
        return InfluenceMatrix(
            users=self.users,
            connected=self.connected,
            totals=self.totals,
            thresholds=thresholds,
        )

    def to_json(self) -> str:
        payload = {
            "users": list(self.users),
            "C": [int(c) for c in self.totals],
            "R": [[int(v) for v in row] for row in self.connected],
            "jobs_seen": self.jobs_seen,
        }
        return json.dumps(payload, sort_keys=True)


class OnlineInfluence:
    """Incrementally maintained influence counters over an in-order job stream.

    Single-writer: ``observe`` calls must be serialized.  ``snapshot`` copies,
    so snapshots can be consumed elsewhere while observation continues.
    """

    def __init__(self, thresholds: Thresholds) -> None:
        self.thresholds = thresholds
        self.users: list[str] = []
        self.jobs_seen = 0
        self.last_time: int | None = None
        self._index: dict[str, int] = {}
        self._capacity = _INITIAL_CAPACITY
        # connected[i, j]: jobs of user i connected to user j, so far.
        self._connected = np.zeros((self._capacity, self._capacity), dtype=np.int64)
        self._totals = np.zeros(self._capacity, dtype=np.int64)
        self._last_seen: list[int | None] = []
        # Window: arrivals strictly within c_job of the newest one, in arrival
        # order, plus per-user time queues for the back-fill counts.
        self._window: deque[tuple[int, int]] = deque()
        self._window_times: dict[int, deque[int]] = {}

    @property
    def user_count(self) -> int:
        return len(self.users)

    def _ensure_user(self, user_id: str) -> int:
        idx = self._index.get(user_id)
        if idx is not None:
            return idx
        idx = len(self.users)
        if idx >= self._capacity:
            new_cap = self._capacity * 2
            grown = np.zeros((new_cap, new_cap), dtype=np.int64)
            grown[: self._capacity, : self._capacity] = self._connected
            self._connected = grown
            totals = np.zeros(new_cap, dtype=np.int64)
            totals[: self._capacity] = self._totals
            self._totals = totals
            self._capacity = new_cap
        self._index[user_id] = idx
        self.users.append(user_id)
        self._last_seen.append(None)
        return idx

    def observe(self, job: JobRecord) -> None:
        """Fold one arriving job into the counters.

        The stream must be chronological; an out-of-order arrival raises and
        leaves the state untouched.
        """
        t = job.submit_time
        if self.last_time is not None and t < self.last_time:
            raise ValueError(
                f"out-of-order arrival: {t} after {self.last_time}; streams must be pre-sorted"
            )
        c_job = self.thresholds.c_job
        i = self._ensure_user(job.user_id)
        prev = self._last_seen[i]

        # Evict: kept entries satisfy t - s < c_job.
        cutoff = t - c_job
        window = self._window
        window_times = self._window_times
        while window and window[0][0] <= cutoff:
            _, u = window.popleft()
            dq = window_times[u]
            dq.popleft()
            if not dq:
                del window_times[u]

        # The arriving job is connected to every user left in the window and
        # always to its own submitter.
        present = list(window_times.keys())
        cols = present if i in window_times else present + [i]
        self._connected[i, cols] += 1

        # Back-fill: windowed jobs of each present user become connected to
        # user i through this arrival unless an earlier job of i already
        # connected them.  A job at time s was credited at its own arrival
        # iff s - prev < c_job, so exactly those with s >= prev + c_job are
        # new.  All window entries predate the current job in stream order,
        # which keeps same-second ties correct.
        connected = self._connected
        if prev is None:
            for j, dq in window_times.items():
                connected[j, i] += len(dq)
        else:
            bound = prev + c_job
            for j, dq in window_times.items():
                count = 0
                for s in reversed(dq):
                    if s >= bound:
                        count += 1
                    else:
                        break
                if count:
                    connected[j, i] += count

        self._totals[i] += 1
        window.append((t, i))
        if i in window_times:
            window_times[i].append(t)
        else:
            window_times[i] = deque((t,))
        self._last_seen[i] = t
        self.last_time = t
        self.jobs_seen += 1

    def observe_all(self, jobs) -> None:
        for job in jobs:
            self.observe(job)

    def window_size(self) -> int:
        return len(self._window)

    def snapshot(self) -> StateSnapshot:
        n = len(self.users)
        return StateSnapshot(
            users=tuple(self.users),
            connected=self._connected[:n, :n].copy(),
            totals=self._totals[:n].copy(),
            jobs_seen=self.jobs_seen,
        )

    def followers(self, c_user: Fraction | float | str) -> dict[str, frozenset[str]]:
        """Follower set per user: i follows j iff connected[i,j]/totals[i] > c_user.

        Evaluated on the exact integer pairs; the comparison is strict.
        """
        cu = exact_fraction(c_user)
        if not 0 < cu < 1:
            raise ValueError(f"c_user must be in (0, 1), got {cu}")
        n = len(self.users)
        mask = exceeds_threshold(self._connected[:n, :n], self._totals[:n], cu)
        return {
            user: frozenset(self.users[i] for i in np.nonzero(mask[:, j])[0])
            for j, user in enumerate(self.users)
        }

    def follower_count_vector(self, c_user: Fraction, size: int | None = None) -> np.ndarray:
        """Follower counts (self included) in registry order, zero-padded to ``size``."""
        n = len(self.users)
        counts = np.zeros(size if size is not None else n, dtype=np.int64)
        if n:
            mask = exceeds_threshold(self._connected[:n, :n], self._totals[:n], c_user)
            counts[:n] = mask.sum(axis=0)
        return counts

    def to_json(self) -> str:
        """Full state for checkpoint/resume; superset of the snapshot schema."""
        n = len(self.users)
        payload = {
            "users": self.users,
            "C": [int(c) for c in self._totals[:n]],
            "R": [[int(v) for v in row] for row in self._connected[:n, :n]],
            "jobs_seen": self.jobs_seen,
            "last_time": self.last_time,
            "last_seen": self._last_seen,
            "window": [[t, u] for t, u in self._window],
            "c_job": self.thresholds.c_job,
            "c_user": str(self.thresholds.c_user),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OnlineInfluence":
        payload = json.loads(text)
        thresholds = Thresholds(c_job=payload["c_job"], c_user=Fraction(payload["c_user"]))
        state = cls(thresholds)
        for user in payload["users"]:
            state._ensure_user(user)
        n = len(state.users)
        state._connected[:n, :n] = np.asarray(payload["R"], dtype=np.int64).reshape(n, n)
        state._totals[:n] = np.asarray(payload["C"], dtype=np.int64)
        state._last_seen = list(payload["last_seen"])
        state.jobs_seen = payload["jobs_seen"]
        state.last_time = payload["last_time"]
        for t, u in payload["window"]:
            state._window.append((t, u))
            if u in state._window_times:
                state._window_times[u].append(t)
            else:
                state._window_times[u] = deque((t,))
        return state
