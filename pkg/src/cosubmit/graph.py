"""Directed dominant/follower structure derived from an influence matrix.

An edge points follower -> dominant and exists when the follower's connected
fraction strictly exceeds the user-level threshold.  Because the diagonal is
1, every user follows itself; a count of 1 therefore means "connected to
nobody but self", and dominant users are the ones with a count of 2 or more.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterator

import numpy as np

from .influence import InfluenceMatrix, Thresholds, exact_fraction, exceeds_threshold

__all__ = [
    "FollowerGraph",
    "dominant_users",
    "extract_followers",
    "follower_counts",
    "write_counts_csv",
    "write_edges_csv",
]


@dataclass(frozen=True, eq=False)
class FollowerGraph:
    """Boolean adjacency ``follows[i, j]``: user i follows user j."""

    users: tuple[str, ...]
    follows: np.ndarray
    thresholds: Thresholds

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FollowerGraph):
            return NotImplemented
        return self.users == other.users and np.array_equal(self.follows, other.follows)

    def edges(self) -> Iterator[tuple[str, str]]:
        """(follower, dominant) pairs, row-major order."""
        for i, j in np.argwhere(self.follows):
            yield self.users[i], self.users[j]


def extract_followers(matrix: InfluenceMatrix, c_user: Fraction | float | str) -> FollowerGraph:
    """Threshold the matrix into the follower graph (strict inequality)."""
    cu = exact_fraction(c_user)
    if not 0 < cu < 1:
        raise ValueError(f"c_user must be in (0, 1), got {cu}")
    follows = exceeds_threshold(matrix.connected, matrix.totals, cu)
    return FollowerGraph(
        users=matrix.users,
        follows=follows,
        thresholds=Thresholds(c_job=matrix.thresholds.c_job, c_user=cu),
    )


def follower_counts(graph: FollowerGraph, include_self: bool = True) -> np.ndarray:
    """Followers per user, registry order.  Self-edges count by default."""
    counts = graph.follows.sum(axis=0, dtype=np.int64)
    if not include_self:
        counts = counts - np.diag(graph.follows).astype(np.int64)
    return counts


def dominant_users(graph: FollowerGraph) -> list[str]:
    """Users with at least one follower besides themselves."""
    counts = follower_counts(graph)
    return [user for user, k in zip(graph.users, counts) if k >= 2]


def write_edges_csv(
    graph: FollowerGraph, matrix: InfluenceMatrix, destination: str | os.PathLike[str] | IO[str]
) -> None:
    """Edge list ``follower,dominant,fraction`` (fraction to 6 decimals)."""
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fp:
            _write_edges(graph, matrix, fp)
    else:
        _write_edges(graph, matrix, destination)


def _write_edges(graph: FollowerGraph, matrix: InfluenceMatrix, fp: IO[str]) -> None:
    values = matrix.values()
    fp.write("follower,dominant,fraction\n")
    for i, j in np.argwhere(graph.follows):
        fp.write(f"{graph.users[i]},{graph.users[j]},{values[i, j]:.6f}\n")


def write_counts_csv(graph: FollowerGraph, destination: str | os.PathLike[str] | IO[str],
                     include_self: bool = True) -> None:
    """Counts file ``user,followers`` in registry order."""
    counts = follower_counts(graph, include_self=include_self)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fp:
            _write_counts(graph, counts, fp)
    else:
        _write_counts(graph, counts, destination)


def _write_counts(graph: FollowerGraph, counts: np.ndarray, fp: IO[str]) -> None:
    fp.write("user,followers\n")
    for user, k in zip(graph.users, counts):
        fp.write(f"{user},{int(k)}\n")
