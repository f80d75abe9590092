"""Quantitative characterizations: interarrival CDF, follower-count power law,
and the convergence of the streaming counters toward the offline matrix.
"""

from __future__ import annotations

import json
import math
import os
from bisect import bisect_right
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .graph import extract_followers, follower_counts
from .influence import Thresholds, influence_matrix
from .ingest import JobStream
from .streaming import OnlineInfluence

__all__ = [
    "ConvergencePoint",
    "ConvergenceSeries",
    "EmpiricalCdf",
    "FollowerDistribution",
    "PowerLawFit",
    "convergence_run",
    "cosine_similarity",
    "fit_power_law",
    "follower_distribution",
    "fraction_within",
    "interarrival_cdf",
    "write_cdf_csv",
    "write_convergence_csv",
    "write_distribution_csv",
    "write_fit_json",
]

DEFAULT_CHECKPOINTS = 200


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Distinct gap durations (seconds, ascending) with cumulative fractions."""

    values: np.ndarray
    fractions: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmpiricalCdf):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.fractions, other.fractions
        )


def interarrival_cdf(stream: JobStream) -> EmpiricalCdf:
    """CDF over the consecutive submission gaps of the time-sorted stream."""
    if len(stream) < 2:
        raise ValueError("interarrival CDF needs at least 2 jobs")
    gaps = np.diff(stream.times)
    values, counts = np.unique(gaps, return_counts=True)
    fractions = np.cumsum(counts) / gaps.size
    return EmpiricalCdf(values=values, fractions=fractions)


def fraction_within(cdf: EmpiricalCdf, duration: int) -> float:
    """Cumulative fraction at the largest gap <= duration (0 below all gaps)."""
    pos = bisect_right(cdf.values.tolist(), duration)
    return float(cdf.fractions[pos - 1]) if pos else 0.0


@dataclass(frozen=True, eq=False)
class FollowerDistribution:
    """Support k (ascending positive ints) and the weight P(k) at each."""

    ks: np.ndarray
    ps: np.ndarray

    def __post_init__(self) -> None:
        if len(self.ks) == 0:
            raise ValueError("empty distribution")
        if np.any(self.ks < 1):
            raise ValueError("support must be positive integers")
        if np.any(self.ps <= 0):
            raise ValueError("weights must be positive on the support")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FollowerDistribution):
            return NotImplemented
        return np.array_equal(self.ks, other.ks) and np.array_equal(self.ps, other.ps)


def follower_distribution(counts: Sequence[int] | np.ndarray) -> FollowerDistribution:
    """Normalized histogram of per-user follower counts.

    Zero-frequency k never appear; nonpositive counts (possible only when
    self-edges were excluded) are dropped from the population.
    """
    arr = np.asarray(counts, dtype=np.int64)
    if arr.size == 0:
        raise ValueError("no counts given")
    arr = arr[arr >= 1]
    if arr.size == 0:
        raise ValueError("no positive counts given")
    ks, freq = np.unique(arr, return_counts=True)
    return FollowerDistribution(ks=ks, ps=freq / arr.size)


@dataclass(frozen=True)
class PowerLawFit:
    """P(k) = a * k**b fitted by least squares on the log-log points."""

    a: float
    b: float
    r_squared: float
    support: tuple[int, ...]


def fit_power_law(dist: FollowerDistribution) -> PowerLawFit:
    """Ordinary least squares of ln P(k) against ln k."""
    if len(dist.ks) < 2:
        raise ValueError("insufficient support: power-law fit needs >= 2 distinct k")
    x = np.log(dist.ks.astype(float))
    y = np.log(dist.ps.astype(float))
    x_bar = x.mean()
    y_bar = y.mean()
    sxx = float(((x - x_bar) ** 2).sum())
    sxy = float(((x - x_bar) * (y - y_bar)).sum())
    b = sxy / sxx
    intercept = y_bar - b * x_bar
    residuals = y - (intercept + b * x)
    ss_res = float((residuals**2).sum())
    ss_tot = float(((y - y_bar) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(
        a=math.exp(intercept), b=b, r_squared=r_squared, support=tuple(int(k) for k in dist.ks)
    )


def cosine_similarity(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between two vectors; in [0, 1] for non-negative input."""
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if not a.any() or not b.any():
        raise ValueError("cosine similarity undefined for a zero vector")
    if np.array_equal(a, b):
        return 1.0
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


@dataclass(frozen=True)
class ConvergencePoint:
    fraction: float
    jobs_seen: int
    cosine: float
    users_seen: int


@dataclass(frozen=True)
class ConvergenceSeries:
    """Cosine similarity to the offline baseline along the replay, plus the
    distinct-user growth curve on the same checkpoint grid."""

    points: tuple[ConvergencePoint, ...]


def _checkpoint_fractions(checkpoints: int | Sequence[float]) -> list[float]:
    if isinstance(checkpoints, int):
        if checkpoints < 0:
            raise ValueError("checkpoint count must be >= 0")
        # n evenly spaced fractions plus 100%, an even grid of n+1 points.
        return [i / (checkpoints + 1) for i in range(1, checkpoints + 1)] + [1.0]
    fractions = sorted(set(float(f) for f in checkpoints))
    for f in fractions:
        if not 0 < f <= 1:
            raise ValueError(f"checkpoint fraction {f} outside (0, 1]")
    if not fractions or fractions[-1] != 1.0:
        fractions.append(1.0)
    return fractions


def convergence_run(
    stream: JobStream,
    thresholds: Thresholds,
    checkpoints: int | Sequence[float] = DEFAULT_CHECKPOINTS,
) -> ConvergenceSeries:
    """Replay the stream online and compare follower counts to the offline result.

    The baseline is the follower-count vector of the full-stream matrix; at
    each checkpoint the streaming counts are placed in a vector of the same
    length (users not yet seen contribute 0) and compared by cosine.  The
    final checkpoint always covers the whole stream, where the similarity is
    exactly 1.
    """
    if not stream.records:
        raise ValueError("empty trace: nothing to replay")
    fractions = _checkpoint_fractions(checkpoints)
    baseline_matrix = influence_matrix(stream, thresholds)
    baseline_graph = extract_followers(baseline_matrix, thresholds.c_user)
    baseline = follower_counts(baseline_graph)
    size = len(stream.user_registry)

    n_jobs = len(stream)
    boundaries = [max(1, math.ceil(f * n_jobs)) for f in fractions]
    state = OnlineInfluence(thresholds)
    points: list[ConvergencePoint] = []
    pos = 0
    for fraction, boundary in zip(fractions, boundaries):
        while pos < boundary:
            state.observe(stream.records[pos])
            pos += 1
        online = state.follower_count_vector(thresholds.c_user, size=size)
        points.append(
            ConvergencePoint(
                fraction=fraction,
                jobs_seen=state.jobs_seen,
                cosine=cosine_similarity(online, baseline),
                users_seen=state.user_count,
            )
        )
    return ConvergenceSeries(points=tuple(points))


def write_cdf_csv(cdf: EmpiricalCdf, destination: str | os.PathLike[str] | IO[str]) -> None:
    _write_rows(
        destination,
        "gap_seconds,cum_fraction",
        (f"{int(v)},{f:.6f}" for v, f in zip(cdf.values, cdf.fractions)),
    )


def write_distribution_csv(
    dist: FollowerDistribution, destination: str | os.PathLike[str] | IO[str]
) -> None:
    _write_rows(
        destination, "k,p", (f"{int(k)},{p:.6f}" for k, p in zip(dist.ks, dist.ps))
    )


def write_convergence_csv(
    series: ConvergenceSeries, destination: str | os.PathLike[str] | IO[str]
) -> None:
    _write_rows(
        destination,
        "fraction,jobs,cosine,users",
        (
            f"{p.fraction:.6f},{p.jobs_seen},{p.cosine:.6f},{p.users_seen}"
            for p in series.points
        ),
    )


def write_fit_json(fit: PowerLawFit, destination: str | os.PathLike[str] | IO[str]) -> None:
    payload = {"a": fit.a, "b": fit.b, "r2": fit.r_squared, "support": list(fit.support)}
    text = json.dumps(payload, sort_keys=True) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8") as fp:
            fp.write(text)
    else:
        destination.write(text)


def _write_rows(destination, header: str, rows) -> None:
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as fp:
            fp.write(header + "\n")
            for row in rows:
                fp.write(row + "\n")
    else:
        destination.write(header + "\n")
        for row in rows:
            destination.write(row + "\n")
