"""Synthetic traces with planted dominant/follower structure.

Dominant users emit Poisson job streams.  Each follower is tied to one
dominant user: a follower job either echoes (lands uniformly within a small
offset of a randomly chosen job of its dominant) or falls at an independent
uniform time.  The planted edges and echo probabilities are returned as
ground truth, which the real traces cannot provide.

Randomness comes from numpy's default PCG64 generator, so a config plus seed
reproduces the trace byte for byte on any platform.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from .ingest import JobRecord, TraceDataset, build_stream

__all__ = [
    "FixedFollowers",
    "GroundTruth",
    "PowerLawFollowers",
    "SynthConfig",
    "generate",
    "plant_power_law",
    "write_ground_truth",
]

SYNTH_GROUP = "0"


@dataclass(frozen=True)
class FixedFollowers:
    """Every dominant user gets exactly ``count`` followers."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("follower count must be >= 0")


@dataclass(frozen=True)
class PowerLawFollowers:
    """Follower counts sampled from P(k) proportional to k**exponent on [1, cap]."""

    exponent: float
    cap: int

    def __post_init__(self) -> None:
        if self.exponent >= 0:
            raise ValueError(f"exponent must be < 0 (decaying law), got {self.exponent}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")


FollowerSampler = Union[FixedFollowers, PowerLawFollowers]


@dataclass(frozen=True)
class SynthConfig:
    n_dominant: int
    followers_per_dominant: FollowerSampler
    dominant_rate_per_hour: float
    echo_probability: float
    echo_offset_s: int
    noise_rate_per_hour: float
    duration_s: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_dominant < 1:
            raise ValueError("need at least one dominant user")
        if not 0.0 <= self.echo_probability <= 1.0:
            raise ValueError(f"echo_probability must be in [0, 1], got {self.echo_probability}")
        if self.dominant_rate_per_hour <= 0 or self.noise_rate_per_hour <= 0:
            raise ValueError("rates must be > 0")
        if self.duration_s <= 0:
            raise ValueError("duration must be > 0")
        if self.echo_offset_s < 0:
            raise ValueError("echo offset must be >= 0")


@dataclass(frozen=True)
class GroundTruth:
    """What was planted: follower->dominant edges and per-follower echo chance."""

    edges: tuple[tuple[str, str], ...]
    echo_probability: dict[str, float]
    planted_counts: dict[str, int]


def _sample_follower_counts(
    sampler: FollowerSampler, n: int, rng: np.random.Generator
) -> np.ndarray:
    if isinstance(sampler, FixedFollowers):
        return np.full(n, sampler.count, dtype=np.int64)
    ks = np.arange(1, sampler.cap + 1, dtype=np.float64)
    weights = ks**sampler.exponent
    weights /= weights.sum()
    return rng.choice(np.arange(1, sampler.cap + 1), size=n, p=weights)


def generate(cfg: SynthConfig) -> tuple[TraceDataset, GroundTruth]:
    """Build a trace and its ground truth; deterministic for a fixed seed."""
    rng = np.random.default_rng(cfg.seed)
    hours = cfg.duration_s / 3600.0
    follower_counts = _sample_follower_counts(cfg.followers_per_dominant, cfg.n_dominant, rng)
    width = max(4, len(str(cfg.n_dominant - 1)))

    records: list[JobRecord] = []
    edges: list[tuple[str, str]] = []
    echo_prob: dict[str, float] = {}
    planted: dict[str, int] = {}
    seq = 0

    for d in range(cfg.n_dominant):
        dominant = f"d{d:0{width}d}"
        n_jobs = int(rng.poisson(cfg.dominant_rate_per_hour * hours))
        dom_times = np.sort(rng.integers(0, cfg.duration_s + 1, size=n_jobs))
        for t in dom_times:
            records.append(JobRecord(dominant, int(t), SYNTH_GROUP, seq=seq))
            seq += 1
        planted[dominant] = int(follower_counts[d])
        for f in range(int(follower_counts[d])):
            follower = f"{dominant}x{f:03d}"
            edges.append((follower, dominant))
            echo_prob[follower] = cfg.echo_probability
            n_f = int(rng.poisson(cfg.noise_rate_per_hour * hours))
            if n_f == 0:
                continue
            is_echo = rng.random(n_f) < cfg.echo_probability
            if n_jobs == 0:
                is_echo[:] = False  # nothing to echo against
            times = rng.integers(0, cfg.duration_s + 1, size=n_f)
            n_echo = int(is_echo.sum())
            if n_echo:
                anchors = dom_times[rng.integers(0, n_jobs, size=n_echo)]
                offsets = rng.integers(-cfg.echo_offset_s, cfg.echo_offset_s + 1, size=n_echo)
                times[is_echo] = np.clip(anchors + offsets, 0, cfg.duration_s)
            for t in times:
                records.append(JobRecord(follower, int(t), SYNTH_GROUP, seq=seq))
                seq += 1

    if not records:
        raise ValueError("config yielded zero jobs; raise the rates or duration")

    dataset = TraceDataset(
        streams={SYNTH_GROUP: build_stream(records)},
        source=f"synthetic(seed={cfg.seed})",
        format="synthetic",
        parse_errors=0,
    )
    truth = GroundTruth(
        edges=tuple(edges), echo_probability=echo_prob, planted_counts=planted
    )
    return dataset, truth


def plant_power_law(cfg: SynthConfig) -> tuple[TraceDataset, GroundTruth]:
    """``generate`` with a power-law follower sampler (validated)."""
    if not isinstance(cfg.followers_per_dominant, PowerLawFollowers):
        raise ValueError("plant_power_law requires a PowerLawFollowers sampler")
    return generate(cfg)


def write_ground_truth(truth: GroundTruth, destination: str | os.PathLike[str] | IO[str]) -> None:
    payload = {
        "edges": [list(e) for e in truth.edges],
        "echo_probability": truth.echo_probability,
        "planted_counts": truth.planted_counts,
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8") as fp:
            fp.write(text)
    else:
        destination.write(text)
