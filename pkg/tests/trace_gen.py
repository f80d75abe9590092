"""Random and structured trace builders shared across test modules."""

from __future__ import annotations

import numpy as np

from cosubmit import JobRecord, JobStream, Thresholds, build_stream

# Span classes relative to c_job, paired with job caps so that streaming
# windows stay small enough to replay hundreds of traces quickly.
_SPAN_CLASSES = ((2, 200), (20, 1000), (200, None))


def random_stream(
    seed: int,
    max_users: int = 30,
    max_jobs: int = 2000,
    c_job: int = 1800,
) -> tuple[JobStream, Thresholds]:
    """Seeded random trace with bursts and deliberate timestamp ties."""
    rng = np.random.default_rng(seed)
    span_mult, cap = _SPAN_CLASSES[int(rng.integers(0, len(_SPAN_CLASSES)))]
    span = span_mult * c_job
    n_users = int(rng.integers(1, max_users + 1))
    n_jobs = int(rng.integers(2, (min(cap, max_jobs) if cap else max_jobs) + 1))
    if rng.random() < 0.25:
        # draw times from a small pool so ties are guaranteed
        pool = rng.integers(0, span + 1, size=max(2, n_jobs // 20))
        times = rng.choice(pool, size=n_jobs)
    else:
        times = rng.integers(0, span + 1, size=n_jobs)
    user_ids = rng.integers(0, n_users, size=n_jobs)
    records = [
        JobRecord(f"u{int(u):02d}", int(t), seq=i)
        for i, (u, t) in enumerate(zip(user_ids, times))
    ]
    return build_stream(records), Thresholds(c_job=c_job)


def burst_rounds_stream(
    n_groups: int = 3,
    group_size: int = 4,
    rounds: int = 400,
    round_spacing_s: int = 10_800,
    group_spacing_s: int = 2_400,
    member_spacing_s: int = 75,
) -> JobStream:
    """Stationary trace: every round, each group co-bursts well inside c_job=1800
    while staying disconnected from other groups and other rounds.

    All users appear in the very first round, so the community structure is
    fixed from the start of the stream.
    """
    records = []
    seq = 0
    for r in range(rounds):
        base = r * round_spacing_s
        for g in range(n_groups):
            for m in range(group_size):
                t = base + g * group_spacing_s + m * member_spacing_s
                records.append(JobRecord(f"g{g}m{m}", t, seq=seq))
                seq += 1
    return build_stream(records)
