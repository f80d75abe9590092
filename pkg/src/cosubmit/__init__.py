"""cosubmit: co-submission influence analysis for job-submission traces.

Parses HPC/cluster workload traces (SWF or delimited), computes which users'
jobs repeatedly land close in time to other users' jobs, derives the directed
dominant/follower community structure, and characterizes it (interarrival
CDF, power-law fit, streaming convergence).  A streaming implementation
maintains the same counters incrementally and matches the batch result
exactly after a full replay.
"""

from .graph import FollowerGraph, dominant_users, extract_followers, follower_counts
from .influence import (
    InfluenceMatrix,
    Thresholds,
    influence_matrix,
    influence_matrix_naive,
    min_gaps,
)
from .ingest import (
    ColumnMap,
    JobRecord,
    JobStream,
    ParseError,
    TraceDataset,
    build_stream,
    normalize,
    parse_delimited,
    parse_swf,
    write_canonical,
)
from .stats import (
    ConvergenceSeries,
    EmpiricalCdf,
    FollowerDistribution,
    PowerLawFit,
    convergence_run,
    cosine_similarity,
    fit_power_law,
    follower_distribution,
    fraction_within,
    interarrival_cdf,
)
from .streaming import OnlineInfluence, StateSnapshot
from .synth import FixedFollowers, GroundTruth, PowerLawFollowers, SynthConfig, generate, plant_power_law

__version__ = "0.1.0"

__all__ = [
    "ColumnMap",
    "ConvergenceSeries",
    "EmpiricalCdf",
    "FixedFollowers",
    "FollowerDistribution",
    "FollowerGraph",
    "GroundTruth",
    "InfluenceMatrix",
    "JobRecord",
    "JobStream",
    "OnlineInfluence",
    "ParseError",
    "PowerLawFit",
    "PowerLawFollowers",
    "StateSnapshot",
    "SynthConfig",
    "Thresholds",
    "TraceDataset",
    "build_stream",
    "convergence_run",
    "cosine_similarity",
    "dominant_users",
    "extract_followers",
    "fit_power_law",
    "follower_counts",
    "follower_distribution",
    "fraction_within",
    "generate",
    "influence_matrix",
    "influence_matrix_naive",
    "interarrival_cdf",
    "min_gaps",
    "normalize",
    "parse_delimited",
    "parse_swf",
    "plant_power_law",
    "write_canonical",
]
