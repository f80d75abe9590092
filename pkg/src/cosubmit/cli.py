"""Command-line front door: analyze, stream, synth, cdf.

Every command writes a flat directory of small delimited/JSON files plus a
run.json recording the fully resolved configuration and the input digest.
Outputs carry no timestamps, so re-running the same command on the same
input reproduces them byte for byte.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__
from .graph import dominant_users, extract_followers, follower_counts, write_counts_csv, write_edges_csv
from .influence import Thresholds, influence_matrix, write_matrix_csv, write_matrix_json
from .ingest import ColumnMap, JobStream, TraceDataset, normalize, parse_delimited, parse_swf, write_canonical
from .stats import (
    FollowerDistribution,
    convergence_run,
    fit_power_law,
    follower_distribution,
    fraction_within,
    interarrival_cdf,
    write_cdf_csv,
    write_convergence_csv,
    write_distribution_csv,
    write_fit_json,
)
from .streaming import OnlineInfluence
from .synth import FixedFollowers, PowerLawFollowers, SynthConfig, generate, write_ground_truth

HALF_HOUR_S = 1800

_DURATION_UNITS = {"": 1, "s": 1, "m": 60, "h": 3600}


def parse_duration(text: str) -> int:
    """Seconds from '1800', '30m', '0.5h', '6h'."""
    text = text.strip().lower()
    unit = text[-1] if text and text[-1] in "smh" else ""
    number = text[: len(text) - len(unit)] if unit else text
    try:
        value = float(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None
    seconds = value * _DURATION_UNITS[unit]
    if seconds <= 0 or abs(seconds - round(seconds)) > 1e-9:
        raise argparse.ArgumentTypeError(f"duration must be a positive whole number of seconds: {text!r}")
    return int(round(seconds))


def parse_fraction(text: str) -> Fraction:
    """Fraction in (0, 1) from '0.5' or '50%'."""
    text = text.strip()
    try:
        if text.endswith("%"):
            value = Fraction(text[:-1]) / 100
        else:
            value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad fraction {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"fraction must be in (0, 1): {text!r}")
    return value


def parse_fraction_list(text: str) -> list[Fraction]:
    return [parse_fraction(part) for part in text.split(",") if part.strip()]


def _fraction_label(value: Fraction) -> str:
    return f"{float(value) * 100:g}".replace(".", "_") + "pct"


def _add_input_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", required=True, help="trace file to read")
    sub.add_argument("--format", choices=("swf", "csv"), default=None,
                     help="input format (default: by file suffix, .swf means swf)")
    sub.add_argument("--user-col", type=int, default=0, help="csv: user column (0-indexed)")
    sub.add_argument("--time-col", type=int, default=1, help="csv: submit-time column")
    sub.add_argument("--group-col", type=int, default=2, help="csv: group column, -1 for none")
    sub.add_argument("--delimiter", default=",", help="csv delimiter")
    sub.add_argument("--no-header", action="store_true", help="csv: first row is data")
    sub.add_argument("--group", default=None, help="restrict to one group")
    sub.add_argument("--min-jobs", type=int, default=None,
                     help="drop users with fewer jobs than this")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosubmit",
        description="Discover co-submitting user communities in job-submission traces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="batch influence matrix and follower reports")
    _add_input_flags(analyze)
    analyze.add_argument("--c-job", type=parse_duration, default=HALF_HOUR_S,
                         help="job gap threshold (seconds, or 30m / 0.5h / 6h); default 0.5h")
    analyze.add_argument("--c-user", type=parse_fraction_list, default=[Fraction(1, 2)],
                         help="user fraction threshold(s), e.g. '50%%' or '0.5,0.8'; default 50%%")
    analyze.add_argument("--threads", type=int, default=1, help="row-parallel workers")
    analyze.add_argument("--no-self-edges", action="store_true",
                         help="exclude self from follower counts in reports")
    analyze.add_argument("--fit-counts", action="store_true",
                         help="fit the power law on raw occurrence counts, not probabilities")
    analyze.add_argument("--out", required=True, help="output directory")

    stream = commands.add_parser("stream", help="streaming replay with convergence curve")
    _add_input_flags(stream)
    stream.add_argument("--c-job", type=parse_duration, default=HALF_HOUR_S)
    stream.add_argument("--c-user", type=parse_fraction, default=Fraction(1, 2))
    stream.add_argument("--checkpoints", type=int, default=200,
                        help="evenly spaced checkpoints before the final 100%% one")
    stream.add_argument("--out", required=True)

    synth = commands.add_parser("synth", help="generate a trace with planted communities")
    synth.add_argument("--dominants", type=int, required=True)
    follower_kind = synth.add_mutually_exclusive_group(required=True)
    follower_kind.add_argument("--followers", type=int, help="fixed followers per dominant")
    follower_kind.add_argument("--follower-exponent", type=float,
                               help="power-law exponent (< 0) for follower counts")
    synth.add_argument("--follower-cap", type=int, default=50,
                       help="largest follower count for the power-law sampler")
    synth.add_argument("--rate", type=float, required=True, help="dominant jobs/hour")
    synth.add_argument("--noise-rate", type=float, required=True, help="follower jobs/hour")
    synth.add_argument("--echo-prob", type=float, required=True,
                       help="chance a follower job echoes its dominant (0..1)")
    synth.add_argument("--echo-offset", type=parse_duration, default=600,
                       help="echo lands within +/- this of the dominant job")
    synth.add_argument("--duration", type=parse_duration, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)

    cdf = commands.add_parser("cdf", help="interarrival CDF and fraction-within report")
    _add_input_flags(cdf)
    cdf.add_argument("--out", required=True)

    return parser


def _load_dataset(args: argparse.Namespace) -> TraceDataset:
    path = Path(args.input)
    fmt = args.format or ("swf" if path.suffix.lower() == ".swf" else "csv")
    if fmt == "swf":
        return parse_swf(path)
    columns = ColumnMap(
        user_col=args.user_col,
        time_col=args.time_col,
        group_col=None if args.group_col < 0 else args.group_col,
        delimiter=args.delimiter,
        has_header=not args.no_header,
    )
    return parse_delimited(path, columns)


def _load_stream(args: argparse.Namespace) -> tuple[TraceDataset, JobStream]:
    dataset = _load_dataset(args)
    stream = normalize(dataset, group=args.group, min_jobs_per_user=args.min_jobs)
    if not stream.records:
        raise ValueError("empty trace: no job records after parsing and filtering")
    return dataset, stream


def _input_digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_run_json(directory: Path, command: str, config: dict) -> None:
    payload = {"tool": "cosubmit", "version": __version__, "command": command, "config": config}
    (directory / "run.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


class _Staging:
    """Assemble outputs in a scratch directory; publish only on success."""

    def __init__(self, out: str) -> None:
        self.out = Path(out)
        parent = self.out.parent if str(self.out.parent) else Path(".")
        parent.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".staging-", dir=parent))

    def __enter__(self) -> Path:
        return self.dir

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            shutil.rmtree(self.dir, ignore_errors=True)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        for item in sorted(self.dir.iterdir()):
            shutil.move(str(item), self.out / item.name)
        self.dir.rmdir()


def cmd_analyze(args: argparse.Namespace) -> int:
    dataset, stream = _load_stream(args)
    thresholds = Thresholds(c_job=args.c_job, c_user=args.c_user[0])
    matrix = influence_matrix(stream, thresholds, threads=max(1, args.threads))
    include_self = not args.no_self_edges

    with _Staging(args.out) as staging:
        write_matrix_csv(matrix, staging / "matrix.csv")
        write_matrix_json(matrix, staging / "matrix.json")
        primary_dominants: list[str] = []
        for c_user in args.c_user:
            label = _fraction_label(c_user)
            graph = extract_followers(matrix, c_user)
            write_edges_csv(graph, matrix, staging / f"edges_{label}.csv")
            write_counts_csv(graph, staging / f"follower_counts_{label}.csv", include_self=include_self)
            counts = follower_counts(graph, include_self=include_self)
            if c_user == args.c_user[0]:
                primary_dominants = dominant_users(graph)
            positive = counts[counts >= 1]
            if positive.size:
                dist = follower_distribution(positive)
                if args.fit_counts:
                    dist = FollowerDistribution(ks=dist.ks, ps=dist.ps * positive.size)
                write_distribution_csv(dist, staging / f"follower_distribution_{label}.csv")
                if len(dist.ks) >= 2:
                    write_fit_json(fit_power_law(dist), staging / f"power_law_{label}.json")
        summary = {
            "users": len(stream.user_registry),
            "jobs": len(stream),
            "parse_errors": dataset.parse_errors,
            "c_job_s": args.c_job,
            "c_user": [float(c) for c in args.c_user],
            "dominant_users": len(primary_dominants),
            "dominant_fraction": len(primary_dominants) / len(stream.user_registry),
        }
        (staging / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                                              encoding="utf-8")
        _write_run_json(staging, "analyze", _resolved_config(args, {
            "c_job_s": args.c_job,
            "c_user": [str(c) for c in args.c_user],
            "threads": max(1, args.threads),
            "include_self": include_self,
            "fit_counts": args.fit_counts,
        }))
    return 0


def cmd_stream(args: argparse.Namespace) -> int:
    _, stream = _load_stream(args)
    thresholds = Thresholds(c_job=args.c_job, c_user=args.c_user)
    if args.checkpoints < 0:
        raise ValueError("--checkpoints must be >= 0")
    series = convergence_run(stream, thresholds, checkpoints=args.checkpoints)

    state = OnlineInfluence(thresholds)
    state.observe_all(stream.records)
    final = state.snapshot().as_matrix(thresholds)
    label = _fraction_label(thresholds.c_user)

    with _Staging(args.out) as staging:
        write_convergence_csv(series, staging / "convergence.csv")
        write_matrix_csv(final, staging / "matrix.csv")
        graph = extract_followers(final, thresholds.c_user)
        write_counts_csv(graph, staging / f"follower_counts_{label}.csv")
        _write_run_json(staging, "stream", _resolved_config(args, {
            "c_job_s": args.c_job,
            "c_user": str(thresholds.c_user),
            "checkpoints": args.checkpoints,
        }))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if not 0.0 <= args.echo_prob <= 1.0:
        raise _UsageError(f"--echo-prob must be in [0, 1], got {args.echo_prob}")
    if args.followers is not None:
        sampler = FixedFollowers(args.followers)
    else:
        try:
            sampler = PowerLawFollowers(exponent=args.follower_exponent, cap=args.follower_cap)
        except ValueError as exc:
            raise _UsageError(str(exc)) from None
    cfg = SynthConfig(
        n_dominant=args.dominants,
        followers_per_dominant=sampler,
        dominant_rate_per_hour=args.rate,
        echo_probability=args.echo_prob,
        echo_offset_s=args.echo_offset,
        noise_rate_per_hour=args.noise_rate,
        duration_s=args.duration,
        seed=args.seed,
    )
    dataset, truth = generate(cfg)
    stream = normalize(dataset)
    with _Staging(args.out) as staging:
        write_canonical(stream, staging / "trace.csv")
        write_ground_truth(truth, staging / "ground_truth.json")
        _write_run_json(staging, "synth", {
            "dominants": args.dominants,
            "followers": args.followers,
            "follower_exponent": args.follower_exponent,
            "follower_cap": args.follower_cap,
            "rate_per_hour": args.rate,
            "noise_rate_per_hour": args.noise_rate,
            "echo_probability": args.echo_prob,
            "echo_offset_s": args.echo_offset,
            "duration_s": args.duration,
            "seed": args.seed,
        })
    return 0


def cmd_cdf(args: argparse.Namespace) -> int:
    _, stream = _load_stream(args)
    cdf = interarrival_cdf(stream)
    report = {
        "jobs": len(stream),
        "gaps": len(stream) - 1,
        "min_gap_s": int(cdf.values[0]),
        "max_gap_s": int(cdf.values[-1]),
        "within_1800s": fraction_within(cdf, HALF_HOUR_S),
    }
    with _Staging(args.out) as staging:
        write_cdf_csv(cdf, staging / "interarrival_cdf.csv")
        (staging / "cdf_report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                                                 encoding="utf-8")
        _write_run_json(staging, "cdf", _resolved_config(args, {}))
    return 0


def _resolved_config(args: argparse.Namespace, extra: dict) -> dict:
    config = {
        "input": args.input,
        "input_sha256": _input_digest(args.input),
        "format": args.format or ("swf" if Path(args.input).suffix.lower() == ".swf" else "csv"),
        "user_col": args.user_col,
        "time_col": args.time_col,
        "group_col": args.group_col,
        "delimiter": args.delimiter,
        "has_header": not args.no_header,
        "group": args.group,
        "min_jobs": args.min_jobs,
    }
    config.update(extra)
    return config


class _UsageError(Exception):
    pass


_COMMANDS = {
    "analyze": cmd_analyze,
    "stream": cmd_stream,
    "synth": cmd_synth,
    "cdf": cmd_cdf,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
