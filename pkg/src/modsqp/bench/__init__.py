"""Problem registry, batch runner and benchmark profiles."""

from .profiles import EmptyTable, ProfileTable, build_profile, performance_ratios, profile_curve
from .registry import REGISTRY, UnknownProblem
from .runner import RunRecord, read_jsonl, run_problem, run_suite, write_jsonl

__all__ = [
    "EmptyTable",
    "ProfileTable",
    "REGISTRY",
    "RunRecord",
    "UnknownProblem",
    "build_profile",
    "performance_ratios",
    "profile_curve",
    "read_jsonl",
    "run_problem",
    "run_suite",
    "write_jsonl",
]
