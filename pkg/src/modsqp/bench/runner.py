"""Batch runs over the registry and the JSONL record format."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..driver import SolveReport, SolverOptions, solve
from . import registry


@dataclass
class RunRecord:
    problem: str
    solver_tag: str
    success: bool
    wall_time: float
    total_fevals: int
    majors: int
    minors: int
    f_final: float | None
    max_violation: float | None
    stationarity: float | None
    status: str

    @classmethod
    def from_report(cls, problem: str, solver_tag: str, rep: SolveReport) -> "RunRecord":
        return cls(
            problem=problem,
            solver_tag=solver_tag,
            success=rep.success,
            wall_time=rep.wall_time,
            total_fevals=rep.total_evals,
            majors=rep.iterations,
            minors=rep.minor_iterations,
            f_final=_finite_or_none(rep.f),
            max_violation=_finite_or_none(rep.max_violation),
            stationarity=_finite_or_none(rep.stationarity),
            status=rep.status.value,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False, allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        data = json.loads(line)
        expected = {f.name for f in fields(cls)}
        if set(data) != expected:
            raise ValueError(f"record keys {sorted(data)} do not match {sorted(expected)}")
        return cls(**data)


def _finite_or_none(v: float) -> float | None:
    return float(v) if math.isfinite(v) else None


def resolve_options(preset: str = "default", **overrides) -> SolverOptions:
    return SolverOptions.preset(preset, **{k: v for k, v in overrides.items() if v is not None})


def run_problem(name: str, preset: str | SolverOptions = "default", solver_tag: str | None = None) -> tuple[RunRecord, SolveReport]:
    entry = registry.get(name)
    opts = preset if isinstance(preset, SolverOptions) else resolve_options(preset)
    rep = solve(entry.spec(), opts)
    tag = solver_tag if solver_tag is not None else (preset if isinstance(preset, str) else "custom")
    return RunRecord.from_report(name, tag, rep), rep


def run_suite(preset: str | SolverOptions = "default", solver_tag: str | None = None, names: Iterable[str] | None = None) -> list[RunRecord]:
    return [run_problem(n, preset, solver_tag)[0] for n in (names or registry.names())]


def write_jsonl(records: Iterable[RunRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_jsonl(path) -> list[RunRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [RunRecord.from_json(line) for line in lines if line.strip()]
