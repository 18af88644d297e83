"""Dolan-More performance profiles and data profiles.

For each problem the cost of every successful solver is divided by the best
successful cost; failures get ``beta * r_max``. The profile of solver ``s``
is the fraction of problems with ``log2(r_ps) <= tau`` on
``tau in [0, log2(r_max)]``.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .runner import RunRecord

MEASURES = ("time", "fevals")


class EmptyTable(ValueError):
    """No problem was solved by any solver."""


@dataclass
class ProfileTable:
    solvers: list[str]
    problems: list[str]
    measure: str
    ratios: np.ndarray  # (n_problems, n_solvers)
    r_max: float
    beta: float
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    curves: dict[str, np.ndarray] = field(default_factory=dict)


def _cost(rec: RunRecord, measure: str) -> float:
    if measure == "time":
        return float(rec.wall_time)
    if measure == "fevals":
        return float(rec.total_fevals)
    raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")


def performance_ratios(records: Sequence[RunRecord], beta: float = 2.0, measure: str = "time") -> ProfileTable:
    if not beta > 1.0:
        raise ValueError("beta must exceed 1")
    solvers = sorted({r.solver_tag for r in records})
    problems_all = sorted({r.problem for r in records})
    table: dict[tuple[str, str], RunRecord] = {}
    for r in records:
        key = (r.problem, r.solver_tag)
        if key in table:
            raise ValueError(f"duplicate record for problem {r.problem!r}, solver {r.solver_tag!r}")
        table[key] = r
    missing = [(p, s) for p in problems_all for s in solvers if (p, s) not in table]
    if missing:
        raise ValueError(f"missing records: {missing[:5]}")

    problems = [p for p in problems_all if any(table[p, s].success for s in solvers)]
    if not problems:
        raise EmptyTable("every run failed; no performance ratio exists")

    # a zero time would make every ratio infinite; floor at one microsecond
    floor = 1e-6 if measure == "time" else 0.0
    ratios = np.full((len(problems), len(solvers)), np.nan)
    for i, p in enumerate(problems):
        costs = [max(_cost(table[p, s], measure), floor) if table[p, s].success else None for s in solvers]
        best = min(c for c in costs if c is not None)
        for j, c in enumerate(costs):
            if c is not None:
                ratios[i, j] = c / best
    r_max = float(np.nanmax(ratios))
    ratios[np.isnan(ratios)] = beta * r_max
    return ProfileTable(solvers, problems, measure, ratios, r_max, beta)


def profile_curve(table: ProfileTable, grid_size: int = 101) -> ProfileTable:
    """Fill ``table.tau`` and ``table.curves`` on a uniform grid with both endpoints."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    tau = np.linspace(0.0, np.log2(table.r_max), grid_size)
    logs = np.log2(table.ratios)
    n_p = len(table.problems)
    table.tau = tau
    table.curves = {
        s: (logs[:, j][None, :] <= tau[:, None]).sum(axis=1) / n_p for j, s in enumerate(table.solvers)
    }
    return table


def build_profile(records, measure="time", beta=2.0, grid_size=101) -> ProfileTable:
    return profile_curve(performance_ratios(records, beta, measure), grid_size)


def to_csv(table: ProfileTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", *table.solvers])
    for i, t in enumerate(table.tau):
        w.writerow([repr(float(t)), *(repr(float(table.curves[s][i])) for s in table.solvers)])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], np.ndarray, dict[str, np.ndarray]]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "tau":
        raise ValueError("profile CSV must start with a 'tau' column")
    data = np.array([[float(v) for v in row] for row in body]).reshape(len(body), len(header))
    return header[1:], data[:, 0], {s: data[:, j + 1] for j, s in enumerate(header[1:])}
