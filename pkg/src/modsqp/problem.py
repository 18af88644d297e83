"""Problem definition, canonicalization and guarded evaluation.

User problems are stated as

    minimize f(x)  subject to  c_eq(x) = 0,  c_ineq(x) >= 0,  lower <= x <= upper

and mapped to an all-inequality standard form ``c(x) >= 0`` whose rows are
ordered as equalities, then inequalities, then one row per finite bound. The
equality rows keep their flag so the QP layer can treat them as equalities.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

ObjectiveFn = Callable[[np.ndarray], tuple[float, np.ndarray]]
ConstraintFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


class InvalidSpec(ValueError):
    """Raised when a problem definition is inconsistent."""


class EvaluationError(Exception):
    """Raise from a user evaluator to signal that the point is outside its domain."""


class EvaluationFailure(Exception):
    """An objective or constraint evaluation failed at ``x``.

    ``source`` is ``"objective"`` or the user index of the failing constraint.
    """

    def __init__(self, source: str | int, x: np.ndarray, reason: str = ""):
        self.source = source
        self.x = np.array(x, dtype=float)
        self.reason = reason
        where = "objective" if source == "objective" else f"constraint {source}"
        super().__init__(f"evaluation of {where} failed" + (f": {reason}" if reason else ""))


@dataclass(frozen=True)
class Constraint:
    """One user constraint row: ``fun(x) -> (value, gradient)``."""

    fun: ConstraintFn
    kind: Literal["eq", "ineq"] = "ineq"
    name: str = ""


@dataclass
class ProblemSpec:
    x0: Sequence[float]
    objective: ObjectiveFn
    constraints: Sequence[Constraint] = ()
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None
    name: str = "problem"

    @property
    def n(self) -> int:
        return len(self.x0)


@dataclass(frozen=True)
class RowOrigin:
    """Where a canonical row comes from.

    ``kind`` is ``"user"`` (``index`` is the user constraint index) or
    ``"bound"`` (``index`` is the variable and ``side`` is ``"lower"`` or
    ``"upper"``).
    """

    kind: Literal["user", "bound"]
    index: int
    side: Literal["lower", "upper", ""] = ""


@dataclass
class Evaluation:
    x: np.ndarray
    f: float
    g: np.ndarray
    c: np.ndarray
    J: np.ndarray


@dataclass
class StandardProblem:
    """Canonical form of a :class:`ProblemSpec` plus evaluation counters."""

    name: str
    n: int
    x0: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    objective: ObjectiveFn
    eq_rows: list[tuple[int, Constraint]]
    ineq_rows: list[tuple[int, Constraint]]
    bound_rows: list[RowOrigin]
    n_user: int
    nf: int = 0
    ng: int = 0
    nc: int = 0
    nJ: int = 0
    row_origin: list[RowOrigin] = field(init=False)
    eq_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        self.row_origin = (
            [RowOrigin("user", i) for i, _ in self.eq_rows]
            + [RowOrigin("user", i) for i, _ in self.ineq_rows]
            + list(self.bound_rows)
        )
        self.eq_mask = np.zeros(self.m_total, dtype=bool)
        self.eq_mask[: self.m_eq] = True

    @property
    def m_eq(self) -> int:
        return len(self.eq_rows)

    @property
    def m_ineq(self) -> int:
        return len(self.ineq_rows)

    @property
    def m_bound(self) -> int:
        return len(self.bound_rows)

    @property
    def m_total(self) -> int:
        return self.m_eq + self.m_ineq + self.m_bound

    @property
    def total_evals(self) -> int:
        return self.nf + self.ng + self.nc + self.nJ

    def reset_counters(self) -> None:
        self.nf = self.ng = self.nc = self.nJ = 0


def canonicalize(spec: ProblemSpec) -> StandardProblem:
    """Map ``spec`` to the ordered all-inequality standard form."""
    x0 = np.asarray(spec.x0, dtype=float).ravel()
    n = x0.size
    if n == 0:
        raise InvalidSpec("problem must have at least one variable")
    lower = np.full(n, -np.inf) if spec.lower is None else np.asarray(spec.lower, dtype=float).ravel()
    upper = np.full(n, np.inf) if spec.upper is None else np.asarray(spec.upper, dtype=float).ravel()
    if lower.shape != (n,) or upper.shape != (n,):
        raise InvalidSpec("bound vectors must have the same length as x0")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise InvalidSpec("bounds must not be NaN")
    if np.any(lower > upper):
        j = int(np.flatnonzero(lower > upper)[0])
        raise InvalidSpec(f"lower bound exceeds upper bound for variable {j}")
    if not np.all(np.isfinite(x0)):
        raise InvalidSpec("x0 must be finite")

    eq_rows, ineq_rows = [], []
    for i, con in enumerate(spec.constraints):
        if con.kind == "eq":
            eq_rows.append((i, con))
        elif con.kind == "ineq":
            ineq_rows.append((i, con))
        else:
            raise InvalidSpec(f"constraint {i} has unknown kind {con.kind!r}")

    bound_rows = []
    for j in range(n):
        if np.isfinite(lower[j]):
            bound_rows.append(RowOrigin("bound", j, "lower"))
        if np.isfinite(upper[j]):
            bound_rows.append(RowOrigin("bound", j, "upper"))

    return StandardProblem(
        name=spec.name,
        n=n,
        x0=x0,
        lower=lower,
        upper=upper,
        objective=spec.objective,
        eq_rows=eq_rows,
        ineq_rows=ineq_rows,
        bound_rows=bound_rows,
        n_user=len(spec.constraints),
    )


def _call(fn, x: np.ndarray, source, n: int) -> tuple[float, np.ndarray]:
    try:
        with np.errstate(all="ignore"):
            out = fn(x.copy())
    except (EvaluationError, ArithmeticError, ValueError) as exc:
        raise EvaluationFailure(source, x, str(exc)) from exc
    if out is None:
        raise EvaluationFailure(source, x, "evaluator returned None")
    val, grad = out
    try:
        val = float(val)
    except TypeError as exc:  # complex results from a domain violation
        raise EvaluationFailure(source, x, "non-real value") from exc
    grad = np.asarray(grad, dtype=float).ravel()
    if grad.shape != (n,):
        raise InvalidSpec(f"gradient of {source} has length {grad.size}, expected {n}")
    if not math.isfinite(val) or not np.all(np.isfinite(grad)):
        raise EvaluationFailure(source, x, "non-finite value")
    return val, grad


def evaluate(prob: StandardProblem, x) -> Evaluation:
    """Evaluate ``f, g, c, J`` at ``x``.

    Raises :class:`EvaluationFailure` if any evaluator raises a domain error
    or returns a non-finite value. Counters are incremented for every
    evaluator that was attempted, so a failing objective leaves ``nc`` and
    ``nJ`` untouched.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (prob.n,):
        raise ValueError(f"x has length {x.size}, expected {prob.n}")

    prob.nf += 1
    prob.ng += 1
    f, g = _call(prob.objective, x, "objective", prob.n)

    prob.nc += 1
    prob.nJ += 1
    m = prob.m_total
    c = np.empty(m)
    J = np.zeros((m, prob.n))
    row = 0
    for idx, con in prob.eq_rows + prob.ineq_rows:
        c[row], J[row] = _call(con.fun, x, idx, prob.n)
        row += 1
    for origin in prob.bound_rows:
        j = origin.index
        if origin.side == "lower":
            c[row] = x[j] - prob.lower[j]
            J[row, j] = 1.0
        else:
            c[row] = prob.upper[j] - x[j]
            J[row, j] = -1.0
        row += 1
    return Evaluation(x=x, f=f, g=g, c=c, J=J)


def project_to_bounds(x, lower, upper) -> np.ndarray:
    return np.minimum(np.asarray(upper, dtype=float), np.maximum(np.asarray(lower, dtype=float), np.asarray(x, dtype=float)))


def recombine_pairs(lam_expanded, pair_map: Sequence[tuple[int, float] | None], m: int) -> np.ndarray:
    """Fold multipliers of split rows back onto canonical rows.

    ``pair_map[j]`` is ``(row, sign)`` for expanded row ``j`` or ``None`` for
    rows with no canonical counterpart. Equality pairs recombine as
    ``lambda = lambda_plus - lambda_minus``.
    """
    lam_expanded = np.asarray(lam_expanded, dtype=float)
    if lam_expanded.shape != (len(pair_map),):
        raise ValueError("multiplier vector does not match the pair map")
    lam = np.zeros(m)
    for j, entry in enumerate(pair_map):
        if entry is not None:
            row, sign = entry
            lam[row] += sign * lam_expanded[j]
    return lam


@dataclass
class UserMultipliers:
    constraints: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def multipliers_to_user(lam_std, prob: StandardProblem, pair_map=None) -> UserMultipliers:
    """Report canonical multipliers in the user's constraint order.

    Bound multipliers are returned separately, zero where a bound is infinite.
    """
    lam_std = np.asarray(lam_std, dtype=float).ravel()
    if pair_map is not None:
        lam_std = recombine_pairs(lam_std, pair_map, prob.m_total)
    if lam_std.shape != (prob.m_total,):
        raise ValueError(f"expected {prob.m_total} multipliers, got {lam_std.size}")
    user = np.zeros(prob.n_user)
    lo = np.zeros(prob.n)
    up = np.zeros(prob.n)
    for row, origin in enumerate(prob.row_origin):
        if origin.kind == "user":
            user[origin.index] = lam_std[row]
        elif origin.side == "lower":
            lo[origin.index] = lam_std[row]
        else:
            up[origin.index] = lam_std[row]
    return UserMultipliers(user, lo, up)
