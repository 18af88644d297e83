"""Dense dual active-set solver for strictly convex QPs (Goldfarb-Idnani).

Solves

    minimize    0.5 p'Hp + g0'p
    subject to  a_i'p  = b_i   for i < n_eq
                a_i'p >= b_i   otherwise

starting from the unconstrained minimizer and adding violated constraints one
at a time. The active-set factorization is ``J'N = [R; 0]`` with
``J = L^{-T} Q``, updated by Givens rotations on every add and drop.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

_PIVOT_RTOL = 1e-14
_DEPENDENCY_RTOL = 1e-12


class QPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NOT_POSITIVE_DEFINITE = "not_positive_definite"
    MAX_ITERATIONS = "max_minor_iterations"


@dataclass
class QPData:
    H: np.ndarray
    g0: np.ndarray
    A: np.ndarray
    b: np.ndarray
    n_eq: int = 0

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.g0 = np.asarray(self.g0, dtype=float).ravel()
        n = self.g0.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.H.shape != (n, n):
            raise ValueError("H must be n x n")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError("b must have one entry per row of A")
        if not 0 <= self.n_eq <= self.A.shape[0]:
            raise ValueError("n_eq must lie in [0, m]")

    @property
    def n(self) -> int:
        return self.g0.size

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def objective(self, p) -> float:
        return float(0.5 * p @ self.H @ p + self.g0 @ p)


@dataclass
class QPSolution:
    p: np.ndarray
    lam: np.ndarray
    active: tuple[int, ...]
    iterations: int
    status: QPStatus
    dual_trace: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is QPStatus.OPTIMAL


def _givens(a: float, b: float) -> tuple[float, float, float]:
    h = math.hypot(a, b)
    return a / h, b / h, h


class _ActiveSet:
    """Active constraint normals with the factorization ``J'N = [R; 0]``."""

    def __init__(self, J: np.ndarray):
        n = J.shape[0]
        self.J = J
        self.R = np.zeros((n, n))
        self.rows: list[int] = []
        self.signs: list[float] = []
        self.u = np.zeros(0)

    @property
    def q(self) -> int:
        return len(self.rows)

    def directions(self, normal: np.ndarray):
        q = self.q
        d = self.J.T @ normal
        z = self.J[:, q:] @ d[q:]
        r = solve_triangular(self.R[:q, :q], d[:q]) if q else np.zeros(0)
        dependent = np.linalg.norm(d[q:]) <= _DEPENDENCY_RTOL * max(np.linalg.norm(d), np.finfo(float).tiny)
        return d, z, r, dependent

    def add(self, row: int, sign: float, d: np.ndarray, u_new: float) -> None:
        J, q, n = self.J, self.q, self.J.shape[0]
        d = d.copy()
        for j in range(n - 1, q, -1):
            if d[j] == 0.0:
                continue
            c, s, h = _givens(d[j - 1], d[j])
            d[j - 1], d[j] = h, 0.0
            col = J[:, j - 1].copy()
            J[:, j - 1] = c * col + s * J[:, j]
            J[:, j] = -s * col + c * J[:, j]
        self.R[: q + 1, q] = d[: q + 1]
        self.rows.append(row)
        self.signs.append(sign)
        self.u = np.append(self.u, u_new)

    def drop(self, pos: int) -> None:
        J, q = self.J, self.q
        R = np.delete(self.R[:q, :q], pos, axis=1)
        for i in range(pos, q - 1):
            c, s, _ = _givens(R[i, i], R[i + 1, i])
            ri = R[i, i:].copy()
            R[i, i:] = c * ri + s * R[i + 1, i:]
            R[i + 1, i:] = -s * ri + c * R[i + 1, i:]
            R[i + 1, i] = 0.0
            col = J[:, i].copy()
            J[:, i] = c * col + s * J[:, i + 1]
            J[:, i + 1] = -s * col + c * J[:, i + 1]
        self.R[:] = 0.0
        self.R[: q - 1, : q - 1] = R[: q - 1, :]
        del self.rows[pos]
        del self.signs[pos]
        self.u = np.delete(self.u, pos)


def _factor(H: np.ndarray) -> np.ndarray | None:
    if not np.all(np.isfinite(H)):
        return None
    try:
        L = np.linalg.cholesky(0.5 * (H + H.T))
    except np.linalg.LinAlgError:
        return None
    piv = np.diag(L) ** 2
    if piv.min() <= _PIVOT_RTOL * max(piv.max(), 1.0):
        return None
    return L


def solve_qp(data: QPData) -> QPSolution:
    n, m, n_eq = data.n, data.m, data.n_eq
    A, b, H, g0 = data.A, data.b, data.H, data.g0

    L = _factor(H)
    if L is None:
        return QPSolution(np.zeros(n), np.zeros(m), (), 0, QPStatus.NOT_POSITIVE_DEFINITE)

    J = solve_triangular(L, np.eye(n), lower=True).T
    p = -J @ (J.T @ g0)
    act = _ActiveSet(J)
    row_scale = 1.0 + np.abs(b)
    row_norm = np.abs(A).max(axis=1, initial=0.0)
    skipped: set[int] = set()
    trace = [data.objective(p)]
    it, cap = 0, 50 * (m + n)

    def result(status: QPStatus) -> QPSolution:
        lam = np.zeros(m)
        for row, sign, uj in zip(act.rows, act.signs, act.u):
            lam[row] = sign * uj
        return QPSolution(p.copy(), lam, tuple(act.rows), it, status, trace)

    while True:
        pscale = np.abs(p).max(initial=0.0)
        k = next((i for i in range(n_eq) if i not in act.rows and i not in skipped), None)
        if k is None:
            slack = A[n_eq:] @ p - b[n_eq:]
            tol = 1e-12 * (row_scale[n_eq:] + row_norm[n_eq:] * pscale)
            violated = slack < -tol
            if act.rows:
                violated[[i - n_eq for i in act.rows if i >= n_eq]] = False
            if not violated.any():
                return result(QPStatus.OPTIMAL)
            cand = np.flatnonzero(violated)
            k = int(cand[np.argmin(slack[cand])]) + n_eq

        sign = -1.0 if (k < n_eq and A[k] @ p - b[k] > 0.0) else 1.0
        normal, rhs = sign * A[k], sign * b[k]
        u_new = 0.0

        while True:
            it += 1
            if it > cap:
                return result(QPStatus.MAX_ITERATIONS)
            d, z, r, dependent = act.directions(normal)
            s_k = normal @ p - rhs

            t1, drop_pos = math.inf, None
            for j, row in enumerate(act.rows):
                if row >= n_eq and r[j] > 0.0:
                    ratio = act.u[j] / r[j]
                    if ratio < t1 or (ratio == t1 and row < act.rows[drop_pos]):
                        t1, drop_pos = ratio, j
            t2 = math.inf if dependent else -s_k / float(z @ normal)
            t = min(t1, t2)

            if math.isinf(t):
                if k < n_eq and abs(s_k) <= 1e-9 * (row_scale[k] + row_norm[k] * pscale):
                    # consistent and implied by the equalities already active
                    skipped.add(k)
                    break
                return result(QPStatus.INFEASIBLE)

            if math.isinf(t2):
                act.u = act.u - t * r
                u_new += t
                act.u[drop_pos] = 0.0
                act.drop(drop_pos)
                trace.append(data.objective(p) - u_new * (normal @ p - rhs))
                continue

            p = p + t * z
            act.u = act.u - t * r
            u_new += t
            if t == t2:
                act.add(k, sign, d, u_new)
                trace.append(data.objective(p))
                break
            act.u[drop_pos] = 0.0
            act.drop(drop_pos)
            trace.append(data.objective(p) - u_new * (normal @ p - rhs))


@dataclass
class KKTResiduals:
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity, self.primal, self.dual, self.complementarity)


def verify_qp_kkt(data: QPData, sol: QPSolution) -> KKTResiduals:
    """Maximum KKT residuals of ``sol`` for ``data``; a test harness, not used by the solver."""
    p, lam, ne = sol.p, sol.lam, data.n_eq
    stat = data.H @ p + data.g0 - data.A.T @ lam
    slack = data.A @ p - data.b
    primal = np.concatenate([np.abs(slack[:ne]), np.maximum(0.0, -slack[ne:])])
    return KKTResiduals(
        stationarity=float(np.abs(stat).max(initial=0.0)),
        primal=float(primal.max(initial=0.0)),
        dual=float(np.maximum(0.0, -lam[ne:]).max(initial=0.0)),
        complementarity=float(np.abs(lam[ne:] * slack[ne:]).max(initial=0.0)),
    )
