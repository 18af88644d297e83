"""Recovery from inconsistent QP subproblems via an elastic variable.

When the linearized constraints admit no step, the subproblem is relaxed to

    minimize    g'p + 0.5 p'Hp + 0.5 gamma eta^2
    subject to  c_i (1 - sigma_i eta) + grad c_i' p >= 0,   0 <= eta <= 1

with ``sigma_i = 1`` exactly for the rows violated at the current point.
Equality rows are split into two opposing inequalities first.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .problem import recombine_pairs
from .qpcore import QPData, QPSolution

GAMMA_INIT = 1e6
GAMMA_MAX = 1e12
GAMMA_PERSIST = 25


@dataclass(frozen=True)
class ElasticState:
    gamma: float = GAMMA_INIT
    consecutive_infeasible: int = 0
    was_feasible_last: bool = True

    @property
    def active(self) -> bool:
        return not self.was_feasible_last


def update_gamma(
    state: ElasticState,
    plain_qp_infeasible: bool,
    gamma_init: float = GAMMA_INIT,
    gamma_max: float = GAMMA_MAX,
    persist: int = GAMMA_PERSIST,
) -> ElasticState:
    """Advance the penalty schedule by one major iteration.

    gamma restarts at ``gamma_init`` on each feasible-to-infeasible transition
    and is multiplied by 10 (capped at ``gamma_max``) once infeasibility has
    persisted for ``persist`` iterations at a fixed value.
    """
    if not plain_qp_infeasible:
        return replace(state, consecutive_infeasible=0, was_feasible_last=True)
    if state.was_feasible_last:
        return ElasticState(gamma=gamma_init, consecutive_infeasible=1, was_feasible_last=False)
    count = state.consecutive_infeasible + 1
    gamma = state.gamma
    if count >= persist:
        gamma, count = min(10.0 * gamma, gamma_max), 0
    return ElasticState(gamma=gamma, consecutive_infeasible=count, was_feasible_last=False)


# (canonical row, sign) per augmented row; None for the two eta bound rows
PairMap = list[tuple[int, float] | None]


def build_augmented_qp(qp: QPData, c_k, eq_flags, gamma: float) -> tuple[QPData, PairMap]:
    """Elastic QP over ``(p, eta)`` built from the plain subproblem ``qp``.

    ``qp`` carries ``A = J(x_k)``; its ``b`` is not used, the constants come
    from ``c_k``. Returns the augmented data and the map from augmented rows
    back to canonical rows.
    """
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    c_k = np.asarray(c_k, dtype=float).ravel()
    eq_flags = np.asarray(eq_flags, dtype=bool).ravel()
    n, m = qp.n, qp.m
    if c_k.shape != (m,) or eq_flags.shape != (m,):
        raise ValueError("c_k and eq_flags must have one entry per constraint row")

    rows, rhs, pair_map = [], [], []

    def push(grad, const, origin):
        sigma = 1.0 if const < 0.0 else 0.0
        rows.append(np.append(grad, -sigma * const))
        rhs.append(-const)
        pair_map.append(origin)

    for i in range(m):
        push(qp.A[i], c_k[i], (i, 1.0))
        if eq_flags[i]:
            push(-qp.A[i], -c_k[i], (i, -1.0))

    eta_lo = np.zeros(n + 1)
    eta_lo[n] = 1.0
    rows += [eta_lo, -eta_lo]
    rhs += [0.0, -1.0]
    pair_map += [None, None]

    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = qp.H
    H[n, n] = gamma
    aqp = QPData(H=H, g0=np.append(qp.g0, 0.0), A=np.array(rows), b=np.array(rhs), n_eq=0)
    return aqp, pair_map


def extract_search_direction(sol: QPSolution, n: int, pair_map: PairMap, m: int | None = None):
    """Return ``(p, lam_hat, eta)`` from an optimal elastic solution."""
    if m is None:
        m = 1 + max((e[0] for e in pair_map if e is not None), default=-1)
    p = sol.p[:n].copy()
    eta = float(np.clip(sol.p[n], 0.0, 1.0))
    lam = recombine_pairs(sol.lam, pair_map, m)
    return p, lam, eta
