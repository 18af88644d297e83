"""Major-iteration loop of the SQP method."""

from __future__ import annotations

import enum
import math
from decimal import Decimal, localcontext
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import elastic, hessian, linesearch, merit
from .problem import (
    Evaluation,
    EvaluationFailure,
    ProblemSpec,
    StandardProblem,
    UserMultipliers,
    canonicalize,
    evaluate,
    multipliers_to_user,
    project_to_bounds,
)
from .qpcore import QPData, QPStatus, solve_qp


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    UNDEFINED_REGION = "undefined_region"
    INITIAL_EVALUATION_FAILED = "initial_evaluation_failed"


MESSAGES = {
    SolveStatus.OPTIMAL: "Optimization terminated successfully",
    SolveStatus.MAX_ITERATIONS: "Iteration limit reached",
    SolveStatus.INFEASIBLE: "Augmented QP subproblem could not be solved; problem declared infeasible",
    SolveStatus.UNDEFINED_REGION: "Unable to make progress around undefined region",
    SolveStatus.INITIAL_EVALUATION_FAILED: "Function evaluation failed at both the bound-projected and the user starting point",
}


class InitialEvaluationFailed(Exception):
    pass


@dataclass(frozen=True)
class SolverOptions:
    maxiter: int = 1000
    opt_tol: float = 1e-6
    feas_tol: float = 1e-6
    beta_min: float = 1e-10
    gamma_init: float = elastic.GAMMA_INIT
    gamma_max: float = elastic.GAMMA_MAX
    gamma_persist: int = elastic.GAMMA_PERSIST
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    record_history: bool = False

    def __post_init__(self):
        if self.maxiter < 1:
            raise ValueError("maxiter must be at least 1")
        for name in ("opt_tol", "feas_tol", "beta_min", "gamma_init", "gamma_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def preset(cls, name: str, **overrides) -> "SolverOptions":
        if name not in PRESETS:
            raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(**{**PRESETS[name], **overrides})


PRESETS = {
    "default": {},
    # looser tolerances and a shorter budget used for cross-solver comparison runs
    "paper-benchmark": {"maxiter": 250, "opt_tol": 1.22e-4, "feas_tol": 2e-6},
}


@dataclass
class ConvergenceStatus:
    converged: bool
    feasible: bool
    max_violation: float
    stationarity: float
    complementarity: float
    min_multiplier: float
    tau_f: float
    tau_o: float


def _scaled_tolerance(tol: float, v) -> float:
    # tol * (1 + ||v||_inf) rounded once from the decimal product, so decimal
    # inputs such as 2e-6 and 9 give 2e-5 rather than 1.9999999999999998e-05
    norm = float(np.abs(v).max(initial=0.0))
    if not math.isfinite(norm):
        return math.inf
    with localcontext() as ctx:
        ctx.prec = 40
        return float(Decimal(repr(float(tol))) * (1 + Decimal(repr(norm))))


def feasibility_tolerance(feas_tol: float, x) -> float:
    return _scaled_tolerance(feas_tol, x)


def optimality_tolerance(opt_tol: float, lam) -> float:
    return _scaled_tolerance(opt_tol, lam)


def kkt_measures(ev: Evaluation, lam, eq_mask):
    lam = np.asarray(lam, dtype=float)
    eq_mask = np.asarray(eq_mask, dtype=bool)
    c = ev.c
    viol = np.where(eq_mask, np.abs(c), np.maximum(0.0, -c))
    stat = ev.g - ev.J.T @ lam if lam.size else ev.g
    return (
        float(viol.max(initial=0.0)),
        float(np.abs(stat).max(initial=0.0)),
        float(np.abs(c * lam).max(initial=0.0)),
        float(lam[~eq_mask].min(initial=0.0)),
    )


def check_convergence(ev: Evaluation, x, lam, opts: SolverOptions, eq_mask=None) -> ConvergenceStatus:
    """Scaled first-order tests.

    Equality rows are tested two-sided for feasibility and are exempt from the
    multiplier sign test.
    """
    if eq_mask is None:
        eq_mask = np.zeros(ev.c.size, dtype=bool)
    tau_f = feasibility_tolerance(opts.feas_tol, x)
    tau_o = optimality_tolerance(opts.opt_tol, lam)
    viol, stat, comp, lam_min = kkt_measures(ev, lam, eq_mask)
    feasible = viol <= tau_f
    converged = feasible and lam_min >= -tau_o and comp <= tau_o and stat <= tau_o
    return ConvergenceStatus(converged, feasible, viol, stat, comp, lam_min, tau_f, tau_o)


@dataclass
class IterateState:
    k: int
    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    rho: np.ndarray
    merit_ctx: merit.MeritContext
    H: hessian.HessianApprox
    elastic_state: elastic.ElasticState
    ev: Evaluation
    history: list[dict] = field(default_factory=list)


@dataclass
class SolveReport:
    status: SolveStatus
    x: np.ndarray
    f: float
    multipliers: UserMultipliers | None
    lam_canonical: np.ndarray
    max_violation: float
    stationarity: float
    complementarity: float
    min_multiplier: float
    iterations: int
    minor_iterations: int
    nf: int
    ng: int
    nc: int
    nJ: int
    wall_time: float
    message: str
    elastic_iterations: int = 0
    history: list[dict] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    @property
    def total_evals(self) -> int:
        return self.nf + self.ng + self.nc + self.nJ


HISTORY_FIELDS = ("k", "f", "max_violation", "stationarity", "alpha", "rho_norm", "gamma", "minors")


def initialize(prob: StandardProblem, opts: SolverOptions) -> IterateState:
    x_s = project_to_bounds(prob.x0, prob.lower, prob.upper)
    try:
        x, ev = x_s, evaluate(prob, x_s)
    except EvaluationFailure:
        if np.array_equal(x_s, prob.x0):
            raise InitialEvaluationFailed(MESSAGES[SolveStatus.INITIAL_EVALUATION_FAILED]) from None
        try:
            x, ev = prob.x0.copy(), evaluate(prob, prob.x0)
        except EvaluationFailure:
            raise InitialEvaluationFailed(MESSAGES[SolveStatus.INITIAL_EVALUATION_FAILED]) from None
    m = prob.m_total
    zeros = np.zeros(m)
    return IterateState(
        k=0,
        x=x,
        lam=zeros.copy(),
        s=zeros.copy(),
        rho=zeros.copy(),
        merit_ctx=merit.MeritContext(lam=zeros, s=zeros, rho=zeros),
        H=hessian.reset(prob.n),
        elastic_state=elastic.ElasticState(gamma=opts.gamma_init),
        ev=ev,
    )


def _search_direction(prob, st: IterateState, opts):
    """Solve the QP (resetting H once if needed), else the elastic QP.

    Returns ``(p, lam_hat, minors, used_elastic)`` or ``None`` when even the
    elastic problem fails.
    """
    ev = st.ev
    qp = QPData(H=st.H.matrix, g0=ev.g, A=ev.J, b=-ev.c, n_eq=prob.m_eq)
    sol = solve_qp(qp)
    minors = sol.iterations
    if sol.status is QPStatus.NOT_POSITIVE_DEFINITE:
        st.H = hessian.reset(prob.n)
        qp = replace(qp, H=st.H.matrix)
        sol = solve_qp(qp)
        minors += sol.iterations
        if sol.status is QPStatus.NOT_POSITIVE_DEFINITE:
            raise RuntimeError("identity Hessian rejected by the QP factorization")

    infeasible = sol.status is not QPStatus.OPTIMAL
    st.elastic_state = elastic.update_gamma(
        st.elastic_state, infeasible, opts.gamma_init, opts.gamma_max, opts.gamma_persist
    )
    if not infeasible:
        return sol.p, sol.lam, minors, False

    aqp, pair_map = elastic.build_augmented_qp(qp, ev.c, prob.eq_mask, st.elastic_state.gamma)
    asol = solve_qp(aqp)
    minors += asol.iterations
    if not asol.ok:
        return None
    p, lam_hat, _ = elastic.extract_search_direction(asol, prob.n, pair_map, prob.m_total)
    return p, lam_hat, minors, True


def solve(problem: ProblemSpec | StandardProblem, opts: SolverOptions | None = None) -> SolveReport:
    opts = opts or SolverOptions()
    prob = canonicalize(problem) if isinstance(problem, ProblemSpec) else problem
    t0 = time.perf_counter()
    minors_total = 0
    elastic_iters = 0

    def report(status: SolveStatus, st: IterateState | None) -> SolveReport:
        if st is None:
            x = prob.x0.copy()
            return SolveReport(
                status, x, math.nan, None, np.zeros(prob.m_total), math.nan, math.nan, math.nan, math.nan,
                0, 0, prob.nf, prob.ng, prob.nc, prob.nJ, time.perf_counter() - t0, MESSAGES[status],
            )
        viol, stat, comp, lam_min = kkt_measures(st.ev, st.lam, prob.eq_mask)
        return SolveReport(
            status=status,
            x=st.x.copy(),
            f=st.ev.f,
            multipliers=multipliers_to_user(st.lam, prob),
            lam_canonical=st.lam.copy(),
            max_violation=viol,
            stationarity=stat,
            complementarity=comp,
            min_multiplier=lam_min,
            iterations=st.k,
            minor_iterations=minors_total,
            nf=prob.nf,
            ng=prob.ng,
            nc=prob.nc,
            nJ=prob.nJ,
            wall_time=time.perf_counter() - t0,
            message=MESSAGES[status],
            elastic_iterations=elastic_iters,
            history=st.history,
        )

    try:
        st = initialize(prob, opts)
    except InitialEvaluationFailed:
        return report(SolveStatus.INITIAL_EVALUATION_FAILED, None)

    if check_convergence(st.ev, st.x, st.lam, opts, prob.eq_mask).converged:
        return report(SolveStatus.OPTIMAL, st)

    eq_mask = prob.eq_mask
    while st.k < opts.maxiter:
        ev = st.ev
        st.s = merit.slack_reset(ev.c, st.lam, st.rho, eq_mask)

        found = _search_direction(prob, st, opts)
        if found is None:
            return report(SolveStatus.INFEASIBLE, st)
        p, lam_hat, minors, used_elastic = found
        minors_total += minors
        elastic_iters += used_elastic

        try:
            beta, ev_beta = linesearch.backtrack_to_defined(prob, st.x, p, opts.beta_min)
        except linesearch.StepTooSmall:
            return report(SolveStatus.UNDEFINED_REGION, st)

        ray = merit.SearchRay.from_qp(ev, p, st.lam, lam_hat, st.s)
        v = ev.c - st.s
        pHp = float(p @ st.H.matrix @ p)
        delta = merit.required_penalty_mass(ev.g, p, ray.q, st.lam, v, pHp)
        rho_star = merit.penalty_star(v, delta)
        st.rho = merit.damp_penalties(st.rho, rho_star, st.merit_ctx.delta_rho)
        st.merit_ctx = merit.update_delta_rho(st.merit_ctx, merit.rho_norm(st.rho))

        phi0 = merit.merit_value(ev.f, ev.c, st.lam, st.s, st.rho)
        dphi0 = merit.slope_at_zero(ev.g, p, ray.q, st.lam, v, st.rho)
        evaluator = linesearch.RayEvaluator(prob, st.x, ray, st.lam, st.s, st.rho, cache={beta: ev_beta})
        res = linesearch.strong_wolfe(evaluator, phi0, dphi0, beta, beta, opts.wolfe_c1, opts.wolfe_c2)
        if not res.ok:
            l1 = linesearch.L1Ray(prob, st.x, p, lam_hat, eq_mask, cache=evaluator.cache)
            res = linesearch.l1_fallback(l1, l1.value(ev), beta, float(p @ p))
            if not res.ok:
                return report(SolveStatus.UNDEFINED_REGION, st)

        alpha = res.alpha
        ev_new = res.evaluation
        lam_new = st.lam + alpha * ray.q
        s_new = st.s + alpha * ray.r

        d = alpha * p
        if np.linalg.norm(d) >= 1e-14 * (1.0 + np.linalg.norm(st.x)):
            pair = hessian.curvature_pair(ev.g, ev_new.g, ev.J, ev_new.J, lam_new, alpha, p)
            try:
                st.H = hessian.damped_update(st.H, pair)
            except hessian.DegenerateStep:
                st.H = hessian.reset(prob.n)

        st.x, st.lam, st.s, st.ev = ev_new.x, lam_new, s_new, ev_new
        st.k += 1
        st.merit_ctx = replace(st.merit_ctx, lam=st.lam, s=st.s, rho=st.rho)

        conv = check_convergence(st.ev, st.x, st.lam, opts, eq_mask)
        if opts.record_history:
            st.history.append(
                {
                    "k": st.k,
                    "f": st.ev.f,
                    "max_violation": conv.max_violation,
                    "stationarity": conv.stationarity,
                    "alpha": alpha,
                    "rho_norm": merit.rho_norm(st.rho),
                    "gamma": st.elastic_state.gamma if used_elastic else 0.0,
                    "minors": minors,
                    "x": st.x.copy(),
                    "elastic": used_elastic,
                    "linesearch": res.status.value,
                    "at_bound": res.at_bound,
                    "phi0": phi0,
                    "dphi0": dphi0,
                }
            )
        if conv.converged:
            return report(SolveStatus.OPTIMAL, st)

    return report(SolveStatus.MAX_ITERATIONS, st)
