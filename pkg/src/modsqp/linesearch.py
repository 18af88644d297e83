"""Step length selection along an SQP search direction.

Three pieces: halving until the model functions are defined, a strong Wolfe
search on the augmented Lagrangian, and an Armijo backtrack on an l1 penalty
function used when the Wolfe search gives up.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .merit import SearchRay, merit_slope, merit_value
from .problem import Evaluation, EvaluationFailure, StandardProblem, evaluate


class StepTooSmall(Exception):
    """No defined point was found along the direction above the minimum step."""


class LineSearchStatus(str, enum.Enum):
    WOLFE = "wolfe_satisfied"
    FALLBACK = "fallback_accepted"
    FAILED = "failed"


@dataclass
class LineSearchResult:
    alpha: float
    status: LineSearchStatus
    evals: int
    evaluation: Evaluation | None
    phi: float = math.nan
    dphi: float = math.nan
    at_bound: bool = False

    @property
    def ok(self) -> bool:
        return self.status is not LineSearchStatus.FAILED


class _Ray:
    """Evaluation along ``x + alpha p`` with a per-alpha cache."""

    def __init__(self, prob: StandardProblem, x, p, cache: dict[float, Evaluation] | None = None):
        self.prob = prob
        self.x = np.asarray(x, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.cache = dict(cache or {})
        self.evals = 0

    def evaluation(self, alpha: float) -> Evaluation:
        ev = self.cache.get(alpha)
        if ev is None:
            self.evals += 1
            ev = evaluate(self.prob, self.x + alpha * self.p)
            self.cache[alpha] = ev
        return ev


class RayEvaluator(_Ray):
    """``alpha -> (phi, dphi)`` for the augmented Lagrangian merit function."""

    def __init__(self, prob, x, ray: SearchRay, lam, s, rho, cache=None):
        super().__init__(prob, x, ray.p, cache)
        self.ray = ray
        self.lam = np.asarray(lam, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.rho = np.asarray(rho, dtype=float)

    def __call__(self, alpha: float) -> tuple[float, float, Evaluation]:
        ev = self.evaluation(alpha)
        lam_a = self.lam + alpha * self.ray.q
        s_a = self.s + alpha * self.ray.r
        phi = merit_value(ev.f, ev.c, lam_a, s_a, self.rho)
        dphi = merit_slope(ev, self.ray, lam_a, s_a, self.rho)
        return phi, dphi, ev


class L1Ray(_Ray):
    """``alpha -> f + mu * sum(violation)`` with ``mu = 2 ||lam_hat||_inf + 1``."""

    def __init__(self, prob, x, p, lam_hat, eq_mask, cache=None):
        super().__init__(prob, x, p, cache)
        self.mu = 2.0 * float(np.abs(lam_hat).max(initial=0.0)) + 1.0
        self.eq_mask = np.asarray(eq_mask, dtype=bool)

    def value(self, ev: Evaluation) -> float:
        viol = np.where(self.eq_mask, np.abs(ev.c), np.maximum(0.0, -ev.c))
        return float(ev.f + self.mu * viol.sum())

    def __call__(self, alpha: float) -> tuple[float, Evaluation]:
        ev = self.evaluation(alpha)
        return self.value(ev), ev


def backtrack_to_defined(prob: StandardProblem, x, p, beta_min: float = 1e-10) -> tuple[float, Evaluation]:
    """Largest ``beta`` in ``1, 1/2, 1/4, ...`` at which evaluation succeeds."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    beta = 1.0
    while beta >= beta_min:
        try:
            return beta, evaluate(prob, x + beta * p)
        except EvaluationFailure:
            beta *= 0.5
    raise StepTooSmall("Unable to make progress around undefined region")


def _cubic_min(a, fa, da, b, fb, db) -> float | None:
    """Minimizer of the cubic interpolating two points with slopes, if it exists."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0.0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0.0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if math.isfinite(t) else None


def strong_wolfe(
    ray: RayEvaluator,
    phi0: float,
    dphi0: float,
    alpha_init: float,
    alpha_max: float,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 25,
) -> LineSearchResult:
    """Bracketing and zoom search for a strong Wolfe step in ``(0, alpha_max]``.

    Evaluation failures shrink the admissible interval. If the sufficient
    decrease condition holds at ``alpha_max`` while the slope is still
    negative, ``alpha_max`` is returned with ``at_bound=True``.
    """
    start = ray.evals
    if not (dphi0 < 0.0 and math.isfinite(dphi0)):
        return LineSearchResult(0.0, LineSearchStatus.FAILED, 0, None)
    curvature = c2 * abs(dphi0)

    def sufficient(alpha, phi):
        return phi <= phi0 + c1 * alpha * dphi0

    def done(alpha, phi, dphi, ev, at_bound=False):
        return LineSearchResult(alpha, LineSearchStatus.WOLFE, ray.evals - start, ev, phi, dphi, at_bound)

    def failed():
        return LineSearchResult(0.0, LineSearchStatus.FAILED, ray.evals - start, None)

    def zoom(lo, hi):
        # lo = (alpha, phi, dphi) satisfies sufficient decrease; hi may lack values
        while ray.evals - start < max_evals:
            a_lo, f_lo, d_lo = lo
            a_hi, f_hi, d_hi = hi
            width = abs(a_hi - a_lo)
            if width <= 1e-12 * max(1.0, abs(a_hi)):
                return failed()
            trial = None
            if f_hi is not None:
                trial = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            left, right = min(a_lo, a_hi), max(a_lo, a_hi)
            if trial is None or not (left + 0.1 * width <= trial <= right - 0.1 * width):
                trial = 0.5 * (a_lo + a_hi)
            try:
                phi, dphi, ev = ray(trial)
            except EvaluationFailure:
                hi = (trial, None, None)
                continue
            if not sufficient(trial, phi) or phi >= f_lo:
                hi = (trial, phi, dphi)
                continue
            if abs(dphi) <= curvature:
                return done(trial, phi, dphi, ev)
            if dphi * (a_hi - a_lo) >= 0.0:
                hi = lo
            lo = (trial, phi, dphi)
        return failed()

    prev = (0.0, phi0, dphi0)
    alpha = min(alpha_init, alpha_max)
    upper = alpha_max
    first = True
    while ray.evals - start < max_evals:
        try:
            phi, dphi, ev = ray(alpha)
        except EvaluationFailure:
            upper = alpha
            alpha = 0.5 * (prev[0] + alpha)
            continue
        if not sufficient(alpha, phi) or (not first and phi >= prev[1]):
            return zoom(prev, (alpha, phi, dphi))
        if abs(dphi) <= curvature:
            return done(alpha, phi, dphi, ev)
        if dphi >= 0.0:
            return zoom((alpha, phi, dphi), prev)
        if alpha >= upper:
            return done(alpha, phi, dphi, ev, at_bound=True)
        first = False
        prev = (alpha, phi, dphi)
        alpha = min(2.0 * alpha, upper)
    return failed()


def l1_fallback(
    ray: L1Ray,
    phi0: float,
    alpha_init: float,
    decrease_scale: float,
    max_trials: int = 20,
    c1: float = 1e-4,
) -> LineSearchResult:
    """Armijo backtracking on the l1 merit; returns the best trial if none passes.

    ``decrease_scale`` is the squared step norm used as the slope estimate.
    """
    start = ray.evals
    best = None
    alpha = alpha_init
    for _ in range(max_trials):
        try:
            phi, ev = ray(alpha)
        except EvaluationFailure:
            alpha *= 0.5
            continue
        if phi <= phi0 - c1 * alpha * decrease_scale:
            return LineSearchResult(alpha, LineSearchStatus.FALLBACK, ray.evals - start, ev, phi)
        if best is None or phi < best[1]:
            best = (alpha, phi, ev)
        alpha *= 0.5
    if best is None:
        return LineSearchResult(0.0, LineSearchStatus.FAILED, ray.evals - start, None)
    return LineSearchResult(best[0], LineSearchStatus.FALLBACK, ray.evals - start, best[2], best[1])
