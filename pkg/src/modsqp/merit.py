"""Smooth augmented Lagrangian merit function and its penalty management.

The merit function is

    L_A(x, lam, s; rho) = f - lam'(c - s) + 0.5 * sum(rho_i (c_i - s_i)^2)

searched along ``(x, lam, s) + alpha (p, q, r)`` with ``q = lam_hat - lam``
and ``r = c + Jp - s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .problem import Evaluation


@dataclass(frozen=True)
class MeritContext:
    lam: np.ndarray
    s: np.ndarray
    rho: np.ndarray
    delta_rho: float = 1.0
    trend: int = 0  # +1 increasing, -1 decreasing, 0 none
    run: int = 0
    prev_rho_norm: float | None = None


@dataclass(frozen=True)
class SearchRay:
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray

    @classmethod
    def from_qp(cls, ev: Evaluation, p, lam, lam_hat, s) -> "SearchRay":
        s_hat = ev.c + ev.J @ p
        return cls(p=np.asarray(p, dtype=float), q=lam_hat - lam, r=s_hat - s)


def merit_value(f, c, lam, s, rho) -> float:
    v = np.asarray(c) - np.asarray(s)
    return float(f - lam @ v + 0.5 * np.sum(rho * v * v))


def merit_slope(ev: Evaluation, ray: SearchRay, lam_a, s_a, rho) -> float:
    """Derivative of the merit function along the ray at the point of ``ev``.

    ``lam_a`` and ``s_a`` are the multipliers and slacks at the same step.
    """
    v = ev.c - s_a
    Jp_r = ev.J @ ray.p - ray.r
    return float(ev.g @ ray.p - ray.q @ v - lam_a @ Jp_r + np.sum(rho * v * Jp_r))


def slope_at_zero(g, p, q, lam, v, rho) -> float:
    """Closed form at alpha=0, valid because ``Jp - r = -(c - s)`` there."""
    return float(g @ p - q @ v + lam @ v - np.sum(rho * v * v))


def required_penalty_mass(g, p, q, lam, v, pHp) -> float:
    """``sum(rho_i v_i^2)`` needed for a slope of exactly ``-0.5 p'Hp``."""
    return float(g @ p - q @ v + lam @ v + 0.5 * pHp)


def slack_reset(c, lam, rho, eq_mask=None) -> np.ndarray:
    """Minimize the merit function over ``s >= 0``; equality rows keep ``s = 0``."""
    c = np.asarray(c, dtype=float)
    lam = np.asarray(lam, dtype=float)
    rho = np.asarray(rho, dtype=float)
    s = np.maximum(0.0, c)
    pos = rho > 0.0
    s[pos] = np.maximum(0.0, c[pos] - lam[pos] / rho[pos])
    if eq_mask is not None:
        s[np.asarray(eq_mask, dtype=bool)] = 0.0
    return s


def penalty_star(v, delta: float) -> np.ndarray:
    """Minimum-norm ``rho`` with ``sum(rho_i v_i^2) = delta``, or zero when ``delta <= 0``."""
    v = np.asarray(v, dtype=float)
    v2 = v * v
    denom = float(v2 @ v2)
    if delta <= 0.0 or denom == 0.0:
        return np.zeros_like(v)
    return delta * v2 / denom


def damp_penalties(rho, rho_star, delta_rho: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    rho_star = np.asarray(rho_star, dtype=float)
    target = rho_star + delta_rho
    rho_hat = np.where(rho < 4.0 * target, rho, np.sqrt(rho * target))
    return np.maximum(rho_star, rho_hat)


def update_delta_rho(ctx: MeritContext, new_rho_norm: float) -> MeritContext:
    """Track the direction of ``||rho||`` and double ``delta_rho`` when a
    monotone run of at least two changes reverses."""
    prev = ctx.prev_rho_norm
    if prev is None or new_rho_norm == prev:
        return replace(ctx, prev_rho_norm=new_rho_norm)
    direction = 1 if new_rho_norm > prev else -1
    delta_rho, trend, run = ctx.delta_rho, ctx.trend, ctx.run
    if direction == trend:
        run += 1
    else:
        if trend == -direction and run >= 2:
            delta_rho *= 2.0
        trend, run = direction, 1
    return replace(ctx, delta_rho=delta_rho, trend=trend, run=run, prev_rho_norm=new_rho_norm)


def rho_norm(rho) -> float:
    return math.sqrt(float(np.dot(rho, rho)))
