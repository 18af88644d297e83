"""Damped BFGS approximation of the Lagrangian Hessian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DAMPING_THRESHOLD = 0.2


class DegenerateStep(ValueError):
    """The step is zero or has no positive curvature under the current matrix."""


@dataclass(frozen=True)
class HessianApprox:
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CurvaturePair:
    d: np.ndarray
    w: np.ndarray


def reset(n: int) -> HessianApprox:
    if n < 1:
        raise ValueError("dimension must be positive")
    return HessianApprox(np.eye(n))


def curvature_pair(g_k, g_k1, J_k, J_k1, lam_k1, alpha, p) -> CurvaturePair:
    """Step and Lagrangian-gradient difference, both at the new multipliers."""
    g_k = np.asarray(g_k, dtype=float)
    g_k1 = np.asarray(g_k1, dtype=float)
    d = alpha * np.asarray(p, dtype=float)
    dJ = np.asarray(J_k1, dtype=float) - np.asarray(J_k, dtype=float)
    lam = np.asarray(lam_k1, dtype=float)
    w = g_k1 - g_k
    if lam.size:
        w = w - dJ.T @ lam
    return CurvaturePair(d=d, w=w)


def damping_factor(H: np.ndarray, d: np.ndarray, w: np.ndarray) -> float:
    """Powell's theta: 1 when ``w'd >= 0.2 d'Hd``, otherwise the blend that
    puts ``w_hat'd`` exactly on that threshold."""
    dHd = float(d @ H @ d)
    wd = float(w @ d)
    if wd >= DAMPING_THRESHOLD * dHd:
        return 1.0
    return (1.0 - DAMPING_THRESHOLD) * dHd / (dHd - wd)


def bfgs_update(H: np.ndarray, d: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Plain BFGS: ``H - Hdd'H/(d'Hd) + ww'/(w'd)``, symmetrized."""
    Hd = H @ d
    out = H - np.outer(Hd, Hd) / float(d @ Hd) + np.outer(w, w) / float(w @ d)
    return 0.5 * (out + out.T)


def damped_update(H: HessianApprox, pair: CurvaturePair) -> HessianApprox:
    d = np.asarray(pair.d, dtype=float)
    w = np.asarray(pair.w, dtype=float)
    B = H.matrix
    if not np.any(d):
        raise DegenerateStep("zero step")
    dHd = float(d @ B @ d)
    if not dHd > 0.0:
        raise DegenerateStep("step has non-positive curvature under the approximation")
    theta = damping_factor(B, d, w)
    w_hat = w if theta == 1.0 else theta * w + (1.0 - theta) * (B @ d)
    return HessianApprox(bfgs_update(B, d, w_hat))
