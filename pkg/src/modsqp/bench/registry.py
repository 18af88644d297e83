"""Built-in desk-scale test problems with reference solutions.

Reference values are either obvious by inspection or derived by solving the
KKT system by hand; the derivation is recorded next to each entry.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..problem import Constraint, EvaluationError, ProblemSpec


class UnknownProblem(KeyError):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    build: Callable[[], ProblemSpec]
    x_star: tuple[float, ...] | None = None
    f_star: float | None = None
    provenance: str = ""
    description: str = ""

    def spec(self) -> ProblemSpec:
        return self.build()


REGISTRY: dict[str, RegistryEntry] = {}


def register(name, x_star=None, f_star=None, provenance="", description=""):
    def deco(build):
        REGISTRY[name] = RegistryEntry(
            name, build, None if x_star is None else tuple(float(v) for v in x_star), f_star, provenance, description
        )
        return build

    return deco


def get(name: str) -> RegistryEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownProblem(name) from None


def names() -> list[str]:
    return list(REGISTRY)


def _lin(a, b=0.0):
    a = np.asarray(a, dtype=float)
    return lambda x: (float(a @ x + b), a)


@register("unconstrained-quadratic", x_star=(0.0, 0.0), f_star=0.0, provenance="trivial: minimizer of 0.5||x||^2")
def unconstrained_quadratic():
    return ProblemSpec(x0=[3.0, 4.0], objective=lambda x: (0.5 * float(x @ x), x.copy()), name="unconstrained-quadratic")


def _rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


@register("rosenbrock", x_star=(1.0, 1.0), f_star=0.0, provenance="trivial: sum of squares vanishing at (1, 1)")
def rosenbrock():
    return ProblemSpec(x0=[-1.2, 1.0], objective=_rosenbrock, name="rosenbrock")


@register(
    "eqcon-quadratic",
    x_star=(0.5, 0.5),
    f_star=0.5,
    provenance="hand KKT: 2x = lam (1, 1), x1 + x2 = 1 gives x = 0.5, lam = 1",
)
def eqcon_quadratic():
    return ProblemSpec(
        x0=[2.0, -1.0],
        objective=lambda x: (float(x @ x), 2.0 * x),
        constraints=[Constraint(_lin([1.0, 1.0], -1.0), "eq")],
        name="eqcon-quadratic",
    )


@register(
    "circle-lin",
    x_star=(-1 / math.sqrt(2), -1 / math.sqrt(2)),
    f_star=-math.sqrt(2),
    provenance="hand KKT: (1, 1) = -2 lam x on the unit circle gives x = -(1, 1)/sqrt(2), lam = 1/sqrt(2)",
)
def circle_lin():
    return ProblemSpec(
        x0=[0.5, 0.1],
        objective=lambda x: (float(x[0] + x[1]), np.ones(2)),
        constraints=[Constraint(lambda x: (1.0 - float(x @ x), -2.0 * x), "ineq")],
        name="circle-lin",
    )


@register(
    "overdetermined-eq",
    x_star=(1.0, 1.0),
    f_star=2.0,
    provenance="hand: the only points satisfying x1 = x2, x1 x2 = 1, |x|^2 = 2 are +-(1, 1); (1, 1) is nearer (2, 2)",
    description="three consistent nonlinear equalities in two variables",
)
def overdetermined_eq():
    return ProblemSpec(
        x0=[1.5, 0.8],
        objective=lambda x: (float((x[0] - 2) ** 2 + (x[1] - 2) ** 2), 2.0 * (x - 2.0)),
        constraints=[
            Constraint(lambda x: (float(x @ x - 2.0), 2.0 * x), "eq"),
            Constraint(_lin([1.0, -1.0]), "eq"),
            Constraint(lambda x: (float(x[0] * x[1] - 1.0), np.array([x[1], x[0]])), "eq"),
        ],
        name="overdetermined-eq",
    )


@register("box-infeasible", description="x >= 1 and x <= 0 as general constraints")
def box_infeasible():
    return ProblemSpec(
        x0=[0.5],
        objective=lambda x: (float(x[0] ** 2), 2.0 * x),
        constraints=[Constraint(_lin([1.0], -1.0), "ineq"), Constraint(_lin([-1.0]), "ineq")],
        name="box-infeasible",
    )


def _sqrt_domain(x):
    if x[0] < 0.0:
        raise EvaluationError("x1 must be nonnegative")
    r = math.sqrt(x[0])
    f = 4.0 * x[0] * r - 4.0 * x[0] + (x[1] - 1.0) ** 2
    g = np.array([6.0 * r - 4.0, 2.0 * (x[1] - 1.0)])
    return f, g


@register(
    "sqrt-domain",
    x_star=(4 / 9, 1.0),
    f_star=-16 / 27,
    provenance="hand: 6 sqrt(x1) = 4 gives x1 = 4/9; f = 4(8/27) - 16/9 = -16/27",
    description="objective undefined for x1 < 0; the first unit step from (1, 0) lands at x1 = -1",
)
def sqrt_domain():
    return ProblemSpec(x0=[1.0, 0.0], objective=_sqrt_domain, name="sqrt-domain")


@register(
    "bound-clamped-start",
    x_star=(1.0, 0.0),
    f_star=2.0,
    provenance="hand: separable, each coordinate clamps its unconstrained minimizer (2, -1) onto [0, 1]",
)
def bound_clamped_start():
    return ProblemSpec(
        x0=[-3.0, 5.0],
        objective=lambda x: (float((x[0] - 2) ** 2 + (x[1] + 1) ** 2), np.array([2 * (x[0] - 2), 2 * (x[1] + 1)])),
        lower=[0.0, 0.0],
        upper=[1.0, 1.0],
        name="bound-clamped-start",
    )


_CONVEX_N = 50
_CONVEX_D = 1.0 + np.arange(_CONVEX_N) / 10.0
_CONVEX_LAM = 1.0 / np.sum(1.0 / _CONVEX_D)


@register(
    "convex-50",
    x_star=tuple(_CONVEX_LAM / _CONVEX_D),
    f_star=0.5 * _CONVEX_LAM,
    provenance="hand KKT: d_i x_i = lam, sum x = 1 gives lam = 1/sum(1/d_i); x >= 0 inactive",
    description="50 variables, diagonal quadratic, one linear equality, nonnegativity bounds",
)
def convex_50():
    d = _CONVEX_D
    return ProblemSpec(
        x0=np.linspace(0.0, 1.0, _CONVEX_N),
        objective=lambda x: (0.5 * float(d @ (x * x)), d * x),
        constraints=[Constraint(_lin(np.ones(_CONVEX_N), -1.0), "eq")],
        lower=np.zeros(_CONVEX_N),
        name="convex-50",
    )


@register(
    "nonconvex-bilinear",
    x_star=(1.0, 1.0),
    f_star=-1.0,
    provenance="hand KKT: (x2, x1) = 2 lam x on |x|^2 = 2 gives x = (1, 1), lam = 1/2",
    description="indefinite objective -x1 x2 inside the disc of radius sqrt(2)",
)
def nonconvex_bilinear():
    return ProblemSpec(
        x0=[1.2, 0.6],
        objective=lambda x: (float(-x[0] * x[1]), np.array([-x[1], -x[0]])),
        constraints=[Constraint(lambda x: (2.0 - float(x @ x), -2.0 * x), "ineq")],
        name="nonconvex-bilinear",
    )


def _hs071_obj(x):
    f = x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]
    g = np.array(
        [
            x[0] * x[3] + x[3] * (x[0] + x[1] + x[2]),
            x[0] * x[3],
            x[0] * x[3] + 1.0,
            x[0] * (x[0] + x[1] + x[2]),
        ]
    )
    return f, g


@register(
    "hs071",
    x_star=(1.0, 4.74299963, 3.82114998, 1.37940829),
    f_star=17.0140173,
    provenance="published Hock-Schittkowski solution (8 significant digits)",
)
def hs071():
    return ProblemSpec(
        x0=[1.0, 5.0, 5.0, 1.0],
        objective=_hs071_obj,
        constraints=[
            Constraint(
                lambda x: (float(np.prod(x) - 25.0), np.array([x[1] * x[2] * x[3], x[0] * x[2] * x[3], x[0] * x[1] * x[3], x[0] * x[1] * x[2]])),
                "ineq",
            ),
            Constraint(lambda x: (float(x @ x - 40.0), 2.0 * x), "eq"),
        ],
        lower=[1.0] * 4,
        upper=[5.0] * 4,
        name="hs071",
    )
