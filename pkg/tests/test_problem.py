import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modsqp.problem import (
    Constraint,
    EvaluationError,
    EvaluationFailure,
    InvalidSpec,
    ProblemSpec,
    canonicalize,
    evaluate,
    multipliers_to_user,
    project_to_bounds,
)


def _quad(x):
    return float(x @ x), 2.0 * x


def _lin(a, b=0.0):
    a = np.asarray(a, dtype=float)
    return lambda x: (float(a @ x + b), a)


class TestCanonicalize:
    def test_mixed_rows_counted(self):
        spec = ProblemSpec(
            x0=[0.0, 0.0],
            objective=_quad,
            constraints=[Constraint(_lin([1, 0]), "ineq"), Constraint(_lin([1, 1], -1), "eq")],
            lower=[0.0, -np.inf],
            upper=[np.inf, np.inf],
        )
        prob = canonicalize(spec)
        assert (prob.m_eq, prob.m_ineq, prob.m_bound, prob.m_total) == (1, 1, 1, 3)
        # equality rows come first regardless of user order
        assert prob.eq_rows[0][0] == 1
        assert prob.eq_mask.tolist() == [True, False, False]
        assert prob.row_origin[2].kind == "bound"

    def test_unconstrained_empty(self):
        prob = canonicalize(ProblemSpec(x0=[1.0], objective=_quad))
        assert prob.m_total == 0

    def test_box_gives_four_rows(self):
        prob = canonicalize(ProblemSpec(x0=[0.5, 0.5], objective=_quad, lower=[0, 0], upper=[1, 1]))
        assert prob.m_bound == 4
        sides = [(o.index, o.side) for o in prob.row_origin]
        assert sides == [(0, "lower"), (0, "upper"), (1, "lower"), (1, "upper")]

    def test_crossed_bounds_rejected(self):
        with pytest.raises(InvalidSpec):
            canonicalize(ProblemSpec(x0=[0.0], objective=_quad, lower=[1.0], upper=[0.0]))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InvalidSpec):
            canonicalize(ProblemSpec(x0=[0.0, 0.0], objective=_quad, lower=[0.0]))

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidSpec):
            canonicalize(ProblemSpec(x0=[0.0], objective=_quad, constraints=[Constraint(_lin([1]), "le")]))


class TestEvaluate:
    def test_values_with_bound_row(self):
        prob = canonicalize(ProblemSpec(x0=[3.0], objective=lambda x: (float(x[0] ** 2), 2 * x), lower=[1.0]))
        ev = evaluate(prob, [3.0])
        assert ev.f == 9.0
        np.testing.assert_array_equal(ev.g, [6.0])
        np.testing.assert_array_equal(ev.c, [2.0])
        np.testing.assert_array_equal(ev.J, [[1.0]])

    def test_domain_violation_reports_objective(self):
        prob = canonicalize(ProblemSpec(x0=[1.0], objective=lambda x: (math.sqrt(x[0]), np.array([0.0]))))
        with pytest.raises(EvaluationFailure) as info:
            evaluate(prob, [-1.0])
        assert info.value.source == "objective"

    def test_counters_increment_once(self):
        prob = canonicalize(ProblemSpec(x0=[0.0, 0.0], objective=_quad, constraints=[Constraint(_lin([1, 1]))]))
        evaluate(prob, [1.0, 2.0])
        assert (prob.nf, prob.ng, prob.nc, prob.nJ) == (1, 1, 1, 1)

    def test_failed_objective_skips_constraint_counters(self):
        def bad(x):
            raise EvaluationError("nope")

        prob = canonicalize(ProblemSpec(x0=[0.0], objective=bad, constraints=[Constraint(_lin([1]))]))
        with pytest.raises(EvaluationFailure):
            evaluate(prob, [0.0])
        assert (prob.nf, prob.ng, prob.nc, prob.nJ) == (1, 1, 0, 0)

    def test_constraint_failure_names_user_index(self):
        def bad(x):
            return math.nan, np.zeros(1)

        prob = canonicalize(
            ProblemSpec(x0=[0.0], objective=_quad, constraints=[Constraint(_lin([1])), Constraint(bad, "eq")])
        )
        with pytest.raises(EvaluationFailure) as info:
            evaluate(prob, [0.0])
        assert info.value.source == 1
        assert prob.nc == 1

    @pytest.mark.parametrize("value", [math.nan, math.inf, -math.inf])
    def test_non_finite_is_failure(self, value):
        prob = canonicalize(ProblemSpec(x0=[0.0], objective=lambda x: (value, np.zeros(1))))
        with pytest.raises(EvaluationFailure):
            evaluate(prob, [0.0])

    def test_non_finite_gradient_is_failure(self):
        prob = canonicalize(ProblemSpec(x0=[0.0], objective=lambda x: (0.0, np.array([math.nan]))))
        with pytest.raises(EvaluationFailure):
            evaluate(prob, [0.0])

    def test_wrong_gradient_length_is_spec_error(self):
        prob = canonicalize(ProblemSpec(x0=[0.0, 0.0], objective=lambda x: (0.0, np.zeros(3))))
        with pytest.raises(InvalidSpec):
            evaluate(prob, [0.0, 0.0])

    def test_counting_wrapper_matches(self, rng):
        calls = {"f": 0, "c": 0}

        def obj(x):
            calls["f"] += 1
            return _quad(x)

        def con(x):
            calls["c"] += 1
            return float(1 - x @ x), -2 * x

        prob = canonicalize(ProblemSpec(x0=[0.0, 0.0], objective=obj, constraints=[Constraint(con)]))
        for _ in range(17):
            evaluate(prob, rng.normal(size=2))
        assert prob.nf == prob.ng == calls["f"] == 17
        assert prob.nc == prob.nJ == calls["c"] == 17

    def test_user_values_reproduced_exactly(self, rng):
        a = rng.normal(size=3)
        con_eq = lambda x: (float(np.sin(x) @ a), np.cos(x) * a)  # noqa: E731
        con_in = lambda x: (float(x[0] * x[1] - x[2]), np.array([x[1], x[0], -1.0]))  # noqa: E731
        obj = lambda x: (float(np.exp(x).sum()), np.exp(x))  # noqa: E731
        prob = canonicalize(
            ProblemSpec(x0=np.zeros(3), objective=obj, constraints=[Constraint(con_in), Constraint(con_eq, "eq")])
        )
        for _ in range(20):
            x = rng.normal(size=3)
            ev = evaluate(prob, x)
            assert ev.f == obj(x)[0]
            assert ev.c[0] == con_eq(x)[0]
            assert ev.c[1] == con_in(x)[0]


bounded = st.floats(-10, 10, allow_nan=False)


class TestProjection:
    def test_clamp(self):
        np.testing.assert_array_equal(project_to_bounds([-1, 5], [0, 0], [1, 1]), [0, 1])

    def test_interior_fixed(self):
        np.testing.assert_array_equal(project_to_bounds([0.5], [0], [1]), [0.5])

    def test_infinite_noop(self):
        np.testing.assert_array_equal(project_to_bounds([2.0], [-np.inf], [np.inf]), [2.0])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(bounded, bounded, bounded), min_size=1, max_size=6))
    def test_idempotent_and_in_bounds(self, triples):
        x = np.array([t[0] for t in triples])
        lo = np.array([min(t[1], t[2]) for t in triples])
        up = np.array([max(t[1], t[2]) for t in triples])
        once = project_to_bounds(x, lo, up)
        np.testing.assert_array_equal(project_to_bounds(once, lo, up), once)
        assert np.all(once >= lo) and np.all(once <= up)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(bounded, bounded, bounded), min_size=1, max_size=5))
    def test_bound_rows_nonnegative_inside(self, triples):
        x = np.array([t[0] for t in triples])
        lo = np.array([min(t[1], t[2]) for t in triples])
        up = np.array([max(t[1], t[2]) for t in triples])
        prob = canonicalize(ProblemSpec(x0=x, objective=_quad, lower=lo, upper=up))
        ev = evaluate(prob, project_to_bounds(x, lo, up))
        assert np.all(ev.c >= 0.0)
        for row, origin in enumerate(prob.row_origin):
            assert np.count_nonzero(ev.J[row]) == 1
            assert abs(ev.J[row, origin.index]) == 1.0


class TestMultipliersToUser:
    def _prob(self):
        return canonicalize(
            ProblemSpec(
                x0=[0.5, 0.5],
                objective=_quad,
                constraints=[Constraint(_lin([1, 0])), Constraint(_lin([1, 1], -1), "eq")],
                lower=[0.0, -np.inf],
                upper=[np.inf, 2.0],
            )
        )

    def test_reordered_to_user(self):
        prob = self._prob()
        out = multipliers_to_user([7.0, 3.0, 1.0, 2.0], prob)
        np.testing.assert_array_equal(out.constraints, [3.0, 7.0])
        np.testing.assert_array_equal(out.lower, [1.0, 0.0])
        np.testing.assert_array_equal(out.upper, [0.0, 2.0])

    def test_pair_recombined(self):
        prob = canonicalize(ProblemSpec(x0=[0.0], objective=_quad, constraints=[Constraint(_lin([1]), "eq")]))
        out = multipliers_to_user([3.0, 1.0, 0.5, 0.5], prob, pair_map=[(0, 1.0), (0, -1.0), None, None])
        np.testing.assert_array_equal(out.constraints, [2.0])

    def test_zero_in_zero_out(self):
        out = multipliers_to_user(np.zeros(4), self._prob())
        assert not out.constraints.any() and not out.lower.any() and not out.upper.any()

    def test_length_checked(self):
        with pytest.raises(ValueError):
            multipliers_to_user(np.zeros(3), self._prob())
