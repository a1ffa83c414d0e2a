import itertools

import numpy as np
import pytest

from miqcqp import (
    Cut,
    QcqpProblem,
    QuadraticForm,
    Sense,
    Tag,
    add_box,
    lift,
    normalize_equalities,
)
from miqcqp.instances import gen_ils_data, ils_problem, maxcut_to_qcqp


def test_evaluate_constant_form():
    form = QuadraticForm(np.zeros((3, 3)), np.zeros(3), 3.0)
    assert form.evaluate([5.0, -1.0, 2.0]) == 3.0


def test_evaluate_ils_zero_residual():
    A, x_cts = gen_ils_data(6, 123)
    problem = ils_problem(A, x_cts)
    value = problem.objective.evaluate(x_cts)
    assert abs(value) <= 1e-9 * (1.0 + abs(problem.objective.r))


def test_evaluate_triangle_maxcut_objective():
    # enumerate all 8 sign vectors: the best cut of the unit triangle is 2,
    # attained at (1, 1, -1) among others
    W = np.ones((3, 3)) - np.eye(3)

    def cut_val(x):
        return 0.5 * sum(
            W[i, j] * (1 - x[i] * x[j]) for i in range(3) for j in range(i + 1, 3)
        )

    best = max(cut_val(x) for x in itertools.product((-1, 1), repeat=3))
    assert best == 2
    assert cut_val((1, 1, -1)) == 2


def test_evaluate_dimension_mismatch():
    form = QuadraticForm(np.eye(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        form.evaluate([1.0, 2.0, 3.0])


def test_symmetrization_preserves_quadratic():
    P = np.array([[1.0, 4.0], [0.0, 2.0]])
    form = QuadraticForm(P, np.zeros(2), 0.0)
    assert np.allclose(form.P, form.P.T)
    x = np.array([1.3, -0.7])
    assert form.evaluate(x) == pytest.approx(x @ P @ x)


def test_normalize_no_constraints_identity():
    problem = QcqpProblem(2, 1, QuadraticForm(np.eye(2), np.zeros(2), 0.0), ())
    assert normalize_equalities(problem) == problem


def test_normalize_single_equality():
    form = QuadraticForm(np.eye(2), np.ones(2), -1.0)
    problem = QcqpProblem(2, 2, QuadraticForm(np.eye(2), np.zeros(2), 0.0), ((form, Sense.EQ),))
    norm = normalize_equalities(problem)
    assert len(norm.constraints) == 2
    (f1, s1), (f2, s2) = norm.constraints
    assert s1 is Sense.LEQ and s2 is Sense.LEQ
    assert np.array_equal(f1.P, form.P) and np.array_equal(f2.P, -form.P)
    assert np.array_equal(f2.q, -form.q) and f2.r == -form.r


def test_normalize_maxcut_doubles_constraints():
    W = np.ones((4, 4)) - np.eye(4)
    problem = maxcut_to_qcqp(W)
    assert len(problem.constraints) == 4
    norm = normalize_equalities(problem)
    assert len(norm.constraints) == 8
    assert norm.is_normalized


def test_normalize_idempotent():
    W = np.ones((3, 3)) - np.eye(3)
    once = normalize_equalities(maxcut_to_qcqp(W))
    assert normalize_equalities(once) == once


def test_lift_empty_problem():
    problem = QcqpProblem(2, 2, QuadraticForm(np.eye(2), np.zeros(2), 0.0), ())
    lifted = lift(problem)
    assert lifted.m == 0


def test_lift_counterexample_data(counterexample):
    lifted = lift(counterexample)
    assert np.array_equal(lifted.objective.P, -np.eye(2))
    assert lifted.m == 1
    row = lifted.rows[0]
    assert row.tag == Tag.original(0)
    assert np.array_equal(row.form.P, np.eye(2))
    assert row.form.r == -1.2
    # objective at X = 0.6 I: Tr(-I * 0.6I) = -1.2
    assert lifted.objective_value(0.6 * np.eye(2), np.zeros(2)) == pytest.approx(-1.2)


def test_lift_cut_row_data():
    problem = QcqpProblem(2, 2, QuadraticForm(np.zeros((2, 2)), np.zeros(2), 0.0), ())
    lifted = lift(problem, [Cut((1, 1), 0)])
    row = lifted.rows[0]
    assert row.tag.kind == Tag.CUT
    assert np.array_equal(row.form.P, -np.ones((2, 2)))
    assert np.array_equal(row.form.q, np.array([1.0, 1.0]))
    assert row.form.r == 0.0


def test_lift_rejects_cut_on_continuous_coordinate():
    problem = QcqpProblem(3, 1, QuadraticForm(np.zeros((3, 3)), np.zeros(3), 0.0), ())
    with pytest.raises(ValueError):
        lift(problem, [Cut((0, 1, 0), 0)])


def test_lift_rejects_duplicate_cuts():
    problem = QcqpProblem(2, 2, QuadraticForm(np.zeros((2, 2)), np.zeros(2), 0.0), ())
    with pytest.raises(ValueError):
        lift(problem, [Cut((1, 0), 0), Cut((1, 0), 0)])


def test_rank_one_points_satisfy_lift():
    # integer-feasible x => (xx', x) satisfies every lifted row, cuts included
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = int(rng.integers(2, 6))
        P = rng.normal(size=(n, n))
        form = QuadraticForm(P, rng.normal(size=n), float(rng.normal()))
        problem = QcqpProblem(n, n, form, ())
        cuts = []
        for _ in range(4):
            a = rng.integers(-2, 3, size=n)
            if np.all(a == 0):
                a[0] = 1
            cuts.append(Cut(tuple(a), int(rng.integers(-3, 4))))
        cuts = list(dict.fromkeys(cuts))
        lifted = lift(problem, cuts)
        x = rng.integers(-4, 5, size=n).astype(float)
        X = np.outer(x, x)
        vals = lifted.row_values(X, x)
        assert np.all(vals <= 1e-9)
        assert lifted.objective_value(X, x) == pytest.approx(form.evaluate(x), rel=1e-12, abs=1e-9)


def test_add_box_rows():
    problem = QcqpProblem(2, 2, QuadraticForm(np.eye(2), np.zeros(2), 0.0), ())
    boxed = add_box(problem, [-1, -2], [3, 4])
    assert len(boxed.constraints) == 4
    assert boxed.feasible([3.0, -2.0])
    assert not boxed.feasible([4.0, 0.0])


def test_bordered_matrix_shape(counterexample):
    lifted = lift(counterexample)
    Z = lifted.bordered(np.eye(2), np.array([0.5, -0.5]))
    assert Z.shape == (3, 3)
    assert Z[2, 2] == 1.0
    assert Z[0, 2] == 0.5 and Z[2, 1] == -0.5


def test_tag_index_unknown(counterexample):
    lifted = lift(counterexample)
    with pytest.raises(KeyError):
        lifted.tag_index(Tag.original(99))
