import math

import numpy as np
import pytest

from miqcqp import (
    Cut,
    QcqpProblem,
    QuadraticForm,
    Sense,
    SolveStatus,
    SolverSettings,
    lift,
    resolve_perturbed,
    solve,
)
from miqcqp.instances import gen_ils


def unconstrained(n, P, q=None, r=0.0, p=None):
    q = np.zeros(n) if q is None else np.asarray(q, float)
    return QcqpProblem(n, n if p is None else p, QuadraticForm(P, q, r), ())


def test_min_square_is_tight():
    sol = solve(lift(unconstrained(1, np.eye(1))))
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.f_sdp == pytest.approx(0.0, abs=1e-6)
    assert abs(sol.X[0, 0]) <= 1e-6 and abs(sol.x[0]) <= 1e-6


def test_counterexample_value_and_analytic_center(counterexample):
    sol = solve(lift(counterexample))
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.f_sdp == pytest.approx(-1.2, abs=1e-6)
    assert np.abs(sol.X - 0.6 * np.eye(2)).max() <= 1e-4
    assert np.abs(sol.x).max() <= 1e-5
    lam = list(sol.duals.values())[0]
    assert lam == pytest.approx(1.0, abs=1e-4)


def brute_force_one_dim_lift(cut_at_zero: bool):
    """Grid minimum of X - 0.8x + 0.16 over the one-dimensional lifted
    feasible set: X >= x^2 (PSD) and, with the cut, X >= x."""
    xs = np.linspace(-1.0, 2.0, 3001)
    lo = np.maximum(xs * xs, xs) if cut_at_zero else xs * xs
    vals = lo - 0.8 * xs + 0.16
    return float(vals.min())


def test_one_dim_ils_with_cut(ils_1d):
    oracle = brute_force_one_dim_lift(cut_at_zero=True)
    assert oracle == pytest.approx(0.16, abs=1e-6)
    sol = solve(lift(ils_1d, [Cut((1,), 0)]))
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.f_sdp == pytest.approx(0.16, abs=1e-6)
    # sanity: without the cut the relaxation is tight at zero
    base = solve(lift(ils_1d))
    assert base.f_sdp == pytest.approx(brute_force_one_dim_lift(False), abs=1e-6)


def test_unbounded_below_detected():
    sol = solve(lift(unconstrained(1, -np.eye(1))))
    assert sol.status is SolveStatus.UNBOUNDED_BELOW
    assert sol.f_sdp == -math.inf


def test_primal_infeasible_detected():
    con = QuadraticForm(np.eye(1), np.zeros(1), 1.0)  # x^2 + 1 <= 0
    problem = QcqpProblem(1, 1, QuadraticForm(np.zeros((1, 1)), np.zeros(1), 0.0), ((con, Sense.LEQ),))
    sol = solve(lift(problem))
    assert sol.status is SolveStatus.PRIMAL_INFEASIBLE
    assert sol.f_sdp == math.inf


def test_solution_invariants_on_optimal(counterexample):
    settings = SolverSettings()
    lifted = lift(counterexample)
    sol = solve(lifted, settings)
    Z = lifted.bordered(sol.X, sol.x)
    assert float(np.linalg.eigvalsh(Z)[0]) >= -settings.feas_tol
    assert Z[2, 2] == 1.0  # structural corner equality, exact
    vals = lifted.row_values(sol.X, sol.x)
    assert np.all(vals <= settings.feas_tol * 10)
    assert all(v >= 0.0 for v in sol.duals.values())
    gap = abs(sol.f_sdp - sol.dual_objective)
    assert gap <= 10 * settings.rel_gap_tol * (1.0 + abs(sol.f_sdp))


def test_resolve_perturbed_zero_matches(counterexample):
    lifted = lift(counterexample)
    tag = lifted.rows[0].tag
    base = solve(lifted)
    same = resolve_perturbed(lifted, tag, 0.0)
    assert same.f_sdp == pytest.approx(base.f_sdp, abs=1e-6)


def test_resolve_perturbed_tightened_ball(counterexample):
    lifted = lift(counterexample)
    tag = lifted.rows[0].tag
    sol = resolve_perturbed(lifted, tag, -0.2)
    assert sol.f_sdp == pytest.approx(-1.0, abs=1e-6)


def test_resolve_perturbed_unknown_tag(counterexample):
    from miqcqp.model import Tag

    lifted = lift(counterexample)
    with pytest.raises(KeyError):
        resolve_perturbed(lifted, Tag.original(5), 0.1)


def test_sensitivity_inequality(counterexample):
    # f(u) >= f(0) - lam * u for constraints with a meaningful dual
    lifted = lift(counterexample)
    base = solve(lifted)
    for tag, lam in base.duals.items():
        if lam <= 1e-6:
            continue
        for u in (-0.1, -0.01, 0.01, 0.1):
            pert = resolve_perturbed(lifted, tag, u)
            assert pert.f_sdp >= base.f_sdp - lam * u - 1e-5 * (1.0 + abs(base.f_sdp))


def test_weak_duality_of_tracked_bounds(ils_1d):
    lifted = lift(ils_1d, [Cut((1,), 0)])
    sol = solve(lifted)
    tol = 1e-7 * (1.0 + abs(sol.f_sdp)) + 1e-9
    for stats in sol.trace:
        if stats.certified_bound is not None:
            assert stats.certified_bound <= sol.f_sdp + 1e-5


def test_monotone_under_more_cuts():
    problem = gen_ils(6, 5)
    base = solve(lift(problem)).f_sdp
    c1 = [Cut(tuple(np.eye(6, dtype=int)[i]), 0) for i in range(3)]
    c2 = c1 + [Cut(tuple(np.eye(6, dtype=int)[i]), 0) for i in range(3, 6)]
    f1 = solve(lift(problem, c1)).f_sdp
    f2 = solve(lift(problem, c2)).f_sdp
    slack = 2e-7 * (1.0 + abs(f2))
    assert base <= f1 + slack
    assert f1 <= f2 + slack


def test_relaxation_soundness_on_lattice_points():
    rng = np.random.default_rng(17)
    for seed in range(5):
        problem = gen_ils(4, seed)
        sol = solve(lift(problem))
        assert sol.status is SolveStatus.OPTIMAL
        for _ in range(10):
            x = rng.integers(-2, 3, size=4).astype(float)
            assert sol.f_sdp <= problem.objective.evaluate(x) + 1e-6


def test_max_iters_returns_best_certified_bound(counterexample):
    lifted = lift(counterexample)
    full = solve(lifted)
    limited = solve(lifted, SolverSettings(max_iters=3))
    assert limited.status is SolveStatus.MAX_ITERS
    assert limited.certified_bound is not None
    assert limited.certified_bound <= full.f_sdp + 1e-6
    assert limited.dual_objective == pytest.approx(limited.certified_bound)


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(rel_gap_tol=0.0)
    with pytest.raises(ValueError):
        SolverSettings(step_fraction=1.0)
    with pytest.raises(ValueError):
        SolverSettings(max_iters=0)
