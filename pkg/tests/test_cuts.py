import numpy as np
import pytest

from miqcqp import (
    NO_CUT_CERTIFIED,
    Cut,
    QcqpProblem,
    QuadraticForm,
    best_b,
    enumerate_cuts,
    eig_cut,
    lift,
    random_cuts,
    slack_matrix,
    solve,
    sphere_cut_lifted,
    violation,
)
from conftest import random_psd_point


def test_cut_canonicalization():
    assert Cut((-1, 0), 2) == Cut((1, 0), -3)
    assert Cut((0, -2, 1), 0).a == (0, 2, -1)
    assert Cut((0, -2, 1), 0).b == -1
    with pytest.raises(ValueError):
        Cut((0, 0), 1)


def test_canonical_pair_is_same_inequality():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.integers(-3, 4, size=4)
        if np.all(a == 0):
            a[0] = 1
        b = int(rng.integers(-4, 5))
        x = rng.integers(-5, 6, size=4)
        g = int(a @ x)
        raw = (g - b) * (g - b - 1)
        cut = Cut(tuple(a), b)
        gc = int(cut.a_array @ x)
        assert (gc - cut.b) * (gc - cut.b - 1) == raw


def test_violation_zero_on_cut_boundary():
    x = np.array([2.0, -1.0])
    X = np.outer(x, x)
    a = (1, 1)
    cut = Cut(a, best_b(np.array(a), x))  # b = a'x exactly
    assert violation(cut, X, x) == pytest.approx(0.0, abs=1e-12)


def test_violation_half_point():
    x = np.array([0.5, 0.0])
    X = np.outer(x, x)
    assert violation(Cut((1, 0), 0), X, x) == pytest.approx(0.25)


def test_violation_counterexample_never_positive():
    X = 0.6 * np.eye(2)
    x = np.zeros(2)
    rng = np.random.default_rng(0)
    for _ in range(300):
        a = rng.integers(-3, 4, size=2)
        if np.all(a == 0):
            continue
        b = int(rng.integers(-4, 4))
        v = violation(Cut(tuple(a), b), X, x)
        expected = -0.6 * float(a @ a) - b * (b + 1)
        # canonical flip maps b to -b-1, leaving b(b+1) unchanged
        assert v == pytest.approx(expected, abs=1e-12)
        assert v <= 0.0


def test_violation_dimension_mismatch():
    with pytest.raises(ValueError):
        violation(Cut((1, 0), 0), np.eye(3), np.zeros(3))


def test_best_b_maximizes_violation():
    x = np.array([0.4])
    X = np.outer(x, x)
    a = np.array([1])
    assert best_b(a, x) == 0
    v0 = violation(Cut((1,), 0), X, x)
    assert v0 > violation(Cut((1,), -1), X, x)
    assert v0 > violation(Cut((1,), 1), X, x)


def test_best_b_integer_tie():
    x = np.array([3.0])
    X = np.outer(x, x)
    assert best_b(np.array([1]), x) == 3
    assert violation(Cut((1,), 3), X, x) == pytest.approx(
        violation(Cut((1,), 2), X, x)
    )


def test_best_b_negative_floor():
    assert best_b(np.array([1]), np.array([-0.2])) == -1


def test_best_b_window_optimality():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        X, x = random_psd_point(rng, n)
        a = rng.integers(-2, 3, size=n)
        if np.all(a == 0):
            a[0] = 1
        b_star = best_b(a, x)
        cut = Cut(tuple(a), b_star)
        v_star = violation(cut, X, x)
        center = int(round(float(a @ x)))
        for b in range(center - 5, center + 6):
            assert v_star >= violation(Cut(tuple(a), b), X, x) - 1e-12


def test_enumerate_empty_on_counterexample():
    X = 0.6 * np.eye(2)
    x = np.zeros(2)
    for k in (1, 2, 3):
        assert enumerate_cuts(X, x, p=2, k=k) == []


def test_enumerate_finds_half_cut():
    x = np.array([0.5, 0.0])
    X = np.outer(x, x)
    cuts = enumerate_cuts(X, x, p=2, k=1)
    assert Cut((1, 0), 0) in cuts
    assert violation(cuts[0], X, x) == pytest.approx(0.25)


def test_enumerate_candidate_family_n2_k2():
    # at x = (0.5, 0.3) with X = xx' every candidate is violated, so the
    # returned a-set is the whole canonical family
    x = np.array([0.5, 0.3])
    X = np.outer(x, x)
    cuts = enumerate_cuts(X, x, p=2, k=2)
    a_set = {cut.a for cut in cuts}
    assert a_set == {(1, 0), (0, 1), (1, 1), (1, -1)}


def test_enumerate_sorted_and_capped():
    rng = np.random.default_rng(5)
    X, x = random_psd_point(rng, 6, rank=1)
    cuts = enumerate_cuts(X, x, p=6, k=3, cap=5)
    assert len(cuts) <= 5
    viols = [violation(c, X, x) for c in cuts]
    assert viols == sorted(viols, reverse=True)


def test_enumerate_respects_p():
    x = np.array([0.5, 0.5])
    X = np.outer(x, x)
    cuts = enumerate_cuts(X, x, p=1, k=2)
    assert all(c.a[1] == 0 for c in cuts)


def test_eig_cut_certificate_on_counterexample():
    assert eig_cut(0.6 * np.eye(2), np.zeros(2), p=2) is NO_CUT_CERTIFIED


def test_eig_cut_rank_one_half_point():
    x = np.array([0.5, 0.0])
    X = np.outer(x, x)  # M = 0
    res = eig_cut(X, x, p=2, k_round=1)
    assert res is not NO_CUT_CERTIFIED
    assert Cut((1, 0), 0) in res or len(res) > 0
    assert any(violation(c, X, x) > 0 for c in res)


def test_eig_cut_integral_point_empty():
    x = np.array([2.0, -1.0])
    X = np.outer(x, x)
    res = eig_cut(X, x, p=2)
    assert res is not NO_CUT_CERTIFIED
    assert res == []


def test_eig_cut_rejects_indefinite_slack():
    X = -np.eye(2)
    with pytest.raises(ValueError):
        eig_cut(X, np.zeros(2), p=2)


def test_random_cuts_empty_count():
    assert random_cuts(np.eye(2), np.zeros(2), p=2, count=0) == []


def test_random_cuts_counterexample_empty():
    assert random_cuts(0.6 * np.eye(2), np.zeros(2), p=2, count=500, nnz=2, seed=1) == []


def test_random_cuts_deterministic():
    rng = np.random.default_rng(2)
    X, x = random_psd_point(rng, 5, rank=1)
    a = random_cuts(X, x, p=5, count=200, nnz=3, seed=42)
    b = random_cuts(X, x, p=5, count=200, nnz=3, seed=42)
    assert a == b
    assert all(sum(1 for v in c.a if v != 0) == 3 for c in a)


def test_random_cuts_nnz_validation():
    with pytest.raises(ValueError):
        random_cuts(np.eye(2), np.zeros(2), p=2, count=1, nnz=3)


def test_sphere_cut_one_dim_matches_unit_cut():
    tag, form = sphere_cut_lifted(1, 1)
    cut_form = lift(
        QcqpProblem(1, 1, QuadraticForm(np.zeros((1, 1)), np.zeros(1), 0.0), ()),
        [Cut((1,), 0)],
    ).rows[0].form
    assert np.array_equal(form.P, cut_form.P)
    assert np.array_equal(form.q, cut_form.q)
    assert form.r == cut_form.r


def test_sphere_cut_equality_on_binary_points():
    _, form = sphere_cut_lifted(4, 4)
    rng = np.random.default_rng(1)
    for _ in range(20):
        z = rng.integers(0, 2, size=4).astype(float)
        assert form.lifted_value(np.outer(z, z), z) == pytest.approx(0.0, abs=1e-12)


def test_sphere_cut_violated_by_fractional_center():
    _, form = sphere_cut_lifted(2, 2)
    x = np.full(2, 0.5)
    assert form.lifted_value(np.outer(x, x), x) == pytest.approx(0.5)


def test_sphere_cut_requires_pure_integer():
    with pytest.raises(ValueError):
        sphere_cut_lifted(3, 2)


def test_lattice_validity_randomized():
    rng = np.random.default_rng(123)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        a = rng.integers(-3, 4, size=n)
        if np.all(a == 0):
            a[0] = 1
        cut = Cut(tuple(a), int(rng.integers(-5, 6)))
        for _ in range(50):
            x = rng.integers(-10, 11, size=n)
            assert cut.holds_at(x)


def test_violation_upper_bound_invariant():
    # violation <= -a'Ma + 1/4 for any integer offset and PSD-feasible point
    rng = np.random.default_rng(77)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        X, x = random_psd_point(rng, n)
        M = slack_matrix(X, x)
        a = rng.integers(-3, 4, size=n)
        if np.all(a == 0):
            a[0] = 1
        b = int(rng.integers(-4, 5))
        v = violation(Cut(tuple(a), b), X, x)
        af = a.astype(float)
        assert v <= -af @ M @ af + 0.25 + 1e-9


def test_no_cut_certified_soundness():
    # when the certificate fires, exhaustive enumeration finds nothing
    rng = np.random.default_rng(31)
    hits = 0
    for _ in range(40):
        n = int(rng.integers(2, 6))
        x = rng.uniform(-1.0, 1.0, size=n)
        Q = np.linalg.qr(rng.normal(size=(n, n)))[0]
        lam = 0.25 + rng.uniform(0.0, 1.0, size=n)
        X = np.outer(x, x) + (Q * lam) @ Q.T
        res = eig_cut(X, x, p=n)
        if res is NO_CUT_CERTIFIED:
            hits += 1
            for k in (1, 2, 3):
                assert enumerate_cuts(X, x, p=n, k=k) == []
    assert hits > 0


def test_adding_cut_never_lowers_bound(ils_1d):
    base = solve(lift(ils_1d))
    cuts = enumerate_cuts(base.X, base.x, p=1, k=1)
    assert cuts
    tightened = solve(lift(ils_1d, cuts))
    assert tightened.f_sdp >= base.f_sdp - 2e-7 * (1.0 + abs(base.f_sdp))
