import numpy as np
import pytest

from miqcqp import QcqpProblem, QuadraticForm, Sense


@pytest.fixture
def counterexample():
    """min -|x|^2 s.t. |x|^2 <= 1.2 over Z^2; optimum -1, relaxation -1.2."""
    objective = QuadraticForm(-np.eye(2), np.zeros(2), 0.0)
    ball = QuadraticForm(np.eye(2), np.zeros(2), -1.2)
    return QcqpProblem(2, 2, objective, ((ball, Sense.LEQ),))


@pytest.fixture
def ils_1d():
    """min (x - 0.4)^2 over Z; optimum 0.16 at x = 0."""
    objective = QuadraticForm(np.eye(1), np.array([-0.8]), 0.16)
    return QcqpProblem(1, 1, objective, ())


@pytest.fixture
def triangle_W():
    W = np.ones((3, 3)) - np.eye(3)
    return W


def random_psd_point(rng, n, rank=None):
    """A PSD-feasible lifted point (X, x) with X - xx' PSD by construction."""
    x = rng.uniform(-2.0, 2.0, size=n)
    k = rank if rank is not None else n
    B = rng.normal(size=(n, k)) / np.sqrt(max(k, 1))
    X = np.outer(x, x) + B @ B.T
    return 0.5 * (X + X.T), x
