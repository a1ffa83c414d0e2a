"""Feasible points from SDP solutions via randomized rounding.

For integer least squares the relaxation solution (X, x) defines a Gaussian
with mean x and covariance X - xx'; samples are rounded to the lattice and
polished by greedy single-coordinate descent (the polish is standard
practice, not part of the sampling scheme).  For max-cut the +/-1
second-moment matrix is Gram-factored and random hyperplanes yield cuts.
Both are deterministic given the seed, with per-sample derived seeds so the
samples can be evaluated in any order.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .instances import cut_value
from .model import QcqpProblem
from .rng import PortableRng

PSD_CLIP_TOL = 1e-8


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """F with FF' = projection of M onto the PSD cone (eigenvalues clipped)."""
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    w = np.where(w > PSD_CLIP_TOL * scale, w, np.maximum(w, 0.0))
    return V * np.sqrt(np.clip(w, 0.0, None))


def _greedy_descent(x: np.ndarray, P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Single-coordinate integer moves until none improves.

    Moving x_i by delta changes the objective by delta^2 P_ii + delta * g_i
    with g_i = 2(Px)_i + q_i; for P_ii > 0 the best integer delta is the
    rounded unconstrained minimizer.
    """
    x = x.astype(float).copy()
    Px = P @ x
    n = x.size
    for _ in range(200 * n):
        g = 2.0 * Px + q
        diag = np.diag(P)
        pos = diag > 1e-12
        delta = np.zeros(n)
        delta[pos] = np.round(-g[pos] / (2.0 * diag[pos]))
        # coordinates with vanishing curvature: probe unit steps
        for i in np.nonzero(~pos)[0]:
            delta[i] = -1.0 if g[i] > 0 else 1.0
        gain = delta * delta * diag + delta * g
        i = int(np.argmin(gain))
        if gain[i] >= -1e-12 or delta[i] == 0.0:
            break
        x[i] += delta[i]
        Px += delta[i] * P[:, i]
    return x


def ils_round(solution, problem: QcqpProblem, samples: int, seed: int) -> Tuple[np.ndarray, float]:
    """Best lattice point from Gaussian rounding of an integer least squares
    relaxation; always an upper bound on the optimum."""
    if samples < 1:
        raise ValueError("need at least one sample")
    if problem.constraints or problem.p != problem.n:
        raise ValueError("expected an unconstrained pure-integer problem")
    P = problem.objective.P
    q = problem.objective.q
    x_hat = np.asarray(solution.x, dtype=float)
    F = _psd_factor(np.asarray(solution.X, dtype=float) - np.outer(x_hat, x_hat))
    n = problem.n
    root = PortableRng(seed)

    best_x = _greedy_descent(np.round(x_hat), P, q)
    best_f = problem.objective.evaluate(best_x)
    for k in range(samples):
        g = root.derive(k).normal(n)
        cand = _greedy_descent(np.round(x_hat + F @ g), P, q)
        f = problem.objective.evaluate(cand)
        if f < best_f - 1e-15 or (f == best_f and tuple(cand) < tuple(best_x)):
            best_x, best_f = cand, f
    return best_x.astype(np.int64), float(best_f)


def maxcut_round(solution, W, samples: int, seed: int) -> Tuple[np.ndarray, float]:
    """Hyperplane rounding of the 0-1 max-cut relaxation.

    Builds the +/-1 second-moment matrix Y = 4X - 2x1' - 2 1x' + 11',
    Gram-factors its PSD projection, and keeps the best of `samples` random
    hyperplane cuts.  The value never exceeds the true maximum cut.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    x_hat = np.asarray(solution.x, dtype=float)
    X = np.asarray(solution.X, dtype=float)
    ones = np.ones(n)
    Y = 4.0 * X - 2.0 * np.outer(x_hat, ones) - 2.0 * np.outer(ones, x_hat) + np.outer(ones, ones)
    V = _psd_factor(Y)
    root = PortableRng(seed)
    best_z = None
    best_val = -np.inf
    for k in range(samples):
        g = root.derive(k).normal(n)
        signs = np.where(V @ g >= 0.0, 1.0, -1.0)
        z = 0.5 * (signs + 1.0)
        val = cut_value(W, z)
        if val > best_val:
            best_val = val
            best_z = z.astype(np.int64)
    return best_z, float(best_val)
