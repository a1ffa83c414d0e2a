"""Brute-force ground truth for desk-scale verification.

Plain enumeration over integer boxes (no decoding tricks): this module is
the trust anchor that bounds and global solves are tested against, so it
favors clarity over speed.  Integer-valued data is evaluated in int64 for
exact comparisons.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from .model import QcqpProblem, Sense, normalize_equalities

MAX_BOX_POINTS = 10_000_000
_CHUNK = 1 << 14


class BoxTooLargeError(ValueError):
    """Enumeration volume exceeds the supported limit."""


def _mixed_radix_points(lo: np.ndarray, sizes: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Rows `start:stop` of the lexicographic enumeration of the box."""
    idx = np.arange(start, stop, dtype=np.int64)
    n = sizes.size
    out = np.empty((idx.size, n), dtype=np.int64)
    rem = idx
    for j in range(n - 1, -1, -1):
        out[:, j] = lo[j] + rem % sizes[j]
        rem = rem // sizes[j]
    return out


def _is_integral(*arrays) -> bool:
    return all(np.all(a == np.round(a)) for a in arrays)


def brute_force(
    problem: QcqpProblem,
    box: Tuple[np.ndarray, np.ndarray],
    feas_tol: float = 1e-8,
) -> Tuple[float, List[np.ndarray]]:
    """Exhaustive minimum over the integer box, feasibility-filtered.

    Returns (optimal value, list of argmin points); +inf and no points when
    the feasible set is empty.  Requires a pure integer problem and a box of
    at most 10^7 points.
    """
    if problem.p != problem.n:
        raise ValueError("brute force requires a pure integer problem (p = n)")
    problem = normalize_equalities(problem)
    lo = np.asarray(box[0], dtype=np.int64)
    hi = np.asarray(box[1], dtype=np.int64)
    if lo.shape != (problem.n,) or hi.shape != (problem.n,):
        raise ValueError("box bounds must have length n")
    if np.any(lo > hi):
        raise ValueError("box has lo > hi")
    sizes = hi - lo + 1
    total = int(np.prod(sizes.astype(object)))
    if total > MAX_BOX_POINTS:
        raise BoxTooLargeError(f"box has {total} points (limit {MAX_BOX_POINTS})")

    obj = problem.objective
    exact = _is_integral(obj.P * 2, obj.q, np.array([obj.r])) and all(
        _is_integral(f.P * 2, f.q, np.array([f.r])) for f, _ in problem.constraints
    )

    def eval_chunk(pts: np.ndarray):
        x = pts.astype(float)
        feas = np.ones(pts.shape[0], dtype=bool)
        for form, _ in problem.constraints:
            vals = np.einsum("ij,jk,ik->i", x, form.P, x) + x @ form.q + form.r
            scale = 1.0 + np.abs(vals)
            feas &= vals <= feas_tol * scale
        f = np.einsum("ij,jk,ik->i", x, obj.P, x) + x @ obj.q + obj.r
        return f, feas

    best = math.inf
    for start in range(0, total, _CHUNK):
        pts = _mixed_radix_points(lo, sizes, start, min(start + _CHUNK, total))
        f, feas = eval_chunk(pts)
        if np.any(feas):
            best = min(best, float(f[feas].min()))
    if not math.isfinite(best):
        return math.inf, []

    argmins: List[np.ndarray] = []
    tie_tol = 0.0 if exact else 1e-9 * (1.0 + abs(best))
    for start in range(0, total, _CHUNK):
        pts = _mixed_radix_points(lo, sizes, start, min(start + _CHUNK, total))
        f, feas = eval_chunk(pts)
        hit = feas & (f <= best + tie_tol)
        for row in pts[hit]:
            argmins.append(row.copy())
    return best, argmins


def brute_force_maxcut(W) -> Tuple[float, np.ndarray]:
    """Exact maximum cut over +/-1 assignments with x_1 fixed to +1."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if n > 22:
        raise ValueError("max-cut brute force limited to n <= 22")
    if n == 0:
        return 0.0, np.zeros(0, dtype=np.int64)
    total_weight = float(W.sum())
    patterns = 1 << (n - 1)
    best_val = -math.inf
    best_x = None
    shifts = np.arange(n - 1, dtype=np.uint64)
    for start in range(0, patterns, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, patterns), dtype=np.uint64)
        bits = (idx[:, None] >> shifts[None, :]) & np.uint64(1)
        x = np.empty((idx.size, n))
        x[:, 0] = 1.0
        x[:, 1:] = 1.0 - 2.0 * bits.astype(float)
        quad = np.einsum("ij,jk,ik->i", x, W, x)
        vals = 0.25 * (total_weight - quad)
        k = int(np.argmax(vals))
        if float(vals[k]) > best_val:
            best_val = float(vals[k])
            best_x = x[k].astype(np.int64)
    return best_val, best_x


def ils_box(A, x_cts) -> Tuple[np.ndarray, np.ndarray]:
    """Integer box guaranteed to contain the integer least squares optimum.

    With U the objective at the rounded target and s the smallest singular
    value of A, any x with |x_i - x_cts_i| > sqrt(U)/s + 1 for some i has
    ||A(x - x_cts)||^2 >= s^2 ||x - x_cts||^2 > U.
    """
    A = np.asarray(A, dtype=float)
    x_cts = np.asarray(x_cts, dtype=float)
    sigma = np.linalg.svd(A, compute_uv=False)
    smin = float(sigma.min()) if sigma.size else 0.0
    if smin <= 1e-12 * max(1.0, float(sigma.max()) if sigma.size else 0.0):
        raise ValueError("A must have full column rank")
    rounded = np.round(x_cts)
    resid = A @ (rounded - x_cts)
    U = float(resid @ resid)
    radius = math.sqrt(U) / smin + 1.0
    lo = np.floor(x_cts - radius).astype(np.int64)
    hi = np.ceil(x_cts + radius).astype(np.int64)
    return lo, hi


def ils_box_for_problem(problem: QcqpProblem) -> Tuple[np.ndarray, np.ndarray]:
    """ils_box from the expanded (P, q, r) data: any A with A'A = P gives the
    same objective, so a symmetric square root of P works."""
    if problem.constraints or problem.p != problem.n:
        raise ValueError("expected an unconstrained pure-integer problem")
    P = problem.objective.P
    w, V = np.linalg.eigh(P)
    if w.min() <= 1e-12 * max(1.0, w.max()):
        raise ValueError("objective matrix must be positive definite")
    A_eq = (V * np.sqrt(w)) @ V.T
    x_cts = np.linalg.solve(P, -0.5 * problem.objective.q)
    return ils_box(A_eq, x_cts)
