"""Interior-point solver for the lifted SDP relaxation.

The relaxation is

    minimize    Tr(P0 X) + q0'x + r0
    subject to  Tr(Pi X) + qi'x + ri <= 0       (one row per lifted constraint)
                [[X, x], [x', 1]] >= 0

which, writing Z for the bordered matrix and folding each row's data into a
bordered coefficient matrix, is a linear SDP over one PSD block of size n+1
plus a nonnegative slack per inequality.  It is solved with an infeasible
primal-dual path-following method (HKM scaling, Mehrotra predictor-corrector)
using a dense normal-equations solve; the bordered corner entry is kept at 1
structurally by pinning it after every primal update.

Constraint data is normalized internally to unit Frobenius norm for
conditioning, but multipliers are reported in the caller's original
convention (scaling a constraint by t scales its dual by 1/t, and branching
compares cut duals in the unscaled form).

The dual of the relaxation is the multiplier problem

    maximize    r0 + sum_i lam_i ri - alpha
    subject to  lam >= 0,
                [[P0 + sum lam_i Pi, (q0 + sum lam_i qi)/2], [.', alpha]] >= 0

so every iterate yields a candidate certified lower bound; the best one found
is kept and returned when the iteration limit is hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .model import LiftedRow, LiftedSdp, QuadraticForm, Tag


class SolveStatus(Enum):
    OPTIMAL = "OPTIMAL"
    MAX_ITERS = "MAX_ITERS"
    PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
    UNBOUNDED_BELOW = "UNBOUNDED_BELOW"


@dataclass(frozen=True)
class SolverSettings:
    rel_gap_tol: float = 1e-7
    feas_tol: float = 1e-7
    max_iters: int = 200
    step_fraction: float = 0.98
    track_certificates: bool = True
    cert_tol: float = 1e-6

    def __post_init__(self):
        if self.rel_gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class IterStats:
    pobj: float
    dobj: float
    rel_gap: float
    primal_res: float
    dual_res: float
    mu: float
    certified_bound: Optional[float]


@dataclass(frozen=True)
class SdpSolution:
    X: np.ndarray
    x: np.ndarray
    f_sdp: float
    duals: Dict[Tag, float]
    dual_objective: float
    status: SolveStatus
    iterations: int
    alpha: float
    certified_bound: Optional[float]
    trace: Tuple[IterStats, ...] = field(repr=False, default=())

    def dual_vector(self, lift: LiftedSdp) -> np.ndarray:
        return np.array([self.duals.get(row.tag, 0.0) for row in lift.rows])


def _bordered_coeff(form: QuadraticForm, d: int) -> np.ndarray:
    n = d - 1
    B = np.zeros((d, d))
    B[:n, :n] = form.P
    B[:n, n] = 0.5 * form.q
    B[n, :n] = 0.5 * form.q
    return B


def _psd_max_step(Z: np.ndarray, dZ: np.ndarray) -> float:
    """Largest t with Z + t*dZ PSD, for Z positive definite."""
    L = np.linalg.cholesky(Z)
    inner = solve_triangular(L, dZ, lower=True)
    W = solve_triangular(L, inner.T, lower=True)
    wmin = float(np.linalg.eigvalsh(0.5 * (W + W.T))[0])
    if wmin >= -1e-14:
        return math.inf
    return -1.0 / wmin


def _lp_max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


def _chol_with_jitter(M: np.ndarray):
    scale = max(float(np.trace(M)) / max(M.shape[0], 1), 1e-300)
    jitter = 0.0
    for _ in range(8):
        try:
            return cho_factor(M + jitter * np.eye(M.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-14 * scale)
    return None


class _BoundTracker:
    """Per-iterate dual bound bookkeeping in the original data convention."""

    def __init__(self, lift: LiftedSdp, B_orig: np.ndarray, C_orig: np.ndarray, tol: float):
        self.lift = lift
        self.B_orig = B_orig  # stacked bordered row coefficients, original units
        self.C_orig = C_orig
        self.r_vec = np.array([row.form.r for row in lift.rows])
        self.r0 = lift.objective.r
        self.tol = tol
        self.best_bound: Optional[float] = None
        self.best_lam: Optional[np.ndarray] = None

    def bound(self, lam: np.ndarray) -> Optional[float]:
        n = self.lift.n
        D = self.C_orig.copy()
        if lam.size:
            D += np.tensordot(lam, self.B_orig, axes=(0, 0))
        Y = D[:n, :n]
        yv = D[:n, n]
        w, V = np.linalg.eigh(Y)
        scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
        thr = 1e-9 * scale
        if w.size and w[0] < -100.0 * thr:
            return None
        c = V.T @ yv
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(w > thr, c * c / np.where(w > thr, w, 1.0), c * c / thr)
        alpha = float(np.sum(terms))
        D[n, n] = alpha
        if float(np.linalg.eigvalsh(0.5 * (D + D.T))[0]) < -self.tol:
            return None
        value = float(self.r0 + lam @ self.r_vec - alpha)
        if self.best_bound is None or value > self.best_bound:
            self.best_bound = value
            self.best_lam = lam.copy()
        return value


def solve(sdp: LiftedSdp, settings: Optional[SolverSettings] = None) -> SdpSolution:
    """Solve the lifted SDP; see module docstring for the method.

    Returns primal (X, x), objective f_sdp, a nonnegative multiplier per row
    keyed by provenance, the dual objective, and status.  On MAX_ITERS the
    primal fields hold the last iterate while the multipliers are those of
    the best certified dual bound encountered.
    """
    if settings is None:
        settings = SolverSettings()
    n = sdp.n
    d = n + 1
    m = sdp.m
    tau = settings.step_fraction

    # original-unit data
    C_orig = _bordered_coeff(sdp.objective, d)
    B_orig = np.stack([_bordered_coeff(row.form, d) for row in sdp.rows]) if m else np.zeros((0, d, d))
    r_vec = np.array([row.form.r for row in sdp.rows])
    r0 = sdp.objective.r

    # scaled data: rows to unit Frobenius norm of (P, q, r); objective by (P, q)
    def _data_norm(form: QuadraticForm, with_r: bool) -> float:
        v = float(np.linalg.norm(form.P)) ** 2 + float(form.q @ form.q)
        if with_r:
            v += form.r * form.r
        return math.sqrt(v)

    t_obj = max(1.0, _data_norm(sdp.objective, with_r=False))
    row_scale = np.array(
        [max(1e-12, _data_norm(row.form, with_r=True)) for row in sdp.rows]
    )
    C = C_orig / t_obj
    E = np.zeros((d, d))
    E[n, n] = 1.0
    A = np.empty((m + 1, d, d))
    if m:
        A[:m] = B_orig / row_scale[:, None, None]
    A[m] = E
    b = np.empty(m + 1)
    b[:m] = -r_vec / row_scale
    b[m] = 1.0
    A_flat = A.reshape(m + 1, d * d)
    b_norm = float(np.linalg.norm(b))
    C_norm = float(np.linalg.norm(C))

    # infeasible start: X = I, x = 0, unit slacks and duals
    Z = np.eye(d)
    s = np.ones(m)
    y = np.zeros(m + 1)
    S = np.eye(d)
    sig = np.ones(m)

    tracker = _BoundTracker(sdp, B_orig, C_orig, settings.cert_tol) if settings.track_certificates else None

    def unscaled_lam() -> np.ndarray:
        if m == 0:
            return np.zeros(0)
        return t_obj * sig / row_scale

    def assemble(status: SolveStatus, iters: int, trace) -> SdpSolution:
        lam = unscaled_lam()
        alpha = -t_obj * y[m]
        if (
            status is SolveStatus.MAX_ITERS
            and tracker is not None
            and tracker.best_lam is not None
        ):
            lam = tracker.best_lam
            dual_obj = tracker.best_bound
            alpha = float(r0 + lam @ r_vec - dual_obj)
        else:
            dual_obj = float(r0 + lam @ r_vec - alpha)
        f_val = float(np.sum(C_orig * Z) + r0)
        if status is SolveStatus.PRIMAL_INFEASIBLE:
            f_val = math.inf
            dual_obj = math.inf
        elif status is SolveStatus.UNBOUNDED_BELOW:
            f_val = -math.inf
            dual_obj = -math.inf
        duals = {row.tag: float(lam[i]) for i, row in enumerate(sdp.rows)}
        return SdpSolution(
            X=Z[:n, :n].copy(),
            x=Z[:n, n].copy(),
            f_sdp=f_val,
            duals=duals,
            dual_objective=float(dual_obj) if dual_obj is not None else float("nan"),
            status=status,
            iterations=iters,
            alpha=float(alpha),
            certified_bound=None if tracker is None else tracker.best_bound,
            trace=tuple(trace),
        )

    trace = []
    stall = 0
    for it in range(settings.max_iters):
        AZ = A_flat @ Z.reshape(-1)
        rp = b - AZ
        rp[:m] -= s
        Aty = np.tensordot(y, A, axes=(0, 0))
        Rd = C - S - Aty
        rd_lp = -y[:m] - sig
        mu = (float(np.sum(Z * S)) + (float(s @ sig) if m else 0.0)) / (d + m)

        pobj = t_obj * float(np.sum(C * Z)) + r0
        dobj = t_obj * float(b @ y) + r0
        pres = float(np.linalg.norm(rp)) / (1.0 + b_norm)
        dres = float(np.linalg.norm(Rd)) / (1.0 + C_norm)
        if m:
            dres = max(dres, float(np.abs(rd_lp).max()) / 2.0)
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))

        cert_bound = tracker.bound(unscaled_lam()) if tracker is not None else None
        trace.append(IterStats(pobj, dobj, rel_gap, pres, dres, mu, cert_bound))

        if pres <= settings.feas_tol and dres <= settings.feas_tol and rel_gap <= settings.rel_gap_tol:
            return assemble(SolveStatus.OPTIMAL, it, trace)

        # divergence: certify a primal ray (dual infeasible -> unbounded below)
        # or a dual ray (Farkas -> primal infeasible) on normalized iterates
        z_norm = float(np.linalg.norm(Z))
        y_norm = float(np.linalg.norm(y))
        if z_norm > 1e6 * d:
            Zh = Z / z_norm
            sh = s / z_norm
            row_vals = A_flat @ Zh.reshape(-1)
            viol = np.abs(row_vals[:m] + sh).max() if m else 0.0
            viol = max(viol, abs(row_vals[m]))
            if (
                viol <= 1e-6
                and float(np.linalg.eigvalsh(Zh)[0]) >= -1e-8
                and float(np.sum(C * Zh)) < -1e-8
                and pres <= 1e-4
            ):
                return assemble(SolveStatus.UNBOUNDED_BELOW, it, trace)
        if y_norm > 1e6:
            yh = y / y_norm
            S_ray = -np.tensordot(yh, A, axes=(0, 0))
            if (
                float(np.linalg.eigvalsh(0.5 * (S_ray + S_ray.T))[0]) >= -1e-8
                and (m == 0 or float((-yh[:m]).min()) >= -1e-8)
                and float(b @ yh) > 1e-8
            ):
                return assemble(SolveStatus.PRIMAL_INFEASIBLE, it, trace)

        # Schur complement M[i,j] = <A_i, Z A_j S^-1> (+ s/sig on the LP diagonal)
        try:
            S_fact = cho_factor(S, lower=True)
        except np.linalg.LinAlgError:
            break
        S_inv = cho_solve(S_fact, np.eye(d))
        T = np.matmul(np.matmul(Z[None, :, :], A), S_inv[None, :, :])
        M = A_flat @ T.transpose(0, 2, 1).reshape(m + 1, d * d).T
        M = 0.5 * (M + M.T)
        if m:
            M[np.arange(m), np.arange(m)] += s / sig
        M_fact = _chol_with_jitter(M)
        if M_fact is None:
            break

        def direction(Rc, rc_lp):
            G = (Rc - Z @ Rd) @ S_inv
            rhs = rp - A_flat @ G.T.reshape(-1)
            if m:
                rhs[:m] -= rc_lp / sig - (s / sig) * rd_lp
            dy = cho_solve(M_fact, rhs)
            dS = Rd - np.tensordot(dy, A, axes=(0, 0))
            dZ = (Rc - Z @ dS) @ S_inv
            dZ = 0.5 * (dZ + dZ.T)
            dsig = rd_lp - dy[:m]
            ds = (rc_lp - s * dsig) / sig if m else np.zeros(0)
            return dZ, ds, dy, dS, dsig

        ZS = Z @ S
        # predictor
        dZ_a, ds_a, dy_a, dS_a, dsig_a = direction(-ZS, -(s * sig) if m else np.zeros(0))
        ap = min(1.0, _psd_max_step(Z, dZ_a), _lp_max_step(s, ds_a))
        ad = min(1.0, _psd_max_step(S, dS_a), _lp_max_step(sig, dsig_a))
        mu_aff = (
            float(np.sum((Z + ap * dZ_a) * (S + ad * dS_a)))
            + (float((s + ap * ds_a) @ (sig + ad * dsig_a)) if m else 0.0)
        ) / (d + m)
        sigma_c = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0

        # corrector
        Rc = sigma_c * mu * np.eye(d) - ZS - dZ_a @ dS_a
        rc_lp = sigma_c * mu - s * sig - ds_a * dsig_a if m else np.zeros(0)
        dZ, ds, dy, dS, dsig = direction(Rc, rc_lp)

        ap = min(1.0, tau * _psd_max_step(Z, dZ), tau * _lp_max_step(s, ds))
        ad = min(1.0, tau * _psd_max_step(S, dS), tau * _lp_max_step(sig, dsig))
        if ap < 1e-10 and ad < 1e-10:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0

        Z = Z + ap * dZ
        Z = 0.5 * (Z + Z.T)
        Z[n, n] = 1.0  # structural equality of the bordered corner
        s = s + ap * ds
        y = y + ad * dy
        S = S + ad * dS
        S = 0.5 * (S + S.T)
        sig = sig + ad * dsig

    return assemble(SolveStatus.MAX_ITERS, settings.max_iters, trace)


def resolve_perturbed(
    sdp: LiftedSdp,
    constraint_tag: Tag,
    u: float,
    settings: Optional[SolverSettings] = None,
) -> SdpSolution:
    """Re-solve with one row's inequality F(X, x) <= 0 relaxed to F(X, x) <= u.

    Used for sensitivity checks of the bound against its dual multiplier.
    """
    idx = sdp.tag_index(constraint_tag)
    rows = list(sdp.rows)
    old = rows[idx]
    rows[idx] = LiftedRow(
        old.tag, QuadraticForm(old.form.P, old.form.q, old.form.r - u)
    )
    perturbed = LiftedSdp(sdp.n, sdp.objective, tuple(rows))
    return solve(perturbed, settings)
