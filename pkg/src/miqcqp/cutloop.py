"""Iterative tightening: solve the relaxation, separate violated lattice
cuts, add them, and repeat until no cut is found, the round budget is spent,
or the eigenvalue certificate shows no violated cut exists.

The k=1 baseline used for gap-ratio comparisons fixes the cuts
x_i(x_i - 1) >= 0 up front (offset 0), matching the usual treatment of
near-unit-box integer least squares instances; the general loop instead
anchors each cut's offset at the current relaxation solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from . import cuts as cutgen
from .certificate import CannotCertifyError, DualCertificate, dual_objective, extract_certificate
from .cuts import Cut, NO_CUT_CERTIFIED
from .model import LiftedSdp, QcqpProblem, lift, normalize_equalities
from .rng import PortableRng
from .solver import SdpSolution, SolveStatus, SolverSettings, solve


class Strategy(Enum):
    ENUM_K1 = "ENUM_K1"
    ENUM_K2 = "ENUM_K2"
    ENUM_K3 = "ENUM_K3"
    EIG = "EIG"
    RANDOM3 = "RANDOM3"
    COMBINED = "COMBINED"


@dataclass(frozen=True)
class CutLoopConfig:
    strategy: Strategy = Strategy.COMBINED
    max_rounds: int = 10
    cuts_per_round: Optional[int] = None  # None: 4n
    eps_viol: float = 1e-6
    seed: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)
    baseline_k1_fixed: bool = False
    random_count: int = 2000
    random_nnz: int = 3
    eig_k_round: int = 3
    eig_scalings: Optional[Tuple[float, ...]] = None
    add_sphere_cut: bool = False
    initial_cuts: Tuple[Cut, ...] = ()

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    f_sdp: float
    cuts_added: int
    cuts_total: int
    solver_iterations: int
    wall_ms: float
    certified_bound: Optional[float]
    status: str


@dataclass(frozen=True)
class TightenReport:
    status: SolveStatus
    rounds: Tuple[RoundRecord, ...]
    solution: SdpSolution
    lifted: LiftedSdp
    cut_pool: Tuple[Cut, ...]
    certificate: Optional[DualCertificate]
    certified_bound: Optional[float]
    no_cut_certified: bool

    @property
    def f_sdp(self) -> float:
        return self.solution.f_sdp


def baseline_k1_cuts(problem: QcqpProblem) -> List[Cut]:
    """The fixed unit cuts x_i(x_i - 1) >= 0, one per integer coordinate."""
    out = []
    for i in range(problem.p):
        a = [0] * problem.n
        a[i] = 1
        out.append(Cut(tuple(a), 0))
    return out


def _generate(
    strategy: Strategy,
    sol: SdpSolution,
    p: int,
    config: CutLoopConfig,
    round_seed: int,
    cap: int,
) -> Tuple[List[Cut], bool]:
    """Violated-cut candidates at the current solution; second value is True
    when the eigenvalue certificate rules out any violated cut."""
    X, x = sol.X, sol.x
    certified = False
    pool: List[Cut] = []

    def add(cs):
        pool.extend(cs)

    if strategy in (Strategy.ENUM_K1, Strategy.ENUM_K2, Strategy.ENUM_K3):
        k = {Strategy.ENUM_K1: 1, Strategy.ENUM_K2: 2, Strategy.ENUM_K3: 3}[strategy]
        add(cutgen.enumerate_cuts(X, x, p, k, config.eps_viol, cap))
    elif strategy is Strategy.EIG:
        res = cutgen.eig_cut(X, x, p, config.eig_scalings, config.eig_k_round)
        if res is NO_CUT_CERTIFIED:
            certified = True
        else:
            add(res)
    elif strategy is Strategy.RANDOM3:
        nnz = min(config.random_nnz, p)
        add(cutgen.random_cuts(X, x, p, config.random_count, nnz, config.eps_viol, round_seed))
    elif strategy is Strategy.COMBINED:
        add(cutgen.enumerate_cuts(X, x, p, 1, config.eps_viol, cap))
        if p >= 2:
            add(cutgen.enumerate_cuts(X, x, p, 2, config.eps_viol, cap))
        res = cutgen.eig_cut(X, x, p, config.eig_scalings, config.eig_k_round)
        if res is NO_CUT_CERTIFIED:
            certified = True
        else:
            add(res)
        if p >= 1:
            nnz = min(config.random_nnz, p)
            add(cutgen.random_cuts(X, x, p, config.random_count, nnz, config.eps_viol, round_seed))
    else:  # pragma: no cover
        raise ValueError(f"unknown strategy {strategy}")

    # pool, re-scored and capped by violation
    scored = []
    seen = set()
    for cut in pool:
        if cut in seen:
            continue
        seen.add(cut)
        v = cutgen.violation(cut, X, x)
        if v > config.eps_viol:
            scored.append((v, cut))
    scored.sort(key=lambda t: (-t[0], t[1].a, t[1].b))
    return [cut for _, cut in scored[:cap]], certified


def tighten(problem: QcqpProblem, config: Optional[CutLoopConfig] = None) -> TightenReport:
    """Run the cutting loop; see module docstring.

    Equalities are normalized first (idempotent).  The bound sequence must be
    nondecreasing up to twice the solver gap tolerance; the final bound is
    certified through the dual and verification must pass.
    """
    if config is None:
        config = CutLoopConfig()
    problem = normalize_equalities(problem)
    cap = config.cuts_per_round if config.cuts_per_round is not None else 4 * problem.n
    seed_stream = PortableRng(config.seed)

    pool: List[Cut] = baseline_k1_cuts(problem) if config.baseline_k1_fixed else []
    for cut in config.initial_cuts:
        if cut not in pool:
            pool.append(cut)
    extra = [cutgen.sphere_cut_lifted(problem.n, problem.p)] if config.add_sphere_cut else []

    records: List[RoundRecord] = []
    no_cut_certified = False
    sol: Optional[SdpSolution] = None
    lifted: Optional[LiftedSdp] = None
    added_this_round = len(pool)
    prev_f: Optional[float] = None

    for rnd in range(config.max_rounds):
        lifted = lift(problem, pool, extra)
        t0 = time.perf_counter()
        sol = solve(lifted, config.solver)
        wall_ms = 1000.0 * (time.perf_counter() - t0)
        round_bound = None
        last_cert = None
        if sol.status in (SolveStatus.OPTIMAL, SolveStatus.MAX_ITERS):
            try:
                last_cert = extract_certificate(sol, lifted)
                round_bound = dual_objective(lifted, last_cert)
            except CannotCertifyError:
                last_cert = None
        records.append(
            RoundRecord(
                rnd, sol.f_sdp, added_this_round, len(pool), sol.iterations,
                wall_ms, round_bound, sol.status.value,
            )
        )
        if sol.status is SolveStatus.PRIMAL_INFEASIBLE:
            break
        if sol.status is SolveStatus.UNBOUNDED_BELOW:
            if rnd > 0:
                raise RuntimeError("relaxation became unbounded after adding cuts")
            break
        if sol.status is SolveStatus.OPTIMAL and prev_f is not None:
            slack = 2.0 * config.solver.rel_gap_tol * (1.0 + abs(prev_f))
            if sol.f_sdp < prev_f - slack:
                raise RuntimeError(
                    f"bound decreased across rounds: {prev_f} -> {sol.f_sdp}"
                )
        if sol.status is SolveStatus.OPTIMAL:
            prev_f = sol.f_sdp
        if rnd == config.max_rounds - 1:
            break
        try:
            new_cuts, certified = _generate(
                config.strategy, sol, problem.p, config,
                seed_stream.derive(rnd).seed, cap,
            )
        except ValueError:
            # non-converged iterate without a PSD slack matrix: stop cutting
            break
        new_cuts = [c for c in new_cuts if c not in set(pool)]
        if certified:
            no_cut_certified = True
        if not new_cuts:
            break
        pool.extend(new_cuts)
        added_this_round = len(new_cuts)

    certificate = last_cert
    bound = records[-1].certified_bound

    return TightenReport(
        status=sol.status,
        rounds=tuple(records),
        solution=sol,
        lifted=lifted,
        cut_pool=tuple(pool),
        certificate=certificate,
        certified_bound=bound,
        no_cut_certified=no_cut_certified,
    )
