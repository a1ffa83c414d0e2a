"""Branch-and-cut global solver for pure-integer problems.

Each node solves the SDP relaxation of its subproblem (base constraints,
accumulated lattice cuts, accumulated branching inequalities), generates a
bounded number of cut rounds, and then branches.  The branching inequality
comes from the lattice cut whose dual variable is largest: the cut
(a'x - b)(a'x - (b+1)) >= 0 splits into the children a'x <= b and
a'x >= b+1, which partition the integer points and strictly tighten the cut,
so the cut row itself is dropped from both children.  When no cut has a
positive dual the most fractional variable is branched instead.

Node bounds are dual-certified before they are used for fathoming, the
incumbent is always the exact objective of a rounded feasible point (the
relaxation value equals it only in the rank-one case), and for problems
whose objective is integer-valued on the lattice the fathoming test uses the
ceiling of the node bound.
"""

from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from . import cuts as cutgen
from .certificate import CannotCertifyError, dual_objective, extract_certificate
from .cutloop import Strategy, _generate, CutLoopConfig
from .cuts import Cut
from .model import (
    LiftedSdp,
    QcqpProblem,
    QuadraticForm,
    Tag,
    add_box,
    lift,
    normalize_equalities,
)
from .solver import SdpSolution, SolveStatus, SolverSettings, solve

logger = logging.getLogger("miqcqp.bnc")


class NodeSelection(Enum):
    BEST_BOUND = "BEST_BOUND"
    DFS = "DFS"


class BranchRule(Enum):
    DUAL_CUT = "DUAL_CUT"
    MOST_FRACTIONAL = "MOST_FRACTIONAL"


class NoBranchError(RuntimeError):
    """The relaxation solution is integral; the caller should have fathomed."""


@dataclass(frozen=True)
class BncConfig:
    node_selection: NodeSelection = NodeSelection.BEST_BOUND
    max_nodes: int = 100_000
    cut_rounds_root: int = 2
    cut_rounds: int = 1
    cut_strategy: Strategy = Strategy.ENUM_K2
    cuts_per_round: Optional[int] = None
    integrality_tol: float = 1e-6
    branching: BranchRule = BranchRule.DUAL_CUT
    dual_threshold: float = 1e-6
    fathom_rel_tol: float = 1e-6
    eps_viol: float = 1e-6
    seed: int = 0
    threads: int = 1
    rounding_samples: int = 200  # randomized-rounding passes at the root
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class BncNode:
    node_id: int
    depth: int
    cuts: Tuple[Cut, ...]
    branch_rows: Tuple[Tuple[Tag, QuadraticForm], ...]
    parent_bound: float


@dataclass(frozen=True)
class BncResult:
    status: str  # OPTIMAL | NODE_LIMIT | INFEASIBLE
    x_star: Optional[np.ndarray]
    f_star: float
    nodes_explored: int
    global_lower_bound: float

    @property
    def optimal(self) -> bool:
        return self.status == "OPTIMAL"


@dataclass(frozen=True)
class BranchChoice:
    c: np.ndarray
    d: int
    removed_cut: Optional[Cut]


def try_incumbent(
    solution: SdpSolution, problem: QcqpProblem, tol: float = 1e-6
) -> Optional[Tuple[np.ndarray, float]]:
    """Round the relaxation point to the lattice; accept iff feasible for the
    problem constraints within tol.  The value is the exact objective of the
    rounded point, not the relaxation value."""
    x_int = np.round(np.asarray(solution.x, dtype=float))
    if not np.all(np.isfinite(x_int)):
        return None
    if not problem.feasible(x_int, tol):
        return None
    return x_int.astype(np.int64), float(problem.objective.evaluate(x_int))


def select_branching(
    solution: SdpSolution, lifted: LiftedSdp, config: BncConfig
) -> BranchChoice:
    """Branching inequality from the cut with the largest dual variable,
    falling back to the most fractional coordinate.

    Raises NoBranchError when the relaxation point is integral and no
    positive-dual cut exists.
    """
    if config.branching is BranchRule.DUAL_CUT:
        best = None
        for row in lifted.rows:
            if row.tag.kind != Tag.CUT:
                continue
            dual = solution.duals.get(row.tag, 0.0)
            if dual <= config.dual_threshold:
                continue
            a_tuple, b = row.tag.key
            key = (-dual, a_tuple, b)
            if best is None or key < best[0]:
                best = (key, a_tuple, b)
        if best is not None:
            _, a_tuple, b = best
            return BranchChoice(np.array(a_tuple, dtype=np.int64), int(b), Cut(a_tuple, b))
    x = np.asarray(solution.x, dtype=float)
    frac_dist = np.abs(x - np.round(x))
    i = int(np.argmax(frac_dist))
    if frac_dist[i] <= config.integrality_tol:
        raise NoBranchError("relaxation point is integral")
    c = np.zeros(x.size, dtype=np.int64)
    c[i] = 1
    return BranchChoice(c, int(math.floor(x[i])), None)


def _branch_rows(
    c: np.ndarray, d: int, seq: int
) -> Tuple[Tuple[Tag, QuadraticForm], Tuple[Tag, QuadraticForm]]:
    low = QuadraticForm.linear(c.astype(float), -float(d))
    high = QuadraticForm.linear(-c.astype(float), float(d + 1))
    return (Tag.branch(seq, 0), low), (Tag.branch(seq, 1), high)


def _objective_integral_on_lattice(problem: QcqpProblem) -> bool:
    P, q, r = problem.objective.P, problem.objective.q, problem.objective.r
    off = 2.0 * (P - np.diag(np.diag(P)))
    return (
        bool(np.all(np.diag(P) == np.round(np.diag(P))))
        and bool(np.all(off == np.round(off)))
        and bool(np.all(q == np.round(q)))
        and float(r) == round(r)
    )


def _root_rounding(
    sol: SdpSolution, problem: QcqpProblem, config: BncConfig
) -> Optional[Tuple[np.ndarray, float]]:
    """Seed the incumbent with randomized rounding where the problem shape
    supports it (Gaussian sampling for unconstrained integer minimization,
    hyperplane rounding for the 0-1 max-cut lift)."""
    from . import rounding
    from .instances import classify_problem, maxcut_weights

    kind = classify_problem(problem)
    try:
        if kind == "ils":
            x_int, f_val = rounding.ils_round(sol, problem, config.rounding_samples, config.seed)
            return x_int, f_val
        if kind == "maxcut":
            W = maxcut_weights(problem)
            z, value = rounding.maxcut_round(sol, W, config.rounding_samples, config.seed)
            z_f = z.astype(float)
            if problem.feasible(z_f, config.integrality_tol):
                return z.astype(np.int64), float(problem.objective.evaluate(z_f))
    except ValueError:
        return None
    return None


@dataclass
class _NodeEval:
    node: BncNode
    sol: Optional[SdpSolution]
    lifted: Optional[LiftedSdp]
    bound: float
    cuts: Tuple[Cut, ...]
    infeasible: bool
    incumbent: Optional[Tuple[np.ndarray, float]]


def branch_and_cut(
    problem: QcqpProblem,
    config: Optional[BncConfig] = None,
    box: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> BncResult:
    """Global solve of a pure-integer QCQP (p = n).

    The feasible set must be bounded; supply explicit integer box bounds via
    ``box`` when the constraints do not already bound it.
    """
    if config is None:
        config = BncConfig()
    if problem.p != problem.n:
        raise ValueError("branch-and-cut handles pure integer problems only (p = n)")
    problem = normalize_equalities(problem)
    if box is not None:
        problem = add_box(problem, np.asarray(box[0], float), np.asarray(box[1], float))
    integral_obj = _objective_integral_on_lattice(problem)
    cutcfg = CutLoopConfig(
        strategy=config.cut_strategy,
        eps_viol=config.eps_viol,
        seed=config.seed,
        solver=config.solver,
    )
    cap = config.cuts_per_round if config.cuts_per_round is not None else 4 * problem.n

    incumbent_x: Optional[np.ndarray] = None
    f_star = math.inf
    leaf_bounds: List[float] = []
    next_id = 0
    branch_seq = 0
    nodes_explored = 0

    heap: List[Tuple[float, int, BncNode]] = []
    stack: List[BncNode] = []

    def push(node: BncNode) -> None:
        if config.node_selection is NodeSelection.BEST_BOUND:
            heapq.heappush(heap, (node.parent_bound, node.node_id, node))
        else:
            stack.append(node)

    def pop() -> BncNode:
        if config.node_selection is NodeSelection.BEST_BOUND:
            return heapq.heappop(heap)[2]
        return stack.pop()

    def open_count() -> int:
        return len(heap) + len(stack)

    def fathom_eps() -> float:
        return config.fathom_rel_tol * (1.0 + (abs(f_star) if math.isfinite(f_star) else 0.0))

    def lift_bound(v: float) -> float:
        """Raise a valid bound to the next integer when the objective is
        integer-valued on the lattice (still a valid certified bound)."""
        if integral_obj and math.isfinite(v):
            return float(math.ceil(v - config.integrality_tol))
        return v

    def evaluate(node: BncNode, f_star_snapshot: float) -> _NodeEval:
        cuts = node.cuts
        lifted = lift(problem, cuts, node.branch_rows)
        sol = solve(lifted, config.solver)
        if sol.status is SolveStatus.PRIMAL_INFEASIBLE:
            return _NodeEval(node, sol, lifted, math.inf, cuts, True, None)
        if sol.status is SolveStatus.UNBOUNDED_BELOW:
            raise RuntimeError(
                "node relaxation is unbounded below; supply box bounds"
            )

        def certified(sol_, lifted_) -> float:
            try:
                cert = extract_certificate(sol_, lifted_)
                return dual_objective(lifted_, cert)
            except CannotCertifyError:
                return sol_.certified_bound if sol_.certified_bound is not None else -math.inf

        bound = certified(sol, lifted)
        rounds = config.cut_rounds_root if node.node_id == 0 else config.cut_rounds
        eps = config.fathom_rel_tol * (1.0 + abs(f_star_snapshot)) if math.isfinite(f_star_snapshot) else 0.0
        for _ in range(rounds):
            if math.isfinite(f_star_snapshot) and bound >= f_star_snapshot - eps:
                break
            try:
                new_cuts, _ = _generate(
                    config.cut_strategy, sol, problem.p, cutcfg,
                    config.seed + node.node_id, cap,
                )
            except ValueError:
                break
            new_cuts = [c for c in new_cuts if c not in set(cuts)]
            if not new_cuts:
                break
            cuts = cuts + tuple(new_cuts)
            lifted = lift(problem, cuts, node.branch_rows)
            sol = solve(lifted, config.solver)
            if sol.status is SolveStatus.PRIMAL_INFEASIBLE:
                return _NodeEval(node, sol, lifted, math.inf, cuts, True, None)
            bound = max(bound, certified(sol, lifted))
        cand = try_incumbent(sol, problem, config.integrality_tol)
        if node.node_id == 0 and config.rounding_samples > 0:
            seeded = _root_rounding(sol, problem, config)
            if seeded is not None and (cand is None or seeded[1] < cand[1]):
                cand = seeded
        return _NodeEval(node, sol, lifted, bound, cuts, False, cand)

    push(BncNode(next_id, 0, (), (), -math.inf))
    next_id += 1

    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        while open_count() > 0 and nodes_explored < config.max_nodes:
            batch: List[BncNode] = []
            limit = min(
                config.threads, open_count(), config.max_nodes - nodes_explored
            )
            while len(batch) < limit and open_count() > 0:
                node = pop()
                if lift_bound(node.parent_bound) >= f_star - fathom_eps():
                    leaf_bounds.append(lift_bound(node.parent_bound))
                    continue
                batch.append(node)
            if not batch:
                continue
            nodes_explored += len(batch)
            snapshot = f_star
            if executor is not None and len(batch) > 1:
                evals = list(executor.map(lambda nd: evaluate(nd, snapshot), batch))
            else:
                evals = [evaluate(nd, snapshot) for nd in batch]

            for ev in evals:
                node = ev.node
                if ev.infeasible:
                    leaf_bounds.append(math.inf)
                    logger.info(
                        "node=%d depth=%d bound=inf incumbent=%.12g open=%d",
                        node.node_id, node.depth, f_star, open_count(),
                    )
                    continue
                if ev.incumbent is not None and ev.incumbent[1] < f_star:
                    incumbent_x, f_star = ev.incumbent
                eff_bound = lift_bound(ev.bound)
                logger.info(
                    "node=%d depth=%d bound=%.12g incumbent=%.12g open=%d",
                    node.node_id, node.depth, ev.bound, f_star, open_count(),
                )
                if eff_bound >= f_star - fathom_eps():
                    leaf_bounds.append(eff_bound)
                    continue
                try:
                    choice = select_branching(ev.sol, ev.lifted, config)
                except NoBranchError:
                    # integral point but a bound gap remains: split on the
                    # coordinate with the largest slack-matrix diagonal
                    M = cutgen.slack_matrix(ev.sol.X, ev.sol.x)
                    diag = np.diag(M)
                    i = int(np.argmax(diag))
                    if diag[i] <= 1e-7:
                        # numerically rank-one: the bound is the node value
                        leaf_bounds.append(lift_bound(ev.bound))
                        continue
                    c = np.zeros(problem.n, dtype=np.int64)
                    c[i] = 1
                    choice = BranchChoice(c, int(round(ev.sol.x[i])), None)
                child_cuts = tuple(c for c in ev.cuts if c != choice.removed_cut)
                row_low, row_high = _branch_rows(choice.c, choice.d, branch_seq)
                branch_seq += 1
                for row in (row_low, row_high):
                    push(
                        BncNode(
                            next_id,
                            node.depth + 1,
                            child_cuts,
                            node.branch_rows + (row,),
                            ev.bound,
                        )
                    )
                    next_id += 1
    finally:
        if executor is not None:
            executor.shutdown(wait=False)

    open_bounds = [lift_bound(n.parent_bound) for _, _, n in heap] + [
        lift_bound(n.parent_bound) for n in stack
    ]
    glb_candidates = leaf_bounds + open_bounds
    global_lb = min(glb_candidates) if glb_candidates else math.inf

    if open_count() == 0:
        status = "OPTIMAL" if incumbent_x is not None else "INFEASIBLE"
    else:
        status = "NODE_LIMIT"
    if incumbent_x is None:
        f_star = math.inf
    if status == "OPTIMAL":
        global_lb = min(global_lb, f_star)
    return BncResult(
        status=status,
        x_star=incumbent_x,
        f_star=f_star,
        nodes_explored=nodes_explored,
        global_lower_bound=global_lb,
    )
