"""Certified lower bounds and global solutions for mixed-integer nonconvex
QCQPs: SDP relaxation, integer-lattice concave quadratic cuts, iterative
tightening, and branch-and-cut."""

from .model import (
    LiftedRow,
    LiftedSdp,
    QcqpProblem,
    QuadraticForm,
    Sense,
    Tag,
    add_box,
    lift,
    normalize_equalities,
)
from .cuts import (
    NO_CUT_CERTIFIED,
    Cut,
    best_b,
    enumerate_cuts,
    eig_cut,
    random_cuts,
    slack_matrix,
    sphere_cut_lifted,
    violation,
)
from .certificate import (
    CannotCertifyError,
    DualCertificate,
    certify_multipliers,
    dual_objective,
    extract_certificate,
    verify,
)
from .solver import SdpSolution, SolveStatus, SolverSettings, resolve_perturbed, solve
from .cutloop import CutLoopConfig, Strategy, TightenReport, baseline_k1_cuts, tighten
from .bnc import (
    BncConfig,
    BncResult,
    BranchRule,
    NodeSelection,
    branch_and_cut,
    select_branching,
    try_incumbent,
)
from .rounding import ils_round, maxcut_round
from .rng import PortableRng

__all__ = [
    "CutLoopConfig",
    "Strategy",
    "TightenReport",
    "baseline_k1_cuts",
    "tighten",
    "BncConfig",
    "BncResult",
    "BranchRule",
    "NodeSelection",
    "branch_and_cut",
    "select_branching",
    "try_incumbent",
    "ils_round",
    "maxcut_round",
    "PortableRng",
    "LiftedRow",
    "LiftedSdp",
    "QcqpProblem",
    "QuadraticForm",
    "Sense",
    "Tag",
    "add_box",
    "lift",
    "normalize_equalities",
    "NO_CUT_CERTIFIED",
    "Cut",
    "best_b",
    "enumerate_cuts",
    "eig_cut",
    "random_cuts",
    "slack_matrix",
    "sphere_cut_lifted",
    "violation",
    "CannotCertifyError",
    "DualCertificate",
    "certify_multipliers",
    "dual_objective",
    "extract_certificate",
    "verify",
    "SdpSolution",
    "SolveStatus",
    "SolverSettings",
    "resolve_perturbed",
    "solve",
]
