"""Problem model: quadratic forms, mixed-integer QCQPs, and their SDP lifting.

A problem is ``minimize x'P0x + q0'x + r0`` subject to quadratic inequality /
equality constraints, with the first ``p`` coordinates of ``x`` restricted to
the integers.  Lifting replaces ``x`` with the pair ``(X, x)`` and relaxes
``X = xx'`` to positive semidefiniteness of the bordered matrix
``[[X, x], [x', 1]]``; every quadratic constraint becomes affine in ``(X, x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .cuts import Cut


class Sense(Enum):
    LEQ = "LEQ"
    EQ = "EQ"


def _frozen_array(a, shape, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuadraticForm:
    """x'Px + q'x + r with P stored symmetrized."""

    P: np.ndarray
    q: np.ndarray
    r: float

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"P must be square, got shape {P.shape}")
        P = 0.5 * (P + P.T)
        if not np.all(np.isfinite(P)):
            raise ValueError("P has non-finite entries")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", _frozen_array(self.q, (P.shape[0],), "q"))
        object.__setattr__(self, "r", float(self.r))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def evaluate(self, x) -> float:
        """Value x'Px + q'x + r."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"x must have shape ({self.n},), got {x.shape}")
        return float(x @ self.P @ x + self.q @ x + self.r)

    def lifted_value(self, X, x) -> float:
        """Value of the lifted functional Tr(PX) + q'x + r."""
        X = np.asarray(X, dtype=float)
        x = np.asarray(x, dtype=float)
        return float(np.sum(self.P * X) + self.q @ x + self.r)

    def negated(self) -> "QuadraticForm":
        return QuadraticForm(-self.P, -self.q, -self.r)

    @staticmethod
    def linear(q, r: float) -> "QuadraticForm":
        q = np.asarray(q, dtype=float)
        return QuadraticForm(np.zeros((q.size, q.size)), q, r)

    @staticmethod
    def constant(n: int, r: float) -> "QuadraticForm":
        return QuadraticForm(np.zeros((n, n)), np.zeros(n), r)


@dataclass(frozen=True)
class QcqpProblem:
    """Mixed-integer QCQP: the first ``p`` of ``n`` variables are integer."""

    n: int
    p: int
    objective: QuadraticForm
    constraints: Tuple[Tuple[QuadraticForm, Sense], ...] = ()

    def __post_init__(self):
        if not 0 <= self.p <= self.n:
            raise ValueError(f"need 0 <= p <= n, got p={self.p}, n={self.n}")
        if self.objective.n != self.n:
            raise ValueError("objective dimension does not match n")
        constraints = tuple((form, Sense(sense)) for form, sense in self.constraints)
        for form, _ in constraints:
            if form.n != self.n:
                raise ValueError("constraint dimension does not match n")
        object.__setattr__(self, "constraints", constraints)

    @property
    def is_normalized(self) -> bool:
        return all(sense is Sense.LEQ for _, sense in self.constraints)

    def feasible(self, x, tol: float = 1e-8) -> bool:
        """Constraint satisfaction at x (LEQ within tol, EQ within +/-tol)."""
        for form, sense in self.constraints:
            v = form.evaluate(x)
            if sense is Sense.LEQ and v > tol:
                return False
            if sense is Sense.EQ and abs(v) > tol:
                return False
        return True


def normalize_equalities(problem: QcqpProblem) -> QcqpProblem:
    """Replace each equality f(x) = 0 by the pair f(x) <= 0, -f(x) <= 0.

    Inequalities pass through unchanged and in order; idempotent.
    """
    rows = []
    for form, sense in problem.constraints:
        if sense is Sense.EQ:
            rows.append((form, Sense.LEQ))
            rows.append((form.negated(), Sense.LEQ))
        else:
            rows.append((form, sense))
    return QcqpProblem(problem.n, problem.p, problem.objective, tuple(rows))


def add_box(problem: QcqpProblem, lo, hi) -> QcqpProblem:
    """Append box constraints lo_i <= x_i <= hi_i as 2n linear inequalities."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (problem.n,) or hi.shape != (problem.n,):
        raise ValueError("box bounds must have length n")
    if np.any(lo > hi):
        raise ValueError("box has lo > hi")
    rows = list(problem.constraints)
    eye = np.eye(problem.n)
    for i in range(problem.n):
        rows.append((QuadraticForm.linear(eye[i], -hi[i]), Sense.LEQ))
        rows.append((QuadraticForm.linear(-eye[i], lo[i]), Sense.LEQ))
    return QcqpProblem(problem.n, problem.p, problem.objective, tuple(rows))


@dataclass(frozen=True)
class Tag:
    """Provenance of a lifted constraint row.

    Branching needs to locate the cut row with the largest dual variable, so
    every row carries where it came from: an original constraint index, a
    cut, a branching inequality, or the lattice sphere inequality.
    """

    kind: str
    key: tuple = ()

    ORIGINAL = "original"
    CUT = "cut"
    BRANCH = "branch"
    SPHERE = "sphere"

    @staticmethod
    def original(index: int) -> "Tag":
        return Tag(Tag.ORIGINAL, (index,))

    @staticmethod
    def cut(a: Tuple[int, ...], b: int) -> "Tag":
        return Tag(Tag.CUT, (tuple(int(v) for v in a), int(b)))

    @staticmethod
    def branch(node_id: int, side: int) -> "Tag":
        return Tag(Tag.BRANCH, (int(node_id), int(side)))

    @staticmethod
    def sphere() -> "Tag":
        return Tag(Tag.SPHERE)


@dataclass(frozen=True)
class LiftedRow:
    """Affine inequality Tr(PX) + q'x + r <= 0 in the lifted space."""

    tag: Tag
    form: QuadraticForm

    def value(self, X, x) -> float:
        return self.form.lifted_value(X, x)


@dataclass(frozen=True)
class LiftedSdp:
    """SDP relaxation data: affine objective and rows over (X, x), with the
    implicit constraint [[X, x], [x', 1]] >= 0."""

    n: int
    objective: QuadraticForm
    rows: Tuple[LiftedRow, ...]

    def __post_init__(self):
        tags = [row.tag for row in self.rows]
        if len(set(tags)) != len(tags):
            raise ValueError("duplicate provenance tags in lifted rows")
        for row in self.rows:
            if row.form.n != self.n:
                raise ValueError("lifted row dimension mismatch")

    @property
    def m(self) -> int:
        return len(self.rows)

    def objective_value(self, X, x) -> float:
        return self.objective.lifted_value(X, x)

    def row_values(self, X, x) -> np.ndarray:
        return np.array([row.value(X, x) for row in self.rows])

    def bordered(self, X, x) -> np.ndarray:
        """The (n+1)x(n+1) matrix [[X, x], [x', 1]]."""
        X = np.asarray(X, dtype=float)
        x = np.asarray(x, dtype=float)
        Z = np.empty((self.n + 1, self.n + 1))
        Z[: self.n, : self.n] = X
        Z[: self.n, self.n] = x
        Z[self.n, : self.n] = x
        Z[self.n, self.n] = 1.0
        return Z

    def tag_index(self, tag: Tag) -> int:
        for i, row in enumerate(self.rows):
            if row.tag == tag:
                return i
        raise KeyError(f"unknown constraint tag {tag!r}")


def cut_row(cut: "Cut", n: int) -> QuadraticForm:
    """Lifted form of the lattice cut (a'x - b)(a'x - (b+1)) >= 0:
    -Tr(aa'X) + (2b+1)a'x - b(b+1) <= 0."""
    a = np.zeros(n)
    a[: len(cut.a)] = cut.a
    b = float(cut.b)
    return QuadraticForm(-np.outer(a, a), (2.0 * b + 1.0) * a, -b * (b + 1.0))


def lift(
    problem: QcqpProblem,
    cuts: Sequence["Cut"] = (),
    extra_rows: Iterable[Tuple[Tag, QuadraticForm]] = (),
) -> LiftedSdp:
    """Lift a normalized problem plus lattice cuts into the SDP space.

    Original constraints keep their index as provenance; each cut (a, b)
    contributes the row with matrix -aa', linear part (2b+1)a and constant
    -b(b+1).  Integrality is dropped.  Cuts supported on continuous
    coordinates (a_j != 0 for j > p) are rejected.
    """
    if not problem.is_normalized:
        raise ValueError("problem has equality constraints; normalize first")
    rows = [
        LiftedRow(Tag.original(i), form)
        for i, (form, _) in enumerate(problem.constraints)
    ]
    for cut in cuts:
        a = np.asarray(cut.a, dtype=np.int64)
        if a.size > problem.n:
            raise ValueError("cut dimension exceeds problem dimension")
        if np.any(a[problem.p :] != 0):
            raise ValueError(
                f"cut {cut} has nonzero coefficient on a continuous coordinate"
            )
        rows.append(LiftedRow(Tag.cut(cut.a, cut.b), cut_row(cut, problem.n)))
    for tag, form in extra_rows:
        rows.append(LiftedRow(tag, form))
    return LiftedSdp(problem.n, problem.objective, tuple(rows))
