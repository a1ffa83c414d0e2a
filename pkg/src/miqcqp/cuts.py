"""Concave quadratic cuts valid on the integer lattice.

A cut is a pair (a, b) of an integer vector and an integer encoding the
inequality (a'x - b)(a'x - (b+1)) >= 0, which holds for every x whose
integer coordinates carry all of a's support, because a'x is then itself an
integer.  In the lifted space the cut reads

    -Tr(aa' X) + (2b+1) a'x - b(b+1) <= 0

and a positive value of the left side at a candidate (X, x) ("violation")
marks a cut that can tighten the relaxation.

Generators: exhaustive enumeration over small +/-1 supports, a heuristic
driven by the smallest eigenvector of the slack matrix M = X - xx', and
seeded random sampling of fixed-support-size vectors.  When the smallest
eigenvalue of M (restricted to the integer block) reaches 1/4, no cut of
this family is violated: a'Ma >= |a|^2 lambda_min >= 1/4 bounds every
violation at or below zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .linalg import min_eigpair, symmetrize
from .model import QuadraticForm, Tag
from .rng import PortableRng


@dataclass(frozen=True)
class Cut:
    """Lattice cut (a'x - b)(a'x - (b+1)) >= 0 in canonical sign form.

    (a, b) and (-a, -b-1) encode the same inequality; construction flips to
    the representative whose first nonzero entry of a is positive, so cuts
    deduplicate by equality.
    """

    a: Tuple[int, ...]
    b: int

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        b = int(self.b)
        first = next((v for v in a if v != 0), 0)
        if first == 0:
            raise ValueError("cut vector a must be nonzero")
        if first < 0:
            a = tuple(-v for v in a)
            b = -b - 1
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def a_array(self) -> np.ndarray:
        return np.array(self.a, dtype=np.int64)

    def holds_at(self, x) -> bool:
        """Exact lattice check at an integer point."""
        g = int(np.asarray(x, dtype=np.int64) @ self.a_array)
        return (g - self.b) * (g - self.b - 1) >= 0


class _NoCutCertified:
    """Sentinel: no cut of the lattice family is violated at this point."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "NO_CUT_CERTIFIED"


NO_CUT_CERTIFIED = _NoCutCertified()

EigCutResult = Union[List[Cut], _NoCutCertified]


def violation(cut: Cut, X, x) -> float:
    """-a'Xa + (2b+1)a'x - b(b+1); positive means the cut can tighten."""
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if X.shape != (n, n) or len(cut.a) != n:
        raise ValueError("dimension mismatch between cut and point")
    a = cut.a_array.astype(float)
    b = float(cut.b)
    return float(-a @ X @ a + (2.0 * b + 1.0) * (a @ x) - b * (b + 1.0))


def best_b(a, x) -> int:
    """floor(a'x): the integer offset maximizing the violation for fixed a."""
    g = float(np.asarray(a, dtype=float) @ np.asarray(x, dtype=float))
    return int(math.floor(g))


def slack_matrix(X, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return symmetrize(np.asarray(X, dtype=float) - np.outer(x, x))


def _sorted_unique(cands: List[Tuple[float, Cut]], cap: Optional[int]) -> List[Cut]:
    seen = {}
    for viol, cut in cands:
        if cut not in seen or viol > seen[cut]:
            seen[cut] = viol
    ordered = sorted(seen.items(), key=lambda kv: (-kv[1], kv[0].a, kv[0].b))
    cuts = [cut for cut, _ in ordered]
    return cuts if cap is None else cuts[:cap]


def enumerate_cuts(
    X,
    x,
    p: int,
    k: int,
    eps_viol: float = 1e-6,
    cap: Optional[int] = None,
) -> List[Cut]:
    """All violated cuts with at most k nonzero +/-1 entries on the integer
    coordinates, sorted by violation (descending), truncated to ``cap``.

    The first support coordinate carries +1, which enumerates exactly one
    representative per canonical cut.
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 0 <= p <= n:
        raise ValueError("invalid integer block size p")
    if cap is None:
        cap = 4 * n
    if p == 0:
        return []
    Xp = X[:p, :p]
    xp = x[:p]
    diag = np.diag(Xp)

    found: List[Tuple[float, Cut]] = []

    def collect(idx_cols, sign_cols, g, quad):
        b = np.floor(g)
        viol = -quad + (2.0 * b + 1.0) * g - b * (b + 1.0)
        keep = np.nonzero(viol > eps_viol)[0]
        for t in keep:
            a = np.zeros(n, dtype=np.int64)
            for col, sgn in zip(idx_cols, sign_cols):
                a[col[t]] = sgn if np.isscalar(sgn) else sgn[t]
            found.append((float(viol[t]), Cut(tuple(a), int(b[t]))))

    idx1 = np.arange(p)
    collect((idx1,), (1,), xp.copy(), diag.copy())

    if k >= 2 and p >= 2:
        pairs = np.array(list(itertools.combinations(range(p), 2)), dtype=np.int64)
        I, J = pairs[:, 0], pairs[:, 1]
        for s in (1, -1):
            g = xp[I] + s * xp[J]
            quad = diag[I] + diag[J] + 2.0 * s * Xp[I, J]
            collect((I, J), (1, s), g, quad)

    if k >= 3 and p >= 3:
        triples = np.array(list(itertools.combinations(range(p), 3)), dtype=np.int64)
        I, J, L = triples[:, 0], triples[:, 1], triples[:, 2]
        for s2, s3 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            g = xp[I] + s2 * xp[J] + s3 * xp[L]
            quad = (
                diag[I]
                + diag[J]
                + diag[L]
                + 2.0 * s2 * Xp[I, J]
                + 2.0 * s3 * Xp[I, L]
                + 2.0 * s2 * s3 * Xp[J, L]
            )
            collect((I, J, L), (1, s2, s3), g, quad)

    return _sorted_unique(found, cap)


def eig_cut(
    X,
    x,
    p: int,
    scalings: Optional[Sequence[float]] = None,
    k_round: int = 3,
    psd_tol: float = 1e-6,
) -> EigCutResult:
    """Cut candidates aligned with the smallest eigenvector of M = X - xx'.

    Returns NO_CUT_CERTIFIED when the smallest eigenvalue of the integer
    block of M is at least 1/4 (then no cut of the family is violated);
    otherwise rounds scaled copies of the eigenvector and sign patterns of
    its largest entries, keeping candidates with positive violation.
    """
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 1 <= p <= n:
        raise ValueError("invalid integer block size p")
    M = slack_matrix(X, x)
    Mp = M[:p, :p]
    lam_min, v = min_eigpair(Mp)
    scale = max(1.0, float(np.abs(Mp).max()))
    if lam_min < -psd_tol * scale:
        raise ValueError(f"slack matrix not PSD (lambda_min = {lam_min:.3e})")
    if lam_min >= 0.25:
        return NO_CUT_CERTIFIED

    vmax = float(np.abs(v).max())
    if scalings is None:
        scalings = () if vmax == 0.0 else (1.0 / vmax, 2.0 / vmax, 3.0 / vmax)

    cand_vectors = []
    for t in scalings:
        a = np.rint(t * v).astype(np.int64)
        if np.any(a != 0):
            cand_vectors.append(a)
    order = np.argsort(-np.abs(v), kind="stable")
    for kk in range(1, min(k_round, p) + 1):
        a = np.zeros(p, dtype=np.int64)
        idx = order[:kk]
        sgn = np.sign(v[idx])
        a[idx] = np.where(sgn == 0, 1, sgn).astype(np.int64)
        cand_vectors.append(a)

    found: List[Tuple[float, Cut]] = []
    for ap in cand_vectors:
        a = np.zeros(n, dtype=np.int64)
        a[:p] = ap
        cut = Cut(tuple(a), best_b(a, x))
        viol = violation(cut, X, x)
        if viol > 0.0:
            found.append((viol, cut))
    return _sorted_unique(found, None)


def sphere_cut_lifted(n: int, p: int) -> Tuple[Tag, QuadraticForm]:
    """Lifted form of the lattice sphere inequality ||x - (1/2)1||^2 >= n/4,
    which expands to -Tr(X) + 1'x <= 0.  Valid only for pure integer
    problems (p = n); every 0-1 point satisfies it with equality."""
    if p < n:
        raise ValueError("sphere cut requires a pure integer problem (p = n)")
    return Tag.sphere(), QuadraticForm(-np.eye(n), np.ones(n), 0.0)


def random_cuts(
    X,
    x,
    p: int,
    count: int,
    nnz: int = 3,
    eps_viol: float = 1e-6,
    seed: int = 0,
) -> List[Cut]:
    """Seeded sample of `count` vectors with exactly `nnz` nonzero +/-1
    entries on the integer coordinates; returns the deduplicated violated
    cuts sorted by violation."""
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if nnz > p:
        raise ValueError("nnz exceeds the number of integer coordinates")
    if nnz < 1:
        raise ValueError("nnz must be at least 1")
    rng = PortableRng(seed)
    found: List[Tuple[float, Cut]] = []
    for _ in range(count):
        support = rng.choice_without_replacement(p, nnz)
        signs = rng.signs(nnz)
        a = np.zeros(n, dtype=np.int64)
        a[support] = signs
        cut = Cut(tuple(a), best_b(a, x))
        viol = violation(cut, X, x)
        if viol > eps_viol:
            found.append((viol, cut))
    return _sorted_unique(found, None)
