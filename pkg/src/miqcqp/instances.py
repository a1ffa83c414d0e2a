"""Instance generation, max-cut conversion, and file formats.

Two file formats are supported:

* Graphs: first line ``n m``, then ``m`` lines ``i j w`` with 1-based
  endpoints and integer weights (rudy-style).  No self-loops, no duplicate
  edges.
* Problems: a JSON object ``{"n", "p", "objective": {"P", "q", "r"},
  "constraints": [{"P", "q", "r", "sense"}]}`` where each ``P`` is the
  row-major flattening of an n-by-n matrix and ``sense`` is ``"LEQ"`` or
  ``"EQ"``.

Random instances draw from the portable generator in `rng` so that a given
seed reproduces bit-identical data everywhere.  Draw order for integer least
squares: the 2n-by-n matrix A row-major (normals), then the continuous
target (uniforms).  For random graphs: for each pair i<j in lexicographic
order, one uniform for edge presence, then (if present) one uniform for the
sign of the weight.
"""

from __future__ import annotations

import json
from typing import List, Tuple

import numpy as np

from .model import QcqpProblem, QuadraticForm, Sense
from .rng import PortableRng


class FormatError(ValueError):
    """Malformed instance file."""


def gen_ils_data(n: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """The raw integer least squares data: A (2n x n, standard normal
    entries) and the continuous target drawn uniformly from [0, 1)^n."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = PortableRng(seed)
    A = rng.normal(2 * n * n).reshape(2 * n, n)
    x_cts = rng.uniform(n)
    return A, x_cts


def ils_problem(A: np.ndarray, x_cts: np.ndarray) -> QcqpProblem:
    """||A(x - x_cts)||^2 expanded to (P, q, r) = (A'A, -2A'Ax_cts,
    x_cts'A'Ax_cts), an unconstrained pure-integer minimization."""
    A = np.asarray(A, dtype=float)
    x_cts = np.asarray(x_cts, dtype=float)
    n = x_cts.size
    P = A.T @ A
    q = -2.0 * (P @ x_cts)
    r = float(x_cts @ P @ x_cts)
    return QcqpProblem(n, n, QuadraticForm(P, q, r), ())


def gen_ils(n: int, seed: int) -> QcqpProblem:
    """Random integer least squares instance; deterministic per seed."""
    A, x_cts = gen_ils_data(n, seed)
    return ils_problem(A, x_cts)


def _check_weight_matrix(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("weight matrix must be square")
    if not np.allclose(W, W.T, atol=1e-12):
        raise ValueError("weight matrix must be symmetric")
    if np.any(np.diag(W) != 0.0):
        raise ValueError("weight matrix must have a zero diagonal")
    return W


def maxcut_to_qcqp(W) -> QcqpProblem:
    """Max-cut in 0-1 variables as a minimization QCQP.

    maximize (W1)'z - z'Wz s.t. z_i(z_i - 1) = 0 becomes
    minimize z'Wz - (W1)'z with n quadratic equality constraints; negate the
    reported optimum to recover the cut value.
    """
    W = _check_weight_matrix(W)
    n = W.shape[0]
    objective = QuadraticForm(W, -(W @ np.ones(n)), 0.0)
    constraints = []
    for i in range(n):
        P = np.zeros((n, n))
        P[i, i] = 1.0
        q = np.zeros(n)
        q[i] = -1.0
        constraints.append((QuadraticForm(P, q, 0.0), Sense.EQ))
    return QcqpProblem(n, n, objective, tuple(constraints))


def cut_value(W, z01) -> float:
    """Cut value of a 0-1 assignment: (W1)'z - z'Wz."""
    W = np.asarray(W, dtype=float)
    z = np.asarray(z01, dtype=float)
    return float((W @ np.ones(W.shape[0])) @ z - z @ W @ z)


def cut_value_identity_check(W, x) -> float:
    """Evaluate the cut value of a +/-1 assignment both as
    (1/2) sum_{i<j} W_ij (1 - x_i x_j) and via the 0-1 form at z=(x+1)/2;
    the two must agree (self-test) and the common value is returned."""
    W = _check_weight_matrix(W)
    x = np.asarray(x, dtype=float)
    if not np.all(np.abs(x) == 1.0):
        raise ValueError("assignment entries must be +1 or -1")
    n = W.shape[0]
    pm_form = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            pm_form += 0.5 * W[i, j] * (1.0 - x[i] * x[j])
    z_form = cut_value(W, 0.5 * (x + 1.0))
    if abs(pm_form - z_form) > 1e-9 * (1.0 + abs(pm_form)):
        raise AssertionError(
            f"cut value identity failed: {pm_form!r} vs {z_form!r}"
        )
    return float(pm_form)


def gen_random_graph(n: int, density: float, seed: int) -> np.ndarray:
    """Random graph with +/-1 edge weights: each pair is an edge with the
    given probability, sign equiprobable."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = PortableRng(seed)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform(1)[0] < density:
                w = 1.0 if rng.uniform(1)[0] < 0.5 else -1.0
                W[i, j] = W[j, i] = w
    return W


def read_graph(path) -> np.ndarray:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    content = [(no + 1, ln) for no, ln in enumerate(lines) if ln.strip()]
    if not content:
        raise FormatError("empty graph file")
    no, header = content[0]
    parts = header.split()
    if len(parts) != 2:
        raise FormatError(f"line {no}: header must be 'n m'")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise FormatError(f"line {no}: header must be two integers") from exc
    if n < 1 or m < 0:
        raise FormatError(f"line {no}: invalid sizes n={n}, m={m}")
    if len(content) - 1 != m:
        raise FormatError(f"expected {m} edge lines, found {len(content) - 1}")
    W = np.zeros((n, n))
    seen = set()
    for no, line in content[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"line {no}: edge lines must be 'i j w'")
        try:
            i, j, w = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"line {no}: edge fields must be integers") from exc
        if not (1 <= i <= n and 1 <= j <= n):
            raise FormatError(f"line {no}: endpoint out of range 1..{n}")
        if i == j:
            raise FormatError(f"line {no}: self-loop on node {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise FormatError(f"line {no}: duplicate edge {i} {j}")
        seen.add(key)
        W[i - 1, j - 1] = W[j - 1, i - 1] = float(w)
    return W


def write_graph(path, W) -> None:
    W = _check_weight_matrix(W)
    n = W.shape[0]
    edges = [
        (i + 1, j + 1, int(W[i, j]))
        for i in range(n)
        for j in range(i + 1, n)
        if W[i, j] != 0.0
    ]
    with open(path, "w") as fh:
        fh.write(f"{n} {len(edges)}\n")
        for i, j, w in edges:
            fh.write(f"{i} {j} {w}\n")


def _form_to_dict(form: QuadraticForm) -> dict:
    return {
        "P": [float(v) for v in form.P.reshape(-1)],
        "q": [float(v) for v in form.q],
        "r": float(form.r),
    }


def _form_from_dict(obj, n: int, where: str) -> QuadraticForm:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object with P, q, r")
    for key in ("P", "q", "r"):
        if key not in obj:
            raise FormatError(f"{where}: missing field '{key}'")
    P = np.asarray(obj["P"], dtype=float)
    if P.size != n * n:
        raise FormatError(f"{where}.P: expected {n * n} row-major entries, got {P.size}")
    q = np.asarray(obj["q"], dtype=float)
    if q.size != n:
        raise FormatError(f"{where}.q: expected {n} entries, got {q.size}")
    return QuadraticForm(P.reshape(n, n), q, float(obj["r"]))


def write_problem(path, problem: QcqpProblem) -> None:
    doc = {
        "n": problem.n,
        "p": problem.p,
        "objective": _form_to_dict(problem.objective),
        "constraints": [
            {**_form_to_dict(form), "sense": sense.value}
            for form, sense in problem.constraints
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_problem(path) -> QcqpProblem:
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    for key in ("n", "p", "objective", "constraints"):
        if key not in doc:
            raise FormatError(f"missing field '{key}'")
    n = int(doc["n"])
    p = int(doc["p"])
    objective = _form_from_dict(doc["objective"], n, "objective")
    constraints: List[Tuple[QuadraticForm, Sense]] = []
    if not isinstance(doc["constraints"], list):
        raise FormatError("constraints: expected a list")
    for idx, item in enumerate(doc["constraints"]):
        where = f"constraints[{idx}]"
        form = _form_from_dict(item, n, where)
        sense = item.get("sense")
        if sense not in ("LEQ", "EQ"):
            raise FormatError(f"{where}.sense: expected 'LEQ' or 'EQ', got {sense!r}")
        constraints.append((form, Sense(sense)))
    try:
        return QcqpProblem(n, p, objective, tuple(constraints))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def classify_problem(problem: QcqpProblem) -> str:
    """'ils' (unconstrained pure-integer), 'maxcut' (0-1 equality lift of a
    weight matrix), or 'generic'.  Drives the choice of rounding scheme."""
    if problem.p == problem.n and not problem.constraints:
        return "ils"
    if problem.p == problem.n and _maxcut_weights(problem) is not None:
        return "maxcut"
    return "generic"


def _maxcut_weights(problem: QcqpProblem):
    """Recover W when the problem matches the max-cut minimization shape."""
    n = problem.n
    cons = problem.constraints
    W = problem.objective.P
    if np.any(np.abs(np.diag(W)) > 1e-12):
        return None
    if np.abs(problem.objective.q + W @ np.ones(n)).max() > 1e-9:
        return None
    if abs(problem.objective.r) > 1e-12:
        return None
    forms = []
    if len(cons) == n and all(s is Sense.EQ for _, s in cons):
        forms = [form for form, _ in cons]
    elif len(cons) == 2 * n and all(s is Sense.LEQ for _, s in cons):
        # normalized equalities come in (f, -f) pairs
        for i in range(n):
            f, g = cons[2 * i][0], cons[2 * i + 1][0]
            if (
                np.abs(f.P + g.P).max() > 1e-12
                or np.abs(f.q + g.q).max() > 1e-12
                or abs(f.r + g.r) > 1e-12
            ):
                return None
            forms.append(f)
    else:
        return None
    for i, form in enumerate(forms):
        expect_P = np.zeros((n, n))
        expect_P[i, i] = 1.0
        expect_q = np.zeros(n)
        expect_q[i] = -1.0
        sgn = 1.0 if form.P[i, i] >= 0 else -1.0
        if (
            np.abs(sgn * form.P - expect_P).max() > 1e-12
            or np.abs(sgn * form.q - expect_q).max() > 1e-12
            or abs(form.r) > 1e-12
        ):
            return None
    return W.copy()


def maxcut_weights(problem: QcqpProblem) -> np.ndarray:
    W = _maxcut_weights(problem)
    if W is None:
        raise ValueError("problem does not have the max-cut shape")
    return W
