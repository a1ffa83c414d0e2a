"""Command-line front end.

Subcommands: ``gen`` (random instances), ``bound`` (iterative SDP tightening
with a rounding upper bound, CSV output), ``solve`` (global branch-and-cut),
``oracle`` (brute force).  Problem inputs are either the JSON problem schema
or a graph file (detected by the first non-space character); graphs are
converted to the 0-1 max-cut minimization form on load.

Exit codes: 0 success, 1 IO/format failure, 2 bad flags, 3 solver failure in
``bound``, 4 node limit reached in ``solve``, 5 oracle box too large.
Results with a fixed seed are byte-identical across runs except for the
wall-clock columns; ``MIQCQP_SEED`` provides the seed when ``--seed`` is
absent.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Optional

import numpy as np

from . import instances, oracle, rounding
from .bnc import BncConfig, BranchRule, branch_and_cut
from .cutloop import CutLoopConfig, Strategy, tighten
from .model import QcqpProblem, normalize_equalities
from .solver import SolveStatus


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("MIQCQP_SEED")
    return int(env) if env else 0


def _load_problem(path: str) -> QcqpProblem:
    with open(path, "r") as fh:
        head = fh.read(64).lstrip()
    if head.startswith("{"):
        return instances.read_problem(path)
    return instances.maxcut_to_qcqp(instances.read_graph(path))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def _cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.kind == "ils":
        problem = instances.gen_ils(args.n, seed)
        instances.write_problem(args.out, problem)
    else:
        W = instances.gen_random_graph(args.n, args.density, seed)
        instances.write_graph(args.out, W)
    return 0


def _upper_bound(problem: QcqpProblem, report, samples: int, seed: int):
    """Feasible-point upper bound matched to the problem shape.

    Returns (value in minimization convention, point or None).
    """
    kind = instances.classify_problem(problem)
    sol = report.solution
    if sol.status is not SolveStatus.OPTIMAL:
        return None, None
    if kind == "ils":
        x_int, f_hat = rounding.ils_round(sol, problem, samples, seed)
        return f_hat, x_int
    if kind == "maxcut":
        W = instances.maxcut_weights(problem)
        z, value = rounding.maxcut_round(sol, W, samples, seed)
        return -value, z
    x_int = np.round(sol.x)
    if problem.feasible(x_int, 1e-6):
        return float(problem.objective.evaluate(x_int)), x_int.astype(np.int64)
    return None, None


def _cmd_bound(args) -> int:
    problem = normalize_equalities(_load_problem(args.infile))
    seed = _resolve_seed(args.seed)
    config = CutLoopConfig(
        strategy=Strategy[args.strategy],
        max_rounds=args.max_rounds,
        eps_viol=args.eps_viol,
        seed=seed,
        baseline_k1_fixed=args.baseline_k1_fixed,
        random_count=args.random_count,
        add_sphere_cut=args.sphere_cut,
    )
    report = tighten(problem, config)
    f_hat, _ = _upper_bound(problem, report, args.samples, seed)

    instance_name = os.path.basename(args.infile)
    base_f = report.rounds[0].f_sdp
    rows = []
    for rec in report.rounds:
        alpha = None
        if (
            f_hat is not None
            and math.isfinite(base_f)
            and abs(f_hat - base_f) > 1e-12 * (1.0 + abs(f_hat))
        ):
            alpha = (f_hat - rec.f_sdp) / (f_hat - base_f)
        rows.append(
            {
                "instance": instance_name,
                "n": problem.n,
                "strategy": args.strategy,
                "round": rec.round,
                "f_sdp": _fmt(rec.f_sdp),
                "certified_bound": _fmt(rec.certified_bound),
                "cuts_total": rec.cuts_total,
                "upper_bound": _fmt(f_hat),
                "gap_ratio_alpha": _fmt(alpha),
                "status": rec.status,
                "wall_ms": _fmt(rec.wall_ms),
            }
        )

    fieldnames = [
        "instance", "n", "strategy", "round", "f_sdp", "certified_bound",
        "cuts_total", "upper_bound", "gap_ratio_alpha", "status", "wall_ms",
    ]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.pretty:
        widths = {k: max(len(k), *(len(str(r[k])) for r in rows)) for k in fieldnames}
        line = "  ".join(k.ljust(widths[k]) for k in fieldnames)
        sys.stdout.write(line + "\n")
        for r in rows:
            sys.stdout.write("  ".join(str(r[k]).ljust(widths[k]) for k in fieldnames) + "\n")
    return 0 if report.status is SolveStatus.OPTIMAL else 3


def _cmd_solve(args) -> int:
    problem = _load_problem(args.infile)
    seed = _resolve_seed(args.seed)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    config = BncConfig(
        max_nodes=args.max_nodes,
        branching=BranchRule.DUAL_CUT if args.branching == "dual" else BranchRule.MOST_FRACTIONAL,
        seed=seed,
        threads=args.threads,
    )
    box = None
    if args.box is not None:
        box = (np.full(problem.n, -args.box, dtype=np.int64), np.full(problem.n, args.box, dtype=np.int64))
    elif instances.classify_problem(normalize_equalities(problem)) == "ils":
        box = oracle.ils_box_for_problem(problem)
    result = branch_and_cut(problem, config, box=box)
    doc = {
        "status": result.status,
        "f_star": None if not math.isfinite(result.f_star) else result.f_star,
        "x_star": None if result.x_star is None else [int(v) for v in result.x_star],
        "nodes_explored": result.nodes_explored,
        "global_lower_bound": (
            None if not math.isfinite(result.global_lower_bound) else result.global_lower_bound
        ),
    }
    json.dump(doc, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 4 if result.status == "NODE_LIMIT" else 0


def _cmd_oracle(args) -> int:
    problem = _load_problem(args.infile)
    if args.box is not None:
        box = (
            np.full(problem.n, -args.box, dtype=np.int64),
            np.full(problem.n, args.box, dtype=np.int64),
        )
    else:
        kind = instances.classify_problem(normalize_equalities(problem))
        if kind == "ils":
            box = oracle.ils_box_for_problem(problem)
        elif kind == "maxcut":
            box = (np.zeros(problem.n, dtype=np.int64), np.ones(problem.n, dtype=np.int64))
        else:
            sys.stderr.write("error: --box is required for generic problems\n")
            return 2
    try:
        f_star, argmins = oracle.brute_force(problem, box)
    except oracle.BoxTooLargeError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 5
    doc = {
        "f_star": None if not math.isfinite(f_star) else f_star,
        "argmin_count": len(argmins),
        "argmins": [[int(v) for v in x] for x in argmins[:10]],
    }
    json.dump(doc, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miqcqp",
        description="SDP bounds and global solves for mixed-integer nonconvex QCQPs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance")
    gen.add_argument("kind", choices=["ils", "maxcut"])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--density", type=float, default=0.5, help="edge probability (maxcut)")
    gen.add_argument("--out", required=True)

    bound = sub.add_parser("bound", help="iterative SDP tightening with certified bounds")
    bound.add_argument("--in", dest="infile", required=True)
    bound.add_argument("--strategy", default="COMBINED", choices=[s.name for s in Strategy])
    bound.add_argument("--max-rounds", type=int, default=10)
    bound.add_argument("--baseline-k1-fixed", action="store_true",
                       help="seed the pool with the fixed cuts x_i(x_i-1) >= 0")
    bound.add_argument("--sphere-cut", action="store_true",
                       help="add the lattice sphere inequality (pure integer only)")
    bound.add_argument("--eps-viol", type=float, default=1e-6)
    bound.add_argument("--random-count", type=int, default=2000)
    bound.add_argument("--samples", type=int, default=1000, help="rounding samples")
    bound.add_argument("--seed", type=int, default=None)
    bound.add_argument("--out", default=None, help="CSV path (default: stdout)")
    bound.add_argument("--pretty", action="store_true")

    solve_p = sub.add_parser("solve", help="global solve by branch-and-cut")
    solve_p.add_argument("--in", dest="infile", required=True)
    solve_p.add_argument("--max-nodes", type=int, default=100000)
    solve_p.add_argument("--branching", choices=["dual", "frac"], default="dual")
    solve_p.add_argument("--box", type=int, default=None,
                         help="symmetric box bound [-R, R]^n (auto for ILS)")
    solve_p.add_argument("--threads", type=int, default=1)
    solve_p.add_argument("--seed", type=int, default=None)

    orc = sub.add_parser("oracle", help="brute-force ground truth")
    orc.add_argument("--in", dest="infile", required=True)
    orc.add_argument("--box", type=int, default=None,
                     help="symmetric box bound [-R, R]^n (auto for ILS)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
    except (OSError, instances.FormatError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    parser.error("unknown command")  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
