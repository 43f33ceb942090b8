#!/usr/bin/env python3
"""External-solver adapter for serialized conic programs.

Reads a conic-program JSON document (see schemas/conic_program.schema.json)
on stdin, solves it with an off-the-shelf solver through CVXPY, and writes a
solution JSON document (schemas/conic_solution.schema.json) on stdout.

Blocks become Hermitian matrix variables; "scale" cone terms are alpha*X and
"partial_transpose" terms transpose the listed qubit factors (index 0 = most
significant / leftmost Kronecker factor, matching the producer's layout).

Exit codes: 0 when a solution document was written (its "status" field
carries the solver verdict), 2 on malformed input.
"""

import argparse
import json
import math
import sys

import cvxpy as cp
import numpy as np


def parse_matrix(term):
    return np.array(term["re"], dtype=float) + 1j * np.array(term["im"], dtype=float)


def qubit_dims(d):
    n = int(round(math.log2(d)))
    if 2**n != d:
        raise ValueError(f"block dimension {d} is not a power of two")
    return [2] * n


def partial_transpose_sources(dims, subset):
    """Flat C-order source index for each entry of the partial transpose.

    out[r, c] = x.flat[src[r, c]]. Built by viewing the d*d flat indices as a
    rank-2n tensor (row digits then column digits, factor 0 first) and swapping
    the row/column axes of the transposed factors. Entry-permutation form so
    downstream canonicalization stays sparse; cp.partial_transpose materializes
    dense operators that exhaust memory at 64x64.
    """
    d = int(np.prod(dims))
    idx = np.arange(d * d).reshape(tuple(dims) * 2)
    axes = list(range(2 * len(dims)))
    for t in subset:
        axes[t], axes[len(dims) + t] = axes[len(dims) + t], axes[t]
    return idx.transpose(axes).reshape(d * d)


def apply_op(x, op):
    kind = op["kind"]
    alpha = op["alpha"]
    if kind == "scale":
        return alpha * x
    if kind == "partial_transpose":
        d = x.shape[0]
        src = partial_transpose_sources(qubit_dims(d), op.get("subset") or [])
        flat = cp.vec(x, order="C")
        return alpha * cp.reshape(flat[src], (d, d), order="C")
    raise ValueError(f"unknown cone op kind {kind!r}")


def trace_product(coeff, x):
    # tr(C @ X) as an entrywise sum so the coefficient enters sparsely
    return cp.real(cp.sum(cp.multiply(coeff.T, x)))


def build_problem(prog):
    x = {b["name"]: cp.Variable((b["dim"], b["dim"]), hermitian=True) for b in prog["blocks"]}
    objective = 0
    for term in prog["objective"]:
        objective += trace_product(parse_matrix(term), x[term["block"]])
    constraints = []
    for eq in prog["equalities"]:
        expr = 0
        for term in eq["terms"]:
            expr += trace_product(parse_matrix(term), x[term["block"]])
        constraints.append(expr == eq["rhs"])
    for cone in prog["cones"]:
        expr = 0
        for term in cone["terms"]:
            expr += apply_op(x[term["block"]], term["op"])
        constraints.append(expr >> 0)
    return cp.Problem(cp.Minimize(objective), constraints), x


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--solver", default="SCS", help="CVXPY solver name (default SCS)")
    ap.add_argument("--eps", type=float, default=1e-8, help="solver accuracy target")
    args = ap.parse_args()

    try:
        prog = json.load(sys.stdin)
        problem, x = build_problem(prog)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"malformed program: {exc}", file=sys.stderr)
        return 2

    kwargs = {"eps": args.eps} if args.solver.upper() == "SCS" else {}
    try:
        problem.solve(solver=args.solver.upper(), verbose=False, **kwargs)
    except cp.error.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        json.dump({"status": "failed", "objective": 0.0, "blocks": {}}, sys.stdout)
        return 0

    status = {
        "optimal": "optimal",
        "optimal_inaccurate": "optimal",
        "infeasible": "infeasible",
        "infeasible_inaccurate": "infeasible",
    }.get(problem.status, "failed")

    out = {
        "status": status,
        "objective": float(problem.value) if status == "optimal" else 0.0,
        "blocks": {},
    }
    if status == "optimal":
        for block in prog["blocks"]:
            value = x[block["name"]].value
            out["blocks"][block["name"]] = {
                "dims": qubit_dims(block["dim"]),
                "re": np.real(value).tolist(),
                "im": np.imag(value).tolist(),
            }
    json.dump(out, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
