"""Command-line entry point ``hbvm``.

Exit status: 0 on success, 1 on invalid arguments, 2 when a step fails.
Tables go to stdout (or ``--out``) as CSV, or as JSON with ``--json``;
summaries of the drift experiment are printed to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import harness
from .errors import DomainError, StepFailure
from .integrator import integrate, make_solver
from .problems import PROBLEMS, get_problem
from .tableau import build_hbvm

EXIT_OK, EXIT_USAGE, EXIT_STEP_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> List[int]:
    """``"2,4,6"`` or an inclusive range ``"2-10"``."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _method_args(p: argparse.ArgumentParser, solver_default: str = "newton"):
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--family", choices=["gauss", "lobatto"], default="gauss")
    p.add_argument("--solver", choices=["fixed", "newton", "blended"], default=solver_default)
    p.add_argument("--tol", type=float, default=1e-13, help="stage solver tolerance (max-norm)")


def _output_args(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--json", action="store_true", help="emit a JSON document instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hbvm", description="Energy-conserving HBVM integrators and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("integrate", help="integrate a problem and write the trajectory")
    _method_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _output_args(p)

    p = sub.add_parser("drift", help="energy deviation along a trajectory")
    _method_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _output_args(p)

    p = sub.add_parser("convergence", help="final-time errors and observed orders")
    _method_args(p)
    p.add_argument("--h-list", type=_float_list, required=True, help="halving sequence, e.g. 0.32,0.16,0.08")
    p.add_argument("--t-final", type=float, default=None)
    _output_args(p)

    p = sub.add_parser("compare-kl", help="Gauss vs Lobatto HBVM(k, s) trajectories")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--k-list", type=_int_list, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--solver", choices=["fixed", "newton", "blended"], default="newton")
    p.add_argument("--tol", type=float, default=1e-13)
    _output_args(p)

    p = sub.add_parser("gamma-table", help="optimal blending parameter per s")
    p.add_argument("--s-list", type=_int_list, default=list(range(2, 11)))
    _output_args(p)

    p = sub.add_parser("cond-sweep", help="condition number of C(k, s)")
    p.add_argument("--s-list", type=_int_list, default=[2, 3, 4, 5])
    p.add_argument("--k-max", type=int, default=100)
    p.add_argument("--selection", choices=["rule_of_thumb", "first_s"], default="rule_of_thumb")
    _output_args(p)
    return parser


def _method(args) -> harness.MethodSpec:
    return harness.MethodSpec(args.k, args.s, args.family, args.solver, args.tol)


def _integrate_report(args) -> harness.ExperimentReport:
    spec = get_problem(args.problem)
    if args.steps < 0:
        raise ValueError("--steps must be non-negative")
    t = build_hbvm(args.k, args.s, args.family)
    traj = integrate(spec.system, t, make_solver(args.solver, t, tol=args.tol), spec.y0, 0.0, args.h,
                     args.steps, record_invariants=list(spec.system.invariants))
    names = list(traj.invariants)
    cols = ["step", "t"] + [f"y_{i + 1}" for i in range(traj.states.shape[1])] + names
    rows = [
        (j, float(traj.times[j])) + tuple(float(v) for v in traj.states[j])
        + tuple(float(traj.invariants[n][j]) for n in names)
        for j in range(len(traj.times))
    ]
    inputs = {"problem": spec.name, "method": _method(args).as_dict(), "h": args.h, "n_steps": args.steps}
    summary = {"steps_completed": traj.n_steps, "failed": traj.failed, "error": traj.error, "solver_tol": traj.tol}
    return harness.ExperimentReport("integrate", inputs, cols, rows, summary)


def _run(args) -> harness.ExperimentReport:
    cmd = args.command
    if cmd == "integrate":
        return _integrate_report(args)
    if cmd == "drift":
        return harness.drift_experiment(args.problem, _method(args), args.h, args.steps)
    if cmd == "convergence":
        return harness.convergence_table(args.problem, _method(args), args.h_list, args.t_final)
    if cmd == "compare-kl":
        return harness.gauss_lobatto_compare(args.problem, args.s, args.k_list, args.h, args.steps,
                                             args.solver, args.tol)
    if cmd == "gamma-table":
        return harness.gamma_table(args.s_list)
    return harness.condition_sweep(args.s_list, args.k_max, args.selection)


def _emit(report: harness.ExperimentReport, args) -> None:
    if args.json:
        doc = report.to_dict()
        text = json.dumps(
            {"experiment_id": doc["experiment_id"], "inputs": doc["inputs"], "rows": doc["rows"],
             "summary": doc["summary"]},
            indent=2,
        ) + "\n"
    else:
        text = report.to_csv()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = _run(args)
    except (StepFailure, DomainError) as exc:
        print(f"hbvm: step failure: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE
    except ValueError as exc:
        print(f"hbvm: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args)
    if args.command in ("drift", "integrate"):
        for key, val in report.summary.items():
            print(f"{key}: {val}", file=sys.stderr)
    if report.summary.get("failed"):
        return EXIT_STEP_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
