"""Experiment drivers: energy drift, convergence orders, Gauss vs Lobatto,
blending parameters and conditioning of the reduced system.

Every driver returns an :class:`ExperimentReport` whose rows are emitted in
a fixed order, so the CSV output is byte-identical between runs.  Wall time
is kept in ``metadata`` and never written to the CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import blended
from .errors import StepFailure
from .integrator import integrate, make_solver
from .problems import ProblemSpec, get_problem
from .tableau import build_hbvm

__all__ = [
    "MethodSpec",
    "ExperimentReport",
    "drift_experiment",
    "convergence_table",
    "gauss_lobatto_compare",
    "gamma_table",
    "condition_sweep",
    "at_solver_floor",
    "regression_slope",
    "DEFAULT_SCAN_GRID",
]

DEFAULT_SCAN_GRID = np.logspace(-3.0, 4.0, 7001)
DRIFT_SLOPE_FACTOR = 1e-3


@dataclass(frozen=True)
class MethodSpec:
    """HBVM(k, s) on a node family, solved by the named stage solver."""

    k: int
    s: int
    family: str = "gauss"
    solver: str = "newton"
    tol: float = 1e-13

    def tableau(self):
        return build_hbvm(self.k, self.s, self.family)

    def label(self) -> str:
        return f"HBVM({self.k},{self.s})/{self.family}/{self.solver}"

    def as_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "s": self.s, "family": self.family, "solver": self.solver, "tol": self.tol}


def _problem(problem) -> ProblemSpec:
    return get_problem(problem) if isinstance(problem, str) else problem


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class ExperimentReport:
    """Tabular result of one experiment.

    Attributes:
        experiment_id: short name of the driver.
        inputs: the arguments that determine the output.
        columns: column names of ``rows``.
        rows: records in emission order.
        summary: derived scalars (maxima, flags, fitted slopes).
        metadata: wall time and solver statistics; not part of the CSV.
    """

    experiment_id: str
    inputs: Dict[str, Any]
    columns: List[str]
    rows: List[tuple] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable(
            {
                "experiment_id": self.experiment_id,
                "inputs": self.inputs,
                "rows": [dict(zip(self.columns, r)) for r in self.rows],
                "summary": self.summary,
                "metadata": self.metadata,
            }
        )

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def regression_slope(values: Sequence[float]) -> float:
    """Least-squares slope of ``values`` against their index ``1..n``."""
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        return 0.0
    x = np.arange(1, y.size + 1, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def at_solver_floor(max_dev: float, tol: float, n_steps: int, scale: float = 1.0) -> bool:
    """Whether a deviation is explained by stage-solver error alone.

    Independent per-step errors of size ``tol`` accumulate like a random
    walk, so the floor after ``n`` steps is ``tol * sqrt(n) * max(1, scale)``.
    """
    return max_dev <= tol * math.sqrt(max(n_steps, 1)) * max(1.0, abs(scale))


def drift_experiment(
    problem,
    method: MethodSpec,
    h: float,
    n_steps: int,
    invariants: Optional[Sequence[str]] = None,
) -> ExperimentReport:
    """Track ``H(y_j) - H(y_0)`` (and other invariants) along a trajectory.

    The summary classifies *drift* when the least-squares slope of ``|dH|``
    against the step index exceeds ``1e-3 * max|dH| / n`` and the deviation
    is above the solver floor (see :func:`at_solver_floor`).  A step failure
    ends the run; the rows up to that point are kept.
    """
    spec = _problem(problem)
    system = spec.system
    names = ["H"] + [n for n in (invariants if invariants is not None else system.invariants) if n != "H"]
    t = method.tableau()
    solver = make_solver(method.solver, t, tol=method.tol)
    start = time.perf_counter()
    traj = integrate(system, t, solver, spec.y0, 0.0, h, n_steps, record_invariants=names)
    wall = time.perf_counter() - start

    deltas = {n: traj.invariants[n] - traj.invariants[n][0] for n in names}
    cols = ["step", "t"] + [f"d{n}" for n in names]
    rows = [
        (j, float(traj.times[j])) + tuple(float(deltas[n][j]) for n in names)
        for j in range(1, len(traj.times))
    ]
    absdh = np.abs(deltas["H"][1:])
    done = traj.n_steps
    max_dh = float(absdh.max()) if done else 0.0
    slope = regression_slope(absdh)
    floor = at_solver_floor(max_dh, method.tol, done, float(traj.invariants["H"][0]))
    threshold = DRIFT_SLOPE_FACTOR * max_dh / max(done, 1)
    summary = {
        "max_abs_dH": max_dh,
        "slope": slope,
        "slope_threshold": threshold,
        "drift": bool(done >= 2 and slope > threshold and not floor),
        "at_solver_floor": floor,
        "solver_tol": method.tol,
        "steps_completed": done,
        "failed": traj.failed,
        "error": traj.error,
    }
    for n in names[1:]:
        summary[f"max_abs_d{n}"] = float(np.abs(deltas[n]).max()) if done else 0.0
    meta = {
        "wall_time": wall,
        "mean_iterations": float(traj.iterations.mean()) if done else 0.0,
        "max_iterations": int(traj.iterations.max()) if done else 0,
    }
    inputs = {"problem": spec.name, "method": method.as_dict(), "h": h, "n_steps": n_steps}
    return ExperimentReport("drift", inputs, cols, rows, summary, meta)


def _steps_for(t_final: float, h: float) -> int:
    n = t_final / h
    m = int(round(n))
    if m < 1 or abs(n - m) > 1e-9 * max(1.0, n):
        raise ValueError(f"T_final = {t_final} is not an integer multiple of h = {h}")
    return m


def convergence_table(
    problem,
    method: MethodSpec,
    h_list: Sequence[float],
    t_final: Optional[float] = None,
) -> ExperimentReport:
    """Final-time errors and observed orders for a halving sequence of steps.

    The reference solution is computed with the same method at ``min(h) / 8``;
    errors are Euclidean norms at ``t_final`` and the order column holds
    ``log2(e(h_i) / e(h_{i+1}))``.
    """
    spec = _problem(problem)
    hs = [float(h) for h in h_list]
    if len(hs) < 2:
        raise ValueError("need at least two step sizes")
    for a, b in zip(hs, hs[1:]):
        if abs(a - 2.0 * b) > 1e-12 * a:
            raise ValueError("h_list must be a halving sequence")
    T = spec.t_final if t_final is None else float(t_final)
    counts = [_steps_for(T, h) for h in hs]
    h_ref = hs[-1] / 8.0
    n_ref = _steps_for(T, h_ref)

    t = method.tableau()
    solver = make_solver(method.solver, t, tol=method.tol)
    start = time.perf_counter()

    def final(h, n):
        traj = integrate(spec.system, t, solver, spec.y0, 0.0, h, n, record_invariants=())
        if traj.failed:
            raise _failure(traj, h)
        return traj.states[-1]

    y_ref = final(h_ref, n_ref)
    errors = [float(np.linalg.norm(final(h, n) - y_ref)) for h, n in zip(hs, counts)]
    orders = [math.nan] + [
        math.log2(a / b) if a > 0 and b > 0 else math.nan for a, b in zip(errors, errors[1:])
    ]
    rows = [(h, n, e, p) for h, n, e, p in zip(hs, counts, errors, orders)]
    inputs = {"problem": spec.name, "method": method.as_dict(), "h_list": hs, "t_final": T}
    summary = {"h_ref": h_ref, "solver_tol": method.tol, "finest_orders": orders[-2:]}
    meta = {"wall_time": time.perf_counter() - start}
    return ExperimentReport("convergence", inputs, ["h", "n_steps", "error", "order"], rows, summary, meta)


def _failure(traj, h) -> StepFailure:
    return StepFailure(f"integration with h = {h} failed after {traj.n_steps} steps: {traj.error}")


def gauss_lobatto_compare(
    problem,
    s: int,
    k_list: Sequence[int],
    h: float,
    n_steps: int,
    solver: str = "newton",
    tol: float = 1e-13,
) -> ExperimentReport:
    """Max-norm distance between Gauss and Lobatto HBVM(k, s) trajectories, per ``k``."""
    spec = _problem(problem)
    if any(k < s for k in k_list):
        raise ValueError("every k must satisfy k >= s")
    start = time.perf_counter()
    rows = []
    for k in k_list:
        trajs = []
        for fam in ("gauss", "lobatto"):
            t = build_hbvm(k, s, fam)
            traj = integrate(spec.system, t, make_solver(solver, t, tol=tol), spec.y0, 0.0, h, n_steps, ())
            if traj.failed:
                raise _failure(traj, h)
            trajs.append(traj.states)
        rows.append((int(k), float(np.max(np.abs(trajs[0] - trajs[1])))))
    inputs = {"problem": spec.name, "s": s, "k_list": list(k_list), "h": h, "n_steps": n_steps,
              "solver": solver, "tol": tol}
    meta = {"wall_time": time.perf_counter() - start}
    return ExperimentReport("compare_kl", inputs, ["k", "max_diff"], rows, {"solver_tol": tol}, meta)


def gamma_table(s_list: Sequence[int], grid: Optional[Sequence[float]] = None) -> ExperimentReport:
    """Optimal blending parameter and amplification factor for each ``s``.

    The analytic ``rho*`` is cross-checked against a scan of the spectral
    radius of the iteration matrix along the imaginary axis.
    """
    grid = DEFAULT_SCAN_GRID if grid is None else np.asarray(grid, dtype=float)
    if any(s < 2 for s in s_list):
        raise ValueError("the blended iteration needs s >= 2")
    start = time.perf_counter()
    rows = []
    for s in s_list:
        part = blended.select_fundamental(build_hbvm(s, s))
        g = blended.optimal_gamma(part.C)
        scan = blended.amplification_scan(part.C, g.gamma, grid)
        rows.append((int(s), g.gamma, g.rho_star, scan))
    inputs = {"s_list": list(s_list), "grid": [float(grid[0]), float(grid[-1]), int(grid.size)]}
    meta = {"wall_time": time.perf_counter() - start}
    return ExperimentReport("gamma_table", inputs, ["s", "gamma", "rho_star", "rho_scan"], rows, {}, meta)


def condition_sweep(
    s_list: Sequence[int],
    k_max: int,
    selection: str = "rule_of_thumb",
    family: str = "gauss",
) -> ExperimentReport:
    """2-norm condition number of the reduced matrix ``C(k, s)`` for ``k = s..k_max``."""
    if k_max < max(s_list):
        raise ValueError("k_max must be at least max(s_list)")
    start = time.perf_counter()
    rows = []
    summary = {}
    for s in s_list:
        base = None
        for k in range(s, k_max + 1):
            part = blended.select_fundamental(build_hbvm(k, s, family), selection)
            c = float(np.linalg.cond(part.C))
            base = c if base is None else base
            rows.append((int(s), int(k), c))
        worst = max(r[2] for r in rows if r[0] == s)
        summary[f"max_ratio_s{s}"] = worst / base
    inputs = {"s_list": list(s_list), "k_max": k_max, "selection": selection, "family": family}
    meta = {"wall_time": time.perf_counter() - start}
    return ExperimentReport("cond_sweep", inputs, ["s", "k", "cond"], rows, summary, meta)
