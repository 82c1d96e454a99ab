"""Fixed-step time integration of Hamiltonian systems with HBVM tableaux."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, TextIO, Union

import numpy as np
from numpy.typing import ArrayLike

from . import blended as _blended
from .blended import BlendedConfig, Partition, StageSolution
from .errors import StepFailure
from .legendre import integrate_basis
from .tableau import HbvmTableau

__all__ = [
    "HamiltonianSystem",
    "LinearSystem",
    "FixedPoint",
    "SimplifiedNewton",
    "Blended",
    "make_solver",
    "DenseOutput",
    "StepResult",
    "Trajectory",
    "step",
    "integrate",
    "dense_eval",
]


class HamiltonianSystem:
    """Canonical Hamiltonian system ``y' = J grad H(y)`` with ``y = (q, p)``.

    Args:
        dim: state dimension ``2m``.
        hamiltonian: ``H(y)``; should accept row-stacked states when
            ``vectorized`` is True.
        gradient: ``grad H(y)``, same shape as its argument.
        hessian: optional ``y -> (2m, 2m)`` Hessian of ``H``.  Without it the
            Jacobian is approximated by central differences.
        invariants: extra named first integrals ``y -> float``.
        vectorized: whether ``gradient`` and the invariants accept arrays of
            shape ``(n, 2m)``.
    """

    def __init__(
        self,
        dim: int,
        hamiltonian: Callable,
        gradient: Callable,
        hessian: Optional[Callable] = None,
        invariants: Optional[Mapping[str, Callable]] = None,
        vectorized: bool = True,
        name: str = "",
    ):
        if dim < 2 or dim % 2:
            raise ValueError(f"state dimension must be even and positive, got {dim}")
        self.dim = dim
        self.m = dim // 2
        self.hamiltonian = hamiltonian
        self.gradient = gradient
        self.hessian = hessian
        self.invariants = {"H": hamiltonian, **dict(invariants or {})}
        self.vectorized = vectorized
        self.name = name

    def __repr__(self):
        return f"HamiltonianSystem(name={self.name!r}, dim={self.dim})"

    def _grad(self, Y: np.ndarray) -> np.ndarray:
        if self.vectorized or Y.ndim == 1:
            return np.asarray(self.gradient(Y), dtype=float)
        return np.array([self.gradient(y) for y in Y], dtype=float)

    def rhs(self, Y: ArrayLike) -> np.ndarray:
        """Vector field ``J grad H``; rows of ``Y`` are independent states."""
        Y = np.asarray(Y, dtype=float)
        G = self._grad(Y)
        out = np.empty_like(G)
        out[..., : self.m] = G[..., self.m :]
        out[..., self.m :] = -G[..., : self.m]
        return out

    def jacobian(self, y: ArrayLike) -> np.ndarray:
        """Jacobian of the vector field at ``y``."""
        y = np.asarray(y, dtype=float)
        if self.hessian is not None:
            Hs = np.asarray(self.hessian(y), dtype=float)
            return np.vstack([Hs[self.m :], -Hs[: self.m]])
        # central differences, step 1e-6 (1 + |y_i|)
        steps = 1e-6 * (1.0 + np.abs(y))
        E = np.diag(steps)
        cols = (self.rhs(y + E) - self.rhs(y - E)) / (2.0 * steps[:, None])
        return cols.T

    def evaluate(self, name: str, states: ArrayLike) -> np.ndarray:
        """Evaluate the invariant ``name`` on each row of ``states``."""
        fn = self.invariants[name]
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if self.vectorized:
            return np.asarray(fn(states), dtype=float).reshape(len(states))
        return np.array([fn(y) for y in states], dtype=float)


class LinearSystem:
    """Linear vector field ``y' = L y`` (any dimension), for stability studies."""

    def __init__(self, L: ArrayLike):
        self.L = np.atleast_2d(np.asarray(L, dtype=float))
        self.dim = self.L.shape[0]
        self.invariants = {}

    def rhs(self, Y: ArrayLike) -> np.ndarray:
        return np.asarray(Y, dtype=float) @ self.L.T

    def jacobian(self, y: ArrayLike) -> np.ndarray:
        return self.L


@dataclass(frozen=True)
class FixedPoint:
    """Functional iteration on the full ``n``-stage system ``Y = e y0 + h A f(Y)``."""

    tol: float = 1e-13
    max_iter: int = 200

    def solve(self, system, t: HbvmTableau, y0: np.ndarray, h: float) -> StageSolution:
        A = t.A
        Y = np.tile(y0, (t.n_stages, 1))
        F = system.rhs(Y)
        converged = False
        it = 0
        while it < self.max_iter:
            it += 1
            Y_new = y0 + h * (A @ F)
            delta = float(np.max(np.abs(Y_new - Y)))
            Y = Y_new
            F = system.rhs(Y)
            if not np.isfinite(delta):
                break
            if delta <= self.tol:
                converged = True
                break
        res = float(np.max(np.abs(Y - y0 - h * (A @ F))))
        return StageSolution(Y, F, it, converged, res)


@dataclass(frozen=True)
class SimplifiedNewton:
    """Simplified Newton on the reduced block-``s`` system."""

    partition: Partition
    tol: float = 1e-13
    max_iter: int = 50

    def solve(self, system, t: HbvmTableau, y0: np.ndarray, h: float) -> StageSolution:
        return _blended.solve_stages_newton(system, t, self.partition, y0, h, self.tol, self.max_iter)


@dataclass(frozen=True)
class Blended:
    """Blended iteration on the reduced block-``s`` system."""

    partition: Partition
    config: BlendedConfig

    @property
    def tol(self) -> float:
        return self.config.newton_tol

    def solve(self, system, t: HbvmTableau, y0: np.ndarray, h: float) -> StageSolution:
        return _blended.solve_stages(system, t, self.partition, self.config, y0, h)


Solver = Union[FixedPoint, SimplifiedNewton, Blended]

_SOLVER_ALIASES = {
    "fixed": "fixed_point",
    "fixed_point": "fixed_point",
    "newton": "simplified_newton",
    "simplified_newton": "simplified_newton",
    "blended": "blended",
}


def make_solver(kind: str, t: HbvmTableau, tol: float = 1e-13, **kwargs) -> Solver:
    """Build a solver for tableau ``t`` by name.

    ``kind`` is one of ``fixed``/``fixed_point``, ``newton``/``simplified_newton``
    or ``blended``.  The reduced solvers use the rule-of-thumb partition and,
    for ``blended``, the optimal ``gamma``; ``kwargs`` go to the solver or
    :class:`BlendedConfig`.
    """
    try:
        kind = _SOLVER_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown solver {kind!r}") from None
    if kind == "fixed_point":
        return FixedPoint(tol=tol, **kwargs)
    part = _blended.select_fundamental(t)
    if kind == "simplified_newton":
        return SimplifiedNewton(part, tol=tol, **kwargs)
    return Blended(part, _blended.default_config(part, newton_tol=tol, **kwargs))


@dataclass(frozen=True)
class DenseOutput:
    """Polynomial ``sigma(t0 + tau h) = y0 + h sum_j gamma_j int_0^tau P_j`` over one step."""

    gamma_coeffs: np.ndarray
    y0: np.ndarray
    t0: float
    h: float


def dense_eval(d: DenseOutput, tau: float) -> np.ndarray:
    """Evaluate the step polynomial at ``t0 + tau h`` with ``tau`` in [0, 1]."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("dense output is only defined for tau in [0, 1]")
    s = d.gamma_coeffs.shape[0]
    return d.y0 + d.h * (integrate_basis(s, tau) @ d.gamma_coeffs)


@dataclass
class StepResult:
    y1: np.ndarray
    dense: DenseOutput
    stats: StageSolution


def step(system, t: HbvmTableau, solver: Solver, y0: ArrayLike, t0: float, h: float) -> StepResult:
    """Advance one step of size ``h`` (negative ``h`` integrates backwards).

    Raises:
        StepFailure: the stage equations were not solved to the solver tolerance.
    """
    y0 = np.asarray(y0, dtype=float)
    # a diverging iteration overflows; that is reported as a step failure below
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solver.solve(system, t, y0, h)
    if not sol.converged:
        raise StepFailure(
            f"stage solver did not converge in {sol.iterations} iterations "
            f"(residual {sol.residual:.3e})",
            residual=sol.residual,
            iterations=sol.iterations,
        )
    weighted = t.omega[:, None] * sol.derivatives
    y1 = y0 + h * weighted.sum(axis=0)
    gamma = t.P_mat.T @ weighted
    return StepResult(y1, DenseOutput(gamma, y0, t0, h), sol)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class Trajectory:
    """States at ``t0 + j h`` with invariant series and per-step solver statistics."""

    times: np.ndarray
    states: np.ndarray
    invariants: Dict[str, np.ndarray]
    iterations: np.ndarray
    failed: bool = False
    error: Optional[str] = None
    tol: float = float("nan")

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def to_csv(self, fh: Optional[TextIO] = None) -> str:
        """Write ``t, y_1..y_2m, <invariants>`` rows with 17 significant digits.

        Returns the CSV text; also writes it to ``fh`` when given.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        names = list(self.invariants)
        dim = self.states.shape[1]
        writer.writerow(["t"] + [f"y_{i + 1}" for i in range(dim)] + names)
        for j, (tj, yj) in enumerate(zip(self.times, self.states)):
            row = [_fmt(tj)] + [_fmt(v) for v in yj] + [_fmt(self.invariants[n][j]) for n in names]
            writer.writerow(row)
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def integrate(
    system,
    t: HbvmTableau,
    solver: Solver,
    y0: ArrayLike,
    t0: float,
    h: float,
    n_steps: int,
    record_invariants: Sequence[str] = ("H",),
) -> Trajectory:
    """Take ``n_steps`` fixed steps from ``(t0, y0)``.

    A step failure stops the integration; the partial trajectory is returned
    with ``failed`` set and the error message recorded.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    y0 = np.array(y0, dtype=float)
    states = [y0.copy()]
    iterations = []
    failed, error = False, None
    y = y0
    for j in range(n_steps):
        try:
            res = step(system, t, solver, y, t0 + j * h, h)
        except StepFailure as exc:
            failed, error = True, str(exc)
            break
        y = res.y1
        states.append(y)
        iterations.append(res.stats.iterations)
    states = np.array(states)
    times = t0 + h * np.arange(len(states))
    inv = {name: system.evaluate(name, states) for name in record_invariants}
    return Trajectory(
        times, states, inv, np.array(iterations, dtype=int), failed, error, getattr(solver, "tol", float("nan"))
    )
