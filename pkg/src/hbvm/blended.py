"""Reduced stage system of block size s and its blended iterative solution.

Only ``s`` of the ``n`` stages (the *fundamental* ones) are unknowns; the
remaining *silent* stages are the affine combinations
``Y2 = u_hat y0 + A1 Y1``.  The reduced residual is

    F(Y1) = Y1 - e y0 - h [B1 f(Y1) + B2 f(u_hat y0 + A1 Y1)]

and it is solved either by simplified Newton on the ``s * d`` system with
matrix ``I - h C (x) J0`` (``C = B1 + B2 A1``), or by the blended iteration,
which only ever factors the ``d x d`` matrix ``Phi = I - h gamma J0``.

Stage arrays are stored row-wise: shape ``(stages, d)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .errors import StepFailure
from .tableau import HbvmTableau

__all__ = [
    "Partition",
    "BlendedConfig",
    "GammaChoice",
    "StageSolution",
    "partition",
    "reference_points",
    "select_fundamental",
    "optimal_gamma",
    "iteration_matrix",
    "amplification_scan",
    "default_config",
    "solve_stages",
    "solve_stages_newton",
]

_TIE = 1e-12


@dataclass(frozen=True)
class Partition:
    """Split of the abscissae into fundamental and silent stages.

    Attributes:
        fundamental_idx: indices (into the tableau nodes) of the s unknown stages.
        silent_idx: indices of the remaining stages.
        A1: ``I_s2 I_s1^{-1}``, shape ``(n - s, s)``.
        u_hat: ``u - A1 e``.
        B1: ``I_s1 P_s1^T Omega_1``.
        B2: ``I_s1 P_s2^T Omega_2``.
        C: ``B1 + B2 A1``.
        symmetric: False when ``n - s`` is odd, in which case the selection
            rule cannot guarantee a symmetric choice.
    """

    fundamental_idx: tuple
    silent_idx: tuple
    A1: np.ndarray
    u_hat: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C: np.ndarray
    symmetric: bool = True

    @property
    def s(self) -> int:
        return len(self.fundamental_idx)


def partition(t: HbvmTableau, fundamental_idx: Sequence[int]) -> Partition:
    """Build the reduced-system matrices for an explicit choice of fundamental stages."""
    fund = tuple(sorted(int(i) for i in fundamental_idx))
    n = t.n_stages
    if len(fund) != t.s or len(set(fund)) != t.s or not all(0 <= i < n for i in fund):
        raise ValueError(f"need {t.s} distinct stage indices in [0, {n}), got {fundamental_idx!r}")
    silent = tuple(i for i in range(n) if i not in fund)
    I1, I2 = t.I_mat[list(fund)], t.I_mat[list(silent)]
    P1, P2 = t.P_mat[list(fund)], t.P_mat[list(silent)]
    w1, w2 = t.omega[list(fund)], t.omega[list(silent)]
    if np.linalg.cond(I1) > 1e14:
        raise RuntimeError(f"integral block of fundamental stages {fund} is singular")
    A1 = np.linalg.solve(I1.T, I2.T).T
    u_hat = 1.0 - A1.sum(axis=1)
    B1 = I1 @ (P1.T * w1)
    B2 = I1 @ (P2.T * w2)
    C = B1 + B2 @ A1
    return Partition(fund, silent, A1, u_hat, B1, B2, C, (n - t.s) % 2 == 0)


def reference_points(s: int) -> np.ndarray:
    """``s`` equally spaced interior points ``j / (s + 1)``."""
    return np.arange(1, s + 1) / (s + 1)


def select_fundamental(t: HbvmTableau, strategy: str = "rule_of_thumb") -> Partition:
    """Choose the fundamental abscissae and assemble the partition.

    ``"rule_of_thumb"`` picks, for each reference point ``j/(s+1)`` in turn,
    the closest unused node (ties go to the smaller node).  ``"first_s"``
    takes the first ``s`` nodes.  A node at ``tau = 0`` is never chosen: its
    stage is ``y0`` and its row of the integral block vanishes.
    """
    nodes = t.nodes
    candidates = [i for i in range(t.n_stages) if nodes[i] > 0.0]
    if strategy == "first_s":
        chosen = candidates[: t.s]
    elif strategy == "rule_of_thumb":
        chosen = []
        for ref in reference_points(t.s):
            free = [i for i in candidates if i not in chosen]
            dist = np.abs(nodes[free] - ref)
            near = [i for i, d in zip(free, dist) if d <= dist.min() + _TIE]
            chosen.append(min(near, key=lambda i: nodes[i]))
    else:
        raise ValueError(f"unknown selection strategy {strategy!r}")
    return partition(t, chosen)


class GammaChoice(NamedTuple):
    gamma: float
    rho_star: float


def optimal_gamma(C: ArrayLike) -> GammaChoice:
    """Blending parameter ``gamma = min |mu|`` over the spectrum of ``C``.

    The maximum amplification factor of the blended iteration is then
    ``1 - cos(phi)`` with ``phi`` the argument of the minimal-modulus
    eigenvalue.
    """
    mu = np.linalg.eigvals(np.asarray(C, dtype=float))
    mods = np.abs(mu)
    if mods.min() <= 1e-14 * mods.max():
        raise ValueError("matrix C is singular")
    mu_min = mu[np.argmin(mods)]
    phi = abs(np.angle(mu_min))
    return GammaChoice(float(np.abs(mu_min)), float(1.0 - np.cos(phi)))


def iteration_matrix(C: ArrayLike, gamma: float, q: complex) -> np.ndarray:
    """Error propagation matrix ``Z(q) = q/(1 - gamma q)^2 C^{-1} (C - gamma I)^2`` for ``y' = lambda y``."""
    C = np.asarray(C, dtype=float)
    shifted = C - gamma * np.eye(C.shape[0])
    return q / (1.0 - gamma * q) ** 2 * np.linalg.solve(C, shifted @ shifted)


def amplification_scan(C: ArrayLike, gamma: float, grid: ArrayLike) -> float:
    """Max spectral radius of ``Z(i y)`` over the imaginary magnitudes ``y`` in ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("grid must be a non-empty list of positive values")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return max(
        float(np.max(np.abs(np.linalg.eigvals(iteration_matrix(C, gamma, 1j * y))))) for y in grid
    )


@dataclass(frozen=True)
class BlendedConfig:
    """Parameters of the blended iteration.

    ``max_inner = 1`` gives the nonlinear variant, where the right-hand side
    is refreshed after every correction.
    """

    gamma: float
    newton_tol: float = 1e-13
    max_outer: int = 50
    max_inner: int = 1

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")


def default_config(part: Partition, **kwargs) -> BlendedConfig:
    """Config with the optimal ``gamma`` for ``part.C``."""
    return BlendedConfig(gamma=optimal_gamma(part.C).gamma, **kwargs)


@dataclass
class StageSolution:
    """Result of solving the stage equations of one step.

    ``stages`` and ``derivatives`` hold all ``n`` stages in node order.
    """

    stages: np.ndarray
    derivatives: np.ndarray
    iterations: int
    converged: bool
    residual: float
    fundamental_idx: tuple = field(default=())

    @property
    def fundamental_stages(self) -> np.ndarray:
        return self.stages[list(self.fundamental_idx)]


class _Reduced:
    """Evaluates the reduced residual and reassembles the full stage vector."""

    def __init__(self, system, part: Partition, y0: np.ndarray, h: float):
        self.system = system
        self.part = part
        self.y0 = y0
        self.h = h
        self.fund = list(part.fundamental_idx)
        self.silent = list(part.silent_idx)
        self.n = len(self.fund) + len(self.silent)

    def __call__(self, Y1: np.ndarray):
        p = self.part
        Y2 = p.u_hat[:, None] * self.y0 + p.A1 @ Y1
        stages = np.empty((self.n, self.y0.size))
        stages[self.fund] = Y1
        stages[self.silent] = Y2
        derivs = self.system.rhs(stages)
        F = Y1 - self.y0 - self.h * (p.B1 @ derivs[self.fund] + p.B2 @ derivs[self.silent])
        return F, stages, derivs


def _initial(y0: np.ndarray, s: int, initial: Optional[ArrayLike]) -> np.ndarray:
    if initial is None:
        return np.tile(y0, (s, 1))
    Y1 = np.array(initial, dtype=float)
    if Y1.shape != (s, y0.size):
        raise ValueError(f"initial fundamental stages must have shape {(s, y0.size)}")
    return Y1


def solve_stages(
    system,
    t: HbvmTableau,
    part: Partition,
    cfg: BlendedConfig,
    y0: ArrayLike,
    h: float,
    initial: Optional[ArrayLike] = None,
) -> StageSolution:
    """Solve the reduced stage system with the blended iteration.

    ``system`` must provide ``rhs(Y)`` for row-stacked states and
    ``jacobian(y)`` (the Jacobian of the vector field).  ``J0`` is frozen at
    ``y0`` and ``Phi = I - h gamma J0`` is factored once.

    Returns a :class:`StageSolution`; ``converged`` is False when
    ``cfg.max_outer`` is exhausted.  Convergence is declared when the max-norm of
    the update or of the residual drops to ``cfg.newton_tol``.

    Raises:
        StepFailure: if ``Phi`` is singular.
    """
    y0 = np.asarray(y0, dtype=float)
    d = y0.size
    gamma, tol = cfg.gamma, cfg.newton_tol
    J0 = np.asarray(system.jacobian(y0), dtype=float)
    Phi = np.eye(d) - h * gamma * J0
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(Phi, check_finite=True)
    if np.any(np.abs(np.diag(lu[0])) <= np.finfo(float).eps * np.abs(Phi).max()):
        raise StepFailure("blended iteration matrix Phi is singular")

    def theta(X):
        return scipy.linalg.lu_solve(lu, X.T, check_finite=False).T

    C = part.C
    Cinv = np.linalg.inv(C)
    reduced = _Reduced(system, part, y0, h)
    Y1 = _initial(y0, part.s, initial)
    F, stages, derivs = reduced(Y1)
    res = float(np.max(np.abs(F)))
    converged = res <= tol
    it = 0
    while not converged and it < cfg.max_outer:
        it += 1
        psi1 = -F
        psi2 = gamma * (Cinv @ psi1)
        psi = psi2 + theta(psi1 - psi2)
        delta = theta(psi)
        for _ in range(cfg.max_inner - 1):
            G = gamma * (Cinv @ delta - h * delta @ J0.T)
            M_delta = G + theta(delta - h * (C @ delta) @ J0.T - G)
            delta = delta - theta(M_delta - psi)
        Y1 = Y1 + delta
        F, stages, derivs = reduced(Y1)
        res = float(np.max(np.abs(F)))
        if not np.isfinite(res):
            break
        converged = res <= tol or float(np.max(np.abs(delta))) <= tol
    return StageSolution(stages, derivs, it, converged, res, part.fundamental_idx)


def solve_stages_newton(
    system,
    t: HbvmTableau,
    part: Partition,
    y0: ArrayLike,
    h: float,
    tol: float = 1e-13,
    max_iter: int = 50,
    initial: Optional[ArrayLike] = None,
) -> StageSolution:
    """Simplified Newton on the reduced system with the full ``s d x s d`` matrix ``I - h C (x) J0``."""
    y0 = np.asarray(y0, dtype=float)
    d, s = y0.size, part.s
    J0 = np.asarray(system.jacobian(y0), dtype=float)
    M = np.eye(s * d) - h * np.kron(part.C, J0)
    try:
        lu = scipy.linalg.lu_factor(M)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise StepFailure(f"Newton matrix could not be factored: {exc}") from exc
    reduced = _Reduced(system, part, y0, h)
    Y1 = _initial(y0, s, initial)
    F, stages, derivs = reduced(Y1)
    res = float(np.max(np.abs(F)))
    converged = res <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        delta = scipy.linalg.lu_solve(lu, -F.ravel()).reshape(s, d)
        Y1 = Y1 + delta
        F, stages, derivs = reduced(Y1)
        res = float(np.max(np.abs(F)))
        if not np.isfinite(res):
            break
        converged = res <= tol or float(np.max(np.abs(delta))) <= tol
    return StageSolution(stages, derivs, it, converged, res, part.fundamental_idx)
