"""Benchmark Hamiltonian problems.

All states are laid out as ``y = (q, p)``.  Hamiltonians and gradients
accept a single state or row-stacked states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import DomainError
from .integrator import HamiltonianSystem

__all__ = [
    "ProblemSpec",
    "faou_problem",
    "fpu_problem",
    "biot_problem",
    "sitnikov_problem",
    "harmonic_oscillator",
    "get_problem",
    "PROBLEMS",
]


@dataclass(frozen=True)
class ProblemSpec:
    """A Hamiltonian system together with its reference data.

    Attributes:
        degree: polynomial degree of ``H`` (None when ``H`` is not a polynomial).
        t_final: default horizon for convergence studies.
        exact: optional closed-form solution ``t -> y(t)``.
    """

    name: str
    system: HamiltonianSystem
    y0: np.ndarray
    default_h: float
    degree: Optional[int] = None
    parameters: Dict[str, float] = field(default_factory=dict)
    t_final: float = 10.0
    exact: Optional[Callable[[float], np.ndarray]] = None

    def min_exact_k(self, s: int) -> Optional[int]:
        """Smallest Gauss k with ``k >= degree * s / 2`` (energy exactly conserved)."""
        if self.degree is None:
            return None
        return max(s, -(-self.degree * s // 2))


# -- Faou's cubic/sextic problem --------------------------------------------


def _faou_H(y):
    y = np.asarray(y, dtype=float)
    q, p = y[..., 0], y[..., 1]
    return p**3 / 3 - p / 2 + q**6 / 30 + q**4 / 4 - q**3 / 3 + 1.0 / 6


def _faou_grad(y):
    y = np.asarray(y, dtype=float)
    q, p = y[..., 0], y[..., 1]
    return np.stack([q**5 / 5 + q**3 - q**2, p**2 - 0.5], axis=-1)


def _faou_hess(y):
    q, p = y
    return np.array([[q**4 + 3 * q**2 - 2 * q, 0.0], [0.0, 2 * p]])


def faou_problem() -> ProblemSpec:
    """``H = p^3/3 - p/2 + q^6/30 + q^4/4 - q^3/3 + 1/6`` from ``(q, p) = (0, 1)``, where ``H = 0``."""
    system = HamiltonianSystem(2, _faou_H, _faou_grad, _faou_hess, name="faou")
    return ProblemSpec("faou", system, np.array([0.0, 1.0]), 0.16, degree=6, t_final=51.2)


# -- Fermi-Pasta-Ulam chain --------------------------------------------------


def fpu_problem(m: int = 3, omega: float = 50.0) -> ProblemSpec:
    """Chain of ``2m`` unit masses, alternating stiff linear and soft quartic springs.

    ``H = 1/2 |p|^2 + omega^2/4 sum_i (q_{2i} - q_{2i-1})^2 + sum_i (q_{2i+1} - q_{2i})^4``
    with fixed ends ``q_0 = q_{2m+1} = 0``.
    """
    n = 2 * m
    w2 = omega**2

    def padded(y):
        y = np.asarray(y, dtype=float)
        Q = np.zeros(y.shape[:-1] + (n + 2,))
        Q[..., 1 : n + 1] = y[..., :n]
        return Q, y[..., n:]

    def H(y):
        Q, p = padded(y)
        stiff = Q[..., 2:n + 1:2] - Q[..., 1:n:2]
        soft = Q[..., 1::2] - Q[..., 0::2]
        return 0.5 * np.sum(p**2, -1) + w2 / 4 * np.sum(stiff**2, -1) + np.sum(soft**4, -1)

    def grad(y):
        Q, p = padded(y)
        gQ = np.zeros_like(Q)
        stiff = Q[..., 2:n + 1:2] - Q[..., 1:n:2]
        gQ[..., 2:n + 1:2] += w2 / 2 * stiff
        gQ[..., 1:n:2] -= w2 / 2 * stiff
        soft3 = 4 * (Q[..., 1::2] - Q[..., 0::2]) ** 3
        gQ[..., 1::2] += soft3
        gQ[..., 0::2] -= soft3
        return np.concatenate([gQ[..., 1 : n + 1], p], axis=-1)

    def hess(y):
        Q, _ = padded(y)
        HQ = np.zeros((n + 2, n + 2))
        block = np.array([[1.0, -1.0], [-1.0, 1.0]])
        for i in range(1, m + 1):
            a, b = 2 * i - 1, 2 * i
            HQ[np.ix_([a, b], [a, b])] += w2 / 2 * block
        for i in range(m + 1):
            a, b = 2 * i, 2 * i + 1
            HQ[np.ix_([a, b], [a, b])] += 12 * (Q[b] - Q[a]) ** 2 * block
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = HQ[1 : n + 1, 1 : n + 1]
        out[n:, n:] = np.eye(n)
        return out

    y0 = np.concatenate([np.arange(n) / 10.0, np.zeros(n)])
    system = HamiltonianSystem(2 * n, H, grad, hess, name="fpu")
    return ProblemSpec(
        "fpu", system, y0, 0.05, degree=4, parameters={"m": m, "omega": omega}, t_final=10.0
    )


# -- charged particle in a Biot-Savart field ---------------------------------


def biot_problem(mass: float = 1.0, charge: float = -1.0, field_strength: float = 1.0) -> ProblemSpec:
    """Charged particle in the field of an infinite straight wire.

    ``H = 1/(2 mass) [(px - a x/r^2)^2 + (py - a y/r^2)^2 + (pz + a log r)^2]`` with
    ``r^2 = x^2 + y^2`` and ``a = charge * field_strength``.  The velocity-like
    entries are used directly as canonical momenta.
    """
    a = charge * field_strength

    def parts(y):
        y = np.asarray(y, dtype=float)
        x, yy = y[..., 0], y[..., 1]
        r2 = x * x + yy * yy
        if np.any(r2 == 0.0):
            raise DomainError("Biot-Savart Hamiltonian is singular on the wire (x = y = 0)")
        u = y[..., 3] - a * x / r2
        v = y[..., 4] - a * yy / r2
        w = y[..., 5] + a * 0.5 * np.log(r2)
        return x, yy, r2, u, v, w

    def H(y):
        _, _, _, u, v, w = parts(y)
        return (u * u + v * v + w * w) / (2 * mass)

    def grad(y):
        x, yy, r2, u, v, w = parts(y)
        r4 = r2 * r2
        gx = (-a * u * (yy * yy - x * x) / r4 + a * v * 2 * x * yy / r4 + a * w * x / r2) / mass
        gy = (a * u * 2 * x * yy / r4 - a * v * (x * x - yy * yy) / r4 + a * w * yy / r2) / mass
        zero = np.zeros_like(x)
        return np.stack([gx, gy, zero, u / mass, v / mass, w / mass], axis=-1)

    y0 = np.array([0.5, 10.0, 0.0, -0.1, -0.3, 0.0])
    system = HamiltonianSystem(6, H, grad, None, name="biot")
    return ProblemSpec(
        "biot",
        system,
        y0,
        0.1,
        parameters={"mass": mass, "charge": charge, "B0": field_strength, "alpha": a},
        t_final=50.0,
    )


# -- Sitnikov three-body configuration ---------------------------------------


def sitnikov_problem(masses=(1.0, 1.0, 1e-5), G: float = 1.0) -> ProblemSpec:
    """Two equal primaries on eccentric orbits and a light body on the z-axis.

    The initial velocities ``(0, -sqrt(10)/20, 0)``, ``(0, sqrt(10)/20, 0)``,
    ``(0, 0, 1/2)`` are converted to momenta ``p_i = m_i v_i``.  Extra
    invariant ``angular_momentum`` is the Euclidean norm of ``sum q_i x p_i``.
    """
    masses = np.asarray(masses, dtype=float)
    N = masses.size
    d = 3 * N
    pairs = [(i, j) for i in range(N) for j in range(i)]

    def split(y):
        y = np.asarray(y, dtype=float)
        q = y[..., :d].reshape(y.shape[:-1] + (N, 3))
        p = y[..., d:].reshape(y.shape[:-1] + (N, 3))
        return q, p

    def separation(q, i, j):
        r = q[..., i, :] - q[..., j, :]
        dist = np.sqrt(np.sum(r * r, -1))
        if np.any(dist == 0.0):
            raise DomainError(f"bodies {i} and {j} collide")
        return r, dist

    def H(y):
        q, p = split(y)
        kin = 0.5 * np.sum(np.sum(p * p, -1) / masses, -1)
        pot = 0.0
        for i, j in pairs:
            _, dist = separation(q, i, j)
            pot = pot - G * masses[i] * masses[j] / dist
        return kin + pot

    def grad(y):
        q, p = split(y)
        gq = np.zeros_like(q)
        for i, j in pairs:
            r, dist = separation(q, i, j)
            f = (G * masses[i] * masses[j] / dist**3)[..., None] * r
            gq[..., i, :] += f
            gq[..., j, :] -= f
        gp = p / masses[:, None]
        shape = np.shape(y)[:-1] + (d,)
        return np.concatenate([gq.reshape(shape), gp.reshape(shape)], axis=-1)

    def hess(y):
        q, _ = split(y)
        out = np.zeros((2 * d, 2 * d))
        for i, j in pairs:
            r, dist = separation(q, i, j)
            K = G * masses[i] * masses[j] * (np.eye(3) / dist**3 - 3 * np.outer(r, r) / dist**5)
            si, sj = slice(3 * i, 3 * i + 3), slice(3 * j, 3 * j + 3)
            out[si, si] += K
            out[sj, sj] += K
            out[si, sj] -= K
            out[sj, si] -= K
        out[d:, d:] = np.diag(np.repeat(1.0 / masses, 3))
        return out

    def angular_momentum(y):
        q, p = split(y)
        return np.linalg.norm(np.sum(np.cross(q, p), axis=-2), axis=-1)

    v = np.sqrt(10.0) / 20.0
    q0 = np.array([-2.5, 0.0, 0.0, 2.5, 0.0, 0.0, 0.0, 0.0, 1e-9])
    v0 = np.array([0.0, -v, 0.0, 0.0, v, 0.0, 0.0, 0.0, 0.5])
    p0 = v0 * np.repeat(masses, 3)
    system = HamiltonianSystem(
        2 * d, H, grad, hess, invariants={"angular_momentum": angular_momentum}, name="sitnikov"
    )
    params = {"N": N, "G": G, "m1": masses[0], "m2": masses[1], "m3": masses[2],
              "e": 0.75, "d": 5.0, "h": 0.5, "t_max": 1500.0}
    return ProblemSpec("sitnikov", system, np.concatenate([q0, p0]), 0.5, parameters=params, t_final=1500.0)


def linear_momentum(y, n_bodies: int = 3) -> np.ndarray:
    """Total momentum ``sum p_i`` of an ``n_bodies`` configuration in 3-D."""
    y = np.asarray(y, dtype=float)
    d = 3 * n_bodies
    return y[..., d:].reshape(y.shape[:-1] + (n_bodies, 3)).sum(axis=-2)


# -- harmonic oscillator -----------------------------------------------------


def harmonic_oscillator(m: int = 1) -> ProblemSpec:
    """``H = (|p|^2 + |q|^2) / 2`` in ``m`` degrees of freedom, from ``q = e_1, p = 0``."""
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    m = int(m)

    def H(y):
        y = np.asarray(y, dtype=float)
        return 0.5 * np.sum(y * y, -1)

    def grad(y):
        return np.asarray(y, dtype=float).copy()

    def hess(y):
        return np.eye(2 * m)

    y0 = np.zeros(2 * m)
    y0[0] = 1.0

    def exact(t):
        q0, p0 = y0[:m], y0[m:]
        c, s = np.cos(t), np.sin(t)
        return np.concatenate([c * q0 + s * p0, c * p0 - s * q0])

    system = HamiltonianSystem(2 * m, H, grad, hess, name="harmonic")
    return ProblemSpec("harmonic", system, y0, 0.1, degree=2, parameters={"m": m},
                       t_final=2 * np.pi, exact=exact)


PROBLEMS = {
    "faou": faou_problem,
    "fpu": fpu_problem,
    "biot": biot_problem,
    "sitnikov": sitnikov_problem,
    "harmonic": harmonic_oscillator,
}


def get_problem(name: str) -> ProblemSpec:
    """Look up a problem by its CLI name."""
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
