"""Quadrature rules on [0, 1].

Gauss and Lobatto nodes are computed by Newton iteration on the
recurrence-evaluated Legendre polynomial (no eigenvalue solver), then mapped
from [-1, 1] to [0, 1].  Only the non-negative half of the roots is
computed; the other half is obtained by reflection so the rules are
symmetric to the last bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .legendre import eval_basis

__all__ = [
    "QuadratureRule",
    "gauss_rule",
    "lobatto_rule",
    "custom_rule",
    "interpolatory_weights",
    "lagrange_basis",
    "measured_exactness",
]

_NEWTON_TOL = 1e-14
_MAX_NEWTON = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Abscissae and weights of a quadrature formula on [0, 1].

    Attributes:
        nodes: sorted distinct abscissae.
        weights: quadrature weights, one per node.
        family: ``"gauss"``, ``"lobatto"`` or ``"custom"``.
        exactness_degree: highest polynomial degree integrated exactly.
    """

    nodes: np.ndarray
    weights: np.ndarray
    family: str
    exactness_degree: int

    def __post_init__(self):
        for name in ("nodes", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, func) -> float:
        """Apply the rule to a vectorized callable on [0, 1]."""
        return float(np.dot(self.weights, func(self.nodes)))

    def satisfies_b(self, order: int) -> bool:
        """Whether the simplifying assumption B(order) holds."""
        return self.exactness_degree >= order - 1


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classical Legendre ``L_n``, ``L_{n-1}`` and ``L_n'`` at points ``x`` in (-1, 1)."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x), np.zeros_like(x)
    for j in range(1, n):
        p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, p_prev, dp


def _newton_polish(func, x0: np.ndarray, lower: float, upper: float) -> np.ndarray:
    """Damped Newton on ``func(x) -> (value, derivative)``, kept inside ``(lower, upper)``."""
    x = x0.copy()
    for _ in range(_MAX_NEWTON):
        val, der = func(x)
        step = val / der
        trial = x - step
        # damp steps that leave the bracket
        bad = (trial <= lower) | (trial >= upper)
        while np.any(bad):
            step = np.where(bad, 0.5 * step, step)
            trial = x - step
            bad = (trial <= lower) | (trial >= upper)
        x = trial
        if np.all(np.abs(step) < _NEWTON_TOL):
            break
    val, der = func(x)
    if np.any(np.abs(val / der) >= _NEWTON_TOL):
        raise RuntimeError("Legendre root polishing did not converge")
    return x


def gauss_rule(k: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``k`` nodes on [0, 1] (degree of exactness ``2k - 1``)."""
    if int(k) != k or k < 1:
        raise ValueError(f"number of Gauss nodes must be a positive integer, got {k!r}")
    k = int(k)
    half = k // 2
    # positive roots, largest first
    i = np.arange(1, half + 1)
    guess = np.cos(np.pi * (i - 0.25) / (k + 0.5))

    def legendre(x):
        p, _, dp = _legendre_and_derivative(k, x)
        return p, dp

    pos = _newton_polish(legendre, guess, 0.0, 1.0) if half else np.empty(0)
    _, _, dpos = _legendre_and_derivative(k, pos)
    wpos = 1.0 / ((1.0 - pos**2) * dpos**2)  # already halved for [0, 1]

    # ascending on [0, 1]: reflected roots first, then optional midpoint, then positive roots
    upper_nodes = 0.5 * (1.0 + pos[::-1])
    lower_nodes = 0.5 * (1.0 - pos)
    nodes = [lower_nodes]
    weights = [wpos]
    if k % 2:
        _, _, d0 = _legendre_and_derivative(k, np.zeros(1))
        nodes.append(np.array([0.5]))
        weights.append(1.0 / d0**2)
    nodes.append(upper_nodes)
    weights.append(wpos[::-1])
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), "gauss", 2 * k - 1)


def lobatto_rule(n: int) -> QuadratureRule:
    """Gauss-Lobatto rule with ``n`` nodes on [0, 1], endpoints included.

    Interior nodes are the roots of ``L_{n-1}'``; the degree of exactness is
    ``2n - 3``.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"a Lobatto rule needs at least 2 nodes, got {n!r}")
    n = int(n)
    N = n - 1
    half = (n - 2) // 2
    i = np.arange(1, half + 1)
    guess = np.cos(np.pi * i / N)

    def dlegendre(x):
        p, _, dp = _legendre_and_derivative(N, x)
        d2p = (2.0 * x * dp - N * (N + 1) * p) / (1.0 - x * x)
        return dp, d2p

    pos = _newton_polish(dlegendre, guess, 0.0, 1.0) if half else np.empty(0)
    end_w = 1.0 / (N * (N + 1))
    p, _, _ = _legendre_and_derivative(N, pos)
    wpos = end_w / p**2

    nodes = [np.array([0.0]), 0.5 * (1.0 - pos)]
    weights = [np.array([end_w]), wpos]
    if n % 2:
        p0, _, _ = _legendre_and_derivative(N, np.zeros(1))
        nodes.append(np.array([0.5]))
        weights.append(end_w / p0**2)
    nodes += [0.5 * (1.0 + pos[::-1]), np.array([1.0])]
    weights += [wpos[::-1], np.array([end_w])]
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), "lobatto", 2 * n - 3)


def _check_nodes(nodes: ArrayLike) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size == 0:
        raise ValueError("nodes must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(nodes)) or np.any(nodes < 0.0) or np.any(nodes > 1.0):
        raise ValueError("nodes must lie in [0, 1]")
    if nodes.size > 1 and np.min(np.diff(np.sort(nodes))) <= 0.0:
        raise ValueError("nodes must be distinct")
    return nodes


def lagrange_basis(nodes: ArrayLike, x: ArrayLike) -> np.ndarray:
    """Values ``l_j(x)`` of the Lagrange polynomials on ``nodes``; shape ``(len(x), len(nodes))``."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = nodes.size
    out = np.ones((x.size, k))
    for j in range(k):
        for m in range(k):
            if m != j:
                out[:, j] *= (x - nodes[m]) / (nodes[j] - nodes[m])
    return out


def interpolatory_weights(nodes: ArrayLike) -> np.ndarray:
    """Weights ``int_0^1 l_i(t) dt`` of the interpolatory rule on ``nodes``.

    The Lagrange polynomials have degree ``k - 1`` and are integrated exactly
    with a Gauss rule of ``k // 2 + 1`` points.
    """
    nodes = _check_nodes(nodes)
    g = gauss_rule(nodes.size // 2 + 1)
    return g.weights @ lagrange_basis(nodes, g.nodes)


def measured_exactness(nodes: ArrayLike, weights: ArrayLike, tol: float = 1e-10) -> int:
    """Highest degree ``d`` such that the rule integrates all polynomials of degree ``<= d``.

    Exactness is probed on the orthonormal basis (``int_0^1 P_j = delta_1j``),
    which is far better conditioned than monomials.  Returns ``-1`` if even
    constants fail.
    """
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    top = 2 * nodes.size + 2
    moments = weights @ eval_basis(top, nodes)
    target = np.zeros(top)
    target[0] = 1.0
    scale = np.sqrt(2.0 * np.arange(1, top + 1) - 1.0)
    ok = np.abs(moments - target) <= tol * scale
    fails = np.flatnonzero(~ok)
    return int(fails[0]) - 1 if fails.size else top - 1


def custom_rule(nodes: ArrayLike) -> QuadratureRule:
    """Interpolatory rule on arbitrary distinct nodes, with measured exactness."""
    nodes = np.sort(_check_nodes(nodes))
    weights = interpolatory_weights(nodes)
    return QuadratureRule(nodes, weights, "custom", measured_exactness(nodes, weights))
