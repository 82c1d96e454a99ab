"""Butcher tableaux of HBVM(k, s) and of the underlying collocation methods."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike

from .errors import PreconditionError
from .legendre import eval_basis, integrate_basis, structural_matrices
from .quadrature import (
    QuadratureRule,
    custom_rule,
    gauss_rule,
    lagrange_basis,
    lobatto_rule,
)

__all__ = [
    "HbvmTableau",
    "CollocationTableau",
    "build_hbvm",
    "build_collocation",
    "nonzero_spectrum",
    "sorted_eigenvalues",
    "w_transformation_check",
    "WTransformCheck",
    "simplifying_assumption_residuals",
    "SimplifyingResiduals",
    "tableau_to_json",
    "tableau_from_json",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HbvmTableau:
    """Runge-Kutta form ``A = I_mat P_mat^T diag(omega)`` of HBVM(k, s).

    ``k`` counts steps; Lobatto tableaux carry ``k + 1`` abscissae, so the
    matrices have ``n = len(rule)`` rows.
    """

    k: int
    s: int
    rule: QuadratureRule
    A: np.ndarray
    I_mat: np.ndarray
    P_mat: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def omega(self) -> np.ndarray:
        return self.rule.weights

    @property
    def family(self) -> str:
        return self.rule.family

    @property
    def n_stages(self) -> int:
        return len(self.rule)

    def __repr__(self) -> str:
        return f"HbvmTableau(k={self.k}, s={self.s}, family={self.family!r}, n_stages={self.n_stages})"


@dataclass(frozen=True)
class CollocationTableau:
    """Collocation method on given nodes: ``A_colloc[i, j] = int_0^{tau_i} l_j``."""

    nodes: np.ndarray
    A_colloc: np.ndarray
    weights: np.ndarray


def _make_rule(k: int, family: str, nodes: Optional[ArrayLike]) -> QuadratureRule:
    if family == "gauss":
        return gauss_rule(k)
    if family == "lobatto":
        return lobatto_rule(k + 1)
    if family == "custom":
        if nodes is None:
            raise ValueError("custom family requires explicit nodes")
        rule = custom_rule(nodes)
        if len(rule) != k:
            raise ValueError(f"custom family expects k = {len(rule)} nodes, got k = {k}")
        return rule
    raise ValueError(f"unknown node family {family!r}")


def build_hbvm(
    k: int,
    s: int,
    family: str = "gauss",
    nodes: Optional[ArrayLike] = None,
    *,
    require_b2s: bool = True,
) -> HbvmTableau:
    """Assemble the HBVM(k, s) tableau.

    Args:
        k: number of steps; ``k >= s``.
        s: degree of the polynomial sigma (the method has order ``2s``).
        family: ``"gauss"`` (k Gauss nodes), ``"lobatto"`` (k + 1 Lobatto
            nodes) or ``"custom"`` (the given ``nodes``, ``len(nodes) == k``,
            with interpolatory weights).
        nodes: abscissae for the custom family.
        require_b2s: reject rules that are not exact up to degree ``2s - 1``.
            Disabling this is only meant for studying defective tableaux.

    Raises:
        ValueError: invalid ``k``, ``s`` or family.
        PreconditionError: the quadrature does not satisfy B(2s).
    """
    for name, val in (("k", k), ("s", s)):
        if int(val) != val or val < 1:
            raise ValueError(f"{name} must be a positive integer, got {val!r}")
    k, s = int(k), int(s)
    if k < s:
        raise ValueError(f"k must be >= s (got k={k}, s={s})")
    rule = _make_rule(k, family, nodes)
    if require_b2s and not rule.satisfies_b(2 * s):
        raise PreconditionError(
            f"quadrature has degree of exactness {rule.exactness_degree}, "
            f"but B({2 * s}) needs at least {2 * s - 1}"
        )
    I_mat = integrate_basis(s, rule.nodes)
    P_mat = eval_basis(s, rule.nodes)
    A = I_mat @ (P_mat.T * rule.weights)
    return HbvmTableau(k, s, rule, _readonly(A), _readonly(I_mat), _readonly(P_mat))


def build_collocation(nodes: ArrayLike) -> CollocationTableau:
    """Collocation tableau on distinct ``nodes``.

    Entries ``int_0^{tau_i} l_j`` are integrated exactly by a Gauss rule
    mapped onto ``[0, tau_i]``.
    """
    rule = custom_rule(nodes)
    tau = np.asarray(nodes, dtype=float)
    if not np.array_equal(np.sort(tau), tau):
        raise ValueError("collocation nodes must be sorted ascending")
    g = gauss_rule(tau.size // 2 + 1)
    A = np.empty((tau.size, tau.size))
    for i, ti in enumerate(tau):
        A[i] = ti * (g.weights @ lagrange_basis(tau, ti * g.nodes))
    return CollocationTableau(_readonly(tau), _readonly(A), _readonly(rule.weights))


def sorted_eigenvalues(values: ArrayLike) -> np.ndarray:
    """Sort complex numbers lexicographically by (real, imaginary)."""
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def nonzero_spectrum(t: HbvmTableau, rel_tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues of ``t.A`` with modulus above ``rel_tol`` times the spectral radius."""
    ev = np.linalg.eigvals(t.A)
    if not np.all(np.isfinite(ev)):
        raise RuntimeError("eigenvalue computation failed")
    keep = np.abs(ev) > rel_tol * np.max(np.abs(ev))
    return sorted_eigenvalues(ev[keep])


class WTransformCheck(NamedTuple):
    residual: float
    condition: float
    ill_conditioned: bool


def w_transformation_check(t: HbvmTableau) -> WTransformCheck:
    """Max-entry residual of ``P^{-1} A P = blockdiag(X~_s, 0)``.

    ``P`` is the full square basis matrix (degrees ``1..n``) at the tableau
    abscissae.  When ``n == s`` the target is truncated to ``X_s``.
    """
    n, s = t.n_stages, t.s
    P = eval_basis(n, t.nodes)
    cond = float(np.linalg.cond(P))
    transformed = np.linalg.solve(P, t.A @ P)
    target = np.zeros((max(n, s + 1), max(n, s + 1)))
    target[: s + 1, : s + 1] = structural_matrices(s).xs_tilde
    target = target[:n, :n]
    residual = float(np.max(np.abs(transformed - target)))
    return WTransformCheck(residual, cond, cond > 1e12)


class SimplifyingResiduals(NamedTuple):
    c_s: float
    b_2s: float
    d_sm1: float


def simplifying_assumption_residuals(t: HbvmTableau) -> SimplifyingResiduals:
    """Residuals of the simplifying assumptions C(s), B(2s) and D(s-1).

    D(s-1) is checked in the form ``P I^T Omega V Q = e ebar^T - D V`` with
    ``V = (tau_i^(j-1))``, ``Q = diag(1..s-1)`` and ``D = diag(tau)``.
    """
    tau = t.nodes
    omega = t.omega
    s = t.s
    j = np.arange(1, s + 1)
    c_res = np.max(np.abs(t.A @ (j * tau[:, None] ** (j - 1)) - tau[:, None] ** j))
    d = np.arange(2 * s)
    b_res = np.max(np.abs(omega @ tau[:, None] ** d - 1.0 / (d + 1)))
    if s > 1:
        V = tau[:, None] ** np.arange(s - 1)
        Q = np.diag(np.arange(1.0, s))
        lhs = t.P_mat @ t.I_mat.T @ (omega[:, None] * V) @ Q
        rhs = np.ones((tau.size, s - 1)) - tau[:, None] * V
        d_res = np.max(np.abs(lhs - rhs))
    else:
        d_res = 0.0
    return SimplifyingResiduals(float(c_res), float(b_res), float(d_res))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def tableau_to_json(t: HbvmTableau) -> str:
    """Serialize to JSON with fields k, s, family, nodes, weights, A (17 significant digits)."""
    row = lambda v: "[" + ", ".join(_fmt(x) for x in v) + "]"  # noqa: E731
    parts = [
        f'"k": {t.k}',
        f'"s": {t.s}',
        f'"family": {json.dumps(t.family)}',
        f'"nodes": {row(t.nodes)}',
        f'"weights": {row(t.omega)}',
        '"A": [' + ", ".join(row(r) for r in t.A) + "]",
    ]
    return "{" + ", ".join(parts) + "}"


def tableau_from_json(text: str) -> HbvmTableau:
    """Rebuild a tableau from :func:`tableau_to_json` output (recomputed from k, s, family, nodes)."""
    data = json.loads(text)
    family = data["family"]
    nodes = data["nodes"] if family == "custom" else None
    return build_hbvm(data["k"], data["s"], family, nodes)
