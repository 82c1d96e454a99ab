"""Orthonormal shifted Legendre basis on [0, 1].

The basis is ``P_j(t) = sqrt(2j - 1) * L_{j-1}(2t - 1)`` for ``j = 1, 2, ...``,
where ``L_n`` is the classical Legendre polynomial, so that
``int_0^1 P_i P_j dt = delta_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

__all__ = [
    "StructuralMatrices",
    "eval_basis",
    "integrate_basis",
    "structural_matrices",
    "xi",
]


def _check_degree_count(s: int) -> int:
    if int(s) != s or s < 1:
        raise ValueError(f"number of basis functions must be a positive integer, got {s!r}")
    return int(s)


def xi(j: int | np.ndarray) -> float | np.ndarray:
    """Coupling coefficient ``1 / (2 sqrt((2j+1)(2j-1)))`` of the integration relation."""
    j = np.asarray(j, dtype=float)
    out = 1.0 / (2.0 * np.sqrt((2.0 * j + 1.0) * (2.0 * j - 1.0)))
    return float(out) if out.ndim == 0 else out


def eval_basis(s: int, t: ArrayLike) -> np.ndarray:
    """Evaluate ``P_1, ..., P_s`` at ``t``.

    Uses the forward three-term recurrence

        P_{j+2} = (2t-1) (2j+1)/(j+1) sqrt((2j+3)/(2j+1)) P_{j+1}
                  - j/(j+1) sqrt((2j+3)/(2j-1)) P_j.

    Args:
        s: number of basis functions.
        t: scalar or array of evaluation points.

    Returns:
        Array of shape ``np.shape(t) + (s,)``.
    """
    s = _check_degree_count(s)
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("evaluation points must be finite")
    x = 2.0 * t - 1.0
    out = np.empty(t.shape + (s,))
    out[..., 0] = 1.0
    if s > 1:
        out[..., 1] = np.sqrt(3.0) * x
    for j in range(1, s - 1):
        a = (2 * j + 1) / (j + 1) * np.sqrt((2 * j + 3) / (2 * j + 1))
        b = j / (j + 1) * np.sqrt((2 * j + 3) / (2 * j - 1))
        out[..., j + 1] = a * x * out[..., j] - b * out[..., j - 1]
    return out


def integrate_basis(s: int, c: ArrayLike) -> np.ndarray:
    """Return ``int_0^c P_j(x) dx`` for ``j = 1..s``.

    The antiderivatives are exact polynomials:
    ``int_0^c P_1 = c`` and, for ``j >= 2``,
    ``int_0^c P_j = xi_j P_{j+1}(c) - xi_{j-1} P_{j-1}(c)``.

    Raises:
        ValueError: if any ``c`` lies outside ``[0, 1]``.
    """
    s = _check_degree_count(s)
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)) or np.any(c < 0.0) or np.any(c > 1.0):
        raise ValueError("upper integration limit must lie in [0, 1]")
    p = eval_basis(s + 1, c)
    out = np.empty(c.shape + (s,))
    out[..., 0] = c
    for j in range(2, s + 1):
        # 0-based column j-1 holds P_j
        out[..., j - 1] = xi(j) * p[..., j] - xi(j - 1) * p[..., j - 2]
    # the recurrence only cancels to round-off at the lower limit
    out[c == 0.0] = 0.0
    return out


@dataclass(frozen=True)
class StructuralMatrices:
    """The tridiagonal matrices linking the basis to its integrals.

    ``xs`` is ``s x s``, ``xs_hat`` is ``xs`` with the extra row ``xi_s e_s^T``
    appended, and ``xs_tilde`` is ``xs_hat`` padded with a zero column.
    """

    s: int
    xs: np.ndarray
    xs_hat: np.ndarray
    xs_tilde: np.ndarray
    xi: np.ndarray


def structural_matrices(s: int) -> StructuralMatrices:
    s = _check_degree_count(s)
    coeffs = xi(np.arange(1, s + 1))
    coeffs = np.atleast_1d(coeffs)
    tilde = np.zeros((s + 1, s + 1))
    tilde[0, 0] = 0.5
    for j in range(s):
        # sub-diagonal xi_j, super-diagonal -xi_j; the last sub-diagonal entry is xi_s
        tilde[j + 1, j] = coeffs[j]
        if j + 1 < s:
            tilde[j, j + 1] = -coeffs[j]
    hat = tilde[:, :s].copy()
    xs = hat[:s, :].copy()
    for arr in (tilde, hat, xs, coeffs):
        arr.setflags(write=False)
    return StructuralMatrices(s=s, xs=xs, xs_hat=hat, xs_tilde=tilde, xi=coeffs)
