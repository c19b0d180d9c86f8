"""Legendre basis layer on the reference interval (-1, 1).

Polynomials are represented by their Legendre coefficient vectors
``c`` with ``p(x) = sum_i c[i] * L_i(x)``. Derivatives are taken in
coefficient space with :func:`diff_matrix`, so every quadratic form
built on top of this module is assembled without quadrature. The
Gauss-Legendre rule is kept as an independent check on that assembly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError

__all__ = [
    "QuadratureRule",
    "ShapeFunctionSet",
    "legendre_values",
    "legendre_eval",
    "diff_matrix",
    "mass_diagonal",
    "gauss_legendre",
    "shape_functions",
]

_DOMAIN_SLACK = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def legendre_values(x, W: int) -> np.ndarray:
    """Evaluate ``L_0(x), ..., L_W(x)`` by the three-term recurrence.

    ``x`` may be a scalar or an array; the result has shape
    ``(W + 1,) + np.shape(x)``.
    """
    if W < 0:
        raise ValueError(f"degree must be non-negative, got {W}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _DOMAIN_SLACK):
        raise ValueError("Legendre evaluation is restricted to [-1, 1]")
    out = np.empty((W + 1,) + x.shape)
    out[0] = 1.0
    if W >= 1:
        out[1] = x
    for n in range(1, W):
        # (n+1) L_{n+1} = (2n+1) x L_n - n L_{n-1}
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def legendre_eval(coeffs, x) -> np.ndarray:
    """Evaluate the polynomial with Legendre coefficients ``coeffs`` at ``x``."""
    coeffs = np.asarray(coeffs, dtype=float)
    vals = legendre_values(x, coeffs.shape[0] - 1)
    return np.tensordot(coeffs, vals, axes=(0, 0))


def diff_matrix(W: int) -> np.ndarray:
    """Matrix ``D`` mapping Legendre coefficients of ``p`` to those of ``p'``.

    Follows from ``L'_{n+1} = L'_{n-1} + (2n + 1) L_n``: column ``j`` has
    ``2i + 1`` in every row ``i < j`` with ``j - i`` odd.
    """
    if W < 0:
        raise ValueError(f"degree must be non-negative, got {W}")
    n = W + 1
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    mask = (j > i) & ((j - i) % 2 == 1)
    return np.where(mask, 2.0 * i + 1.0, 0.0)


def mass_diagonal(W: int) -> np.ndarray:
    """``int L_i^2 = 2 / (2i + 1)`` for ``i = 0..W``."""
    return 2.0 / (2.0 * np.arange(W + 1) + 1.0)


class QuadratureRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        """Apply the rule to function values sampled at ``nodes``."""
        return float(np.dot(self.weights, values))


def gauss_legendre(n: int, tol: float = 1e-15, max_iter: int = 100) -> QuadratureRule:
    """n-point Gauss-Legendre rule on (-1, 1).

    Nodes are found by Newton's method started from Chebyshev-type
    guesses; ``ConvergenceError`` is raised if some node has not settled
    to ``tol`` after ``max_iter`` steps.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        vals = legendre_values(x, n)
        pn, pn1 = vals[n], vals[n - 1]
        dp = n * (x * pn - pn1) / (x * x - 1.0)
        dx = pn / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            break
    else:
        raise ConvergenceError(f"Gauss-Legendre Newton iteration did not converge for n={n}")
    vals = legendre_values(x, n)
    dp = n * (x * vals[n] - vals[n - 1]) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule(_frozen(x[order]), _frozen(w[order]))


@dataclass(frozen=True)
class ShapeFunctionSet:
    """Hierarchic shape functions ``V_1, ..., V_{W+1}`` in Legendre coefficients.

    ``functions[0]`` is ``V_1`` (vanishes at +1), ``functions[1]`` is
    ``V_2`` (vanishes at -1); the remaining ``W - 1`` bubbles vanish at
    both endpoints.
    """

    W: int
    functions: tuple

    def __getitem__(self, i: int) -> np.ndarray:
        """1-based access, ``sfs[3]`` is ``V_3``."""
        if not 1 <= i <= self.W + 1:
            raise IndexError(f"shape function index {i} out of range 1..{self.W + 1}")
        return self.functions[i - 1]

    def matrix(self, first: int = 1) -> np.ndarray:
        """Columns are the coefficient vectors of ``V_first .. V_{W+1}``."""
        return np.column_stack(self.functions[first - 1:])

    def bubbles(self) -> np.ndarray:
        return self.matrix(3)


def shape_functions(W: int) -> ShapeFunctionSet:
    """Integrated-Legendre hierarchic basis of degree ``W >= 2``.

    ``V_1 = (1 - x)/2``, ``V_2 = (1 + x)/2`` and, for ``3 <= i <= W+1``,
    ``V_i = (L_{i-1} - L_{i-3}) / (2 sqrt(2i - 3))``.
    """
    if W < 2:
        raise ValueError(f"hierarchic basis needs W >= 2, got {W}")
    n = W + 1
    funcs = []
    v1 = np.zeros(n)
    v1[0], v1[1] = 0.5, -0.5
    v2 = np.zeros(n)
    v2[0], v2[1] = 0.5, 0.5
    funcs += [_frozen(v1), _frozen(v2)]
    for i in range(3, W + 2):
        v = np.zeros(n)
        s = 1.0 / (2.0 * np.sqrt(2.0 * i - 3.0))
        v[i - 1] = s
        v[i - 3] = -s
        funcs.append(_frozen(v))
    return ShapeFunctionSet(W, tuple(funcs))
