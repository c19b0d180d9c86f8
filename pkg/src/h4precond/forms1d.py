"""One-dimensional quadratic forms and their generalized eigenbases.

``E(v) = int (v'''')^2 + (v''')^2 + (v'')^2 + (v')^2`` and
``F(v) = int v^2`` on (-1, 1), either in the full Legendre basis
(size W+1) or on the span of the interior bubbles ``V_3..V_{W+1}``
(size W-1).  The pencil ``(E, F)`` is diagonalized by Cholesky
reduction followed by Jacobi rotations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .jacobi import jacobi_eigh
from .legendre import diff_matrix, mass_diagonal, shape_functions

__all__ = [
    "QuadraticFormPair1D",
    "SeparableEigenbasis",
    "build_F",
    "build_E",
    "gram_matrix",
    "build_forms",
    "build_constrained_forms",
    "gen_sym_eig",
    "full_eigenbasis",
    "reflection_coefficients",
]

log = logging.getLogger(__name__)

FULL = "full-legendre"
INTERIOR = "hierarchic-interior"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def build_F(W: int) -> np.ndarray:
    """Legendre mass matrix ``diag(2/(2i+1))``."""
    if W < 0:
        raise ValueError(f"degree must be non-negative, got {W}")
    return np.diag(mass_diagonal(W))


def gram_matrix(W: int, k: int) -> np.ndarray:
    """``G[i, j] = int L_i^(k) L_j^(k)``, exact in coefficient space."""
    if not 0 <= k <= 4:
        raise ValueError(f"derivative order must be in 0..4, got {k}")
    Dk = np.linalg.matrix_power(diff_matrix(W), k)
    G = Dk.T @ (mass_diagonal(W)[:, None] * Dk)
    return 0.5 * (G + G.T)


def build_E(W: int) -> np.ndarray:
    """Derivative form ``sum_{k=1..4} (D^k)^T M D^k`` in the Legendre basis."""
    return sum(gram_matrix(W, k) for k in range(1, 5))


@dataclass(frozen=True)
class QuadraticFormPair1D:
    E: np.ndarray
    F: np.ndarray
    basis: str = FULL

    @property
    def size(self) -> int:
        return self.E.shape[0]


@dataclass(frozen=True)
class SeparableEigenbasis:
    """Solution of ``(E - mu F) b = 0``.

    Attributes
    ----------
    mu : ascending eigenvalues.
    P : columns are F-orthonormal eigenvectors ``b_i`` (coefficients of
        ``phi_i`` in the basis the pair was assembled in).
    Pinv : inverse of ``P``; row ``i`` expresses basis function ``i`` in
        the eigenfunctions.
    """

    mu: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    basis: str = FULL

    @property
    def size(self) -> int:
        return self.mu.shape[0]


def build_forms(W: int) -> QuadraticFormPair1D:
    return QuadraticFormPair1D(_frozen(build_E(W)), _frozen(build_F(W)), FULL)


def build_constrained_forms(W: int) -> QuadraticFormPair1D:
    """``(T^T E T, T^T F T)`` with ``T`` the bubble coefficients ``V_3..V_{W+1}``."""
    if W < 2:
        raise ValueError(f"constrained forms need W >= 2, got {W}")
    T = shape_functions(W).bubbles()
    E = T.T @ build_E(W) @ T
    F = T.T @ build_F(W) @ T
    return QuadraticFormPair1D(
        _frozen(0.5 * (E + E.T)), _frozen(0.5 * (F + F.T)), INTERIOR
    )


def _fix_signs(P: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[idx, np.arange(P.shape[1])])
    signs[signs == 0] = 1.0
    return P * signs


def gen_sym_eig(pair: QuadraticFormPair1D, max_sweeps: int = 50) -> SeparableEigenbasis:
    """F-orthonormal eigenbasis of the symmetric pencil ``(E, F)``.

    Raises
    ------
    NumericalError
        If ``F`` is not positive definite.
    ConvergenceError
        If the Jacobi iteration does not converge in ``max_sweeps``.
    """
    E = np.asarray(pair.E, dtype=float)
    F = np.asarray(pair.F, dtype=float)
    try:
        L = np.linalg.cholesky(F)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("mass matrix is not positive definite") from exc
    X = sla.solve_triangular(L, E, lower=True)
    At = sla.solve_triangular(L, X.T, lower=True)
    mu, Y = jacobi_eigh(0.5 * (At + At.T), max_sweeps=max_sweeps)
    P = _fix_signs(sla.solve_triangular(L.T, Y, lower=False))

    lu = sla.lu_factor(P)
    Pinv = sla.lu_solve(lu, np.eye(P.shape[0]))
    cond = np.linalg.cond(P)
    if cond > 1e8:
        log.warning("eigenvector matrix is ill-conditioned (cond ~ %.2e)", cond)
    return SeparableEigenbasis(_frozen(mu), _frozen(P), _frozen(Pinv), pair.basis)


def full_eigenbasis(W: int) -> SeparableEigenbasis:
    return gen_sym_eig(build_forms(W))


def reflection_coefficients() -> np.ndarray:
    """Solve ``sum_{l=1..5} (-l)^k a_l = 1`` for ``k = 0..4``.

    These weights make the reflected extension
    ``u(1 + t) = sum_l a_l u(1 - l t)`` match ``u`` and its first four
    derivatives at the reflection line.
    """
    nodes = -np.arange(1.0, 6.0)
    V = np.vander(nodes, 5, increasing=True).T
    return np.linalg.solve(V, np.ones(5))
