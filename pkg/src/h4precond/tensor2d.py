"""Tensor-product forms on the reference square (-1, 1)^2.

A tensor coefficient array ``X`` of shape ``(W+1, W+1)`` holds the
coefficient of ``L_i(xi) L_j(eta)`` at ``X[i, j]``.  Flattening is
row-major (second index fastest), so ``kron(A, B) @ X.ravel()`` equals
``(A @ X @ B.T).ravel()``; every Kronecker formula below relies on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .forms1d import (
    SeparableEigenbasis,
    build_constrained_forms,
    build_E,
    build_F,
    full_eigenbasis,
    gen_sym_eig,
    gram_matrix,
)
from .legendre import diff_matrix, mass_diagonal, shape_functions

__all__ = [
    "B_TERMS",
    "SeparablePreconditioner",
    "ConstrainedBlockSystem",
    "gram_matrix",
    "gram_set",
    "build_B",
    "apply_B",
    "build_C_dense",
    "build_preconditioner",
    "psi_grams",
    "apply_C",
    "apply_C_inverse",
    "assemble_constrained_system",
    "schur_solve",
]

# multi-indices (a, b) of d^a/dxi^a d^b/deta^b entering the H4 norm
B_TERMS = tuple((a, b) for a in range(5) for b in range(5) if a + b <= 4)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def gram_set(W: int) -> list:
    """``[G^(0), ..., G^(4)]``."""
    return [gram_matrix(W, k) for k in range(5)]


def build_B(W: int) -> np.ndarray:
    """Gram matrix of the full H4 inner product, ``sum kron(G^a, G^b)``."""
    G = gram_set(W)
    B = sum(np.kron(G[a], G[b]) for a, b in B_TERMS)
    return 0.5 * (B + B.T)


def apply_B(grams, X: np.ndarray) -> np.ndarray:
    """Matrix-free ``B`` apply on a coefficient array, O(W^3)."""
    return sum(grams[a] @ X @ grams[b] for a, b in B_TERMS)


def build_C_dense(W: int) -> np.ndarray:
    """``E (x) F + F (x) E + F (x) F``: the separable surrogate of ``B``."""
    E, F = build_E(W), build_F(W)
    return np.kron(E, F) + np.kron(F, E) + np.kron(F, F)


@dataclass(frozen=True)
class SeparablePreconditioner:
    """Diagonalized separable form; ``mu2d[i, j] = mu_i + mu_j + 1``."""

    basis: SeparableEigenbasis
    mu2d: np.ndarray

    @property
    def W(self) -> int:
        return self.basis.size - 1

    @property
    def shape(self) -> tuple:
        return self.mu2d.shape


def build_preconditioner(W: int) -> SeparablePreconditioner:
    basis = full_eigenbasis(W)
    mu = basis.mu
    return SeparablePreconditioner(basis, _frozen(mu[:, None] + mu[None, :] + 1.0))


def psi_grams(pre: SeparablePreconditioner) -> list:
    """Gram matrices ``H^k = P^T G^(k) P`` in the eigenfunction basis.

    Formed as ``K^T K`` with ``K = M^{1/2} D^k P`` rather than by
    sandwiching ``G^(k)``, which keeps entries coupling the smooth
    eigenfunctions accurate when ``G^(4)`` is of order ``1e18``.
    """
    W = pre.W
    P = np.asarray(pre.basis.P)
    D = diff_matrix(W)
    root_m = np.sqrt(mass_diagonal(W))[:, None]
    out = []
    Y = P
    for _ in range(5):
        K = root_m * Y
        H = K.T @ K
        out.append(0.5 * (H + H.T))
        Y = D @ Y
    return out


def _check_shape(pre: SeparablePreconditioner, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = pre.basis.size
    if X.shape == (n * n,):
        X = X.reshape(n, n)
    if X.shape != (n, n):
        raise ValueError(f"expected coefficients of shape {(n, n)}, got {X.shape}")
    return X


def apply_C(pre: SeparablePreconditioner, beta) -> np.ndarray:
    """Fast ``C @ beta`` via ``C = (P^-T (x) P^-T) diag(mu2d) (P^-1 (x) P^-1)``."""
    X = _check_shape(pre, beta)
    Pinv = pre.basis.Pinv
    return Pinv.T @ ((Pinv @ X @ Pinv.T) * pre.mu2d) @ Pinv


def apply_C_inverse(pre: SeparablePreconditioner, rho, rhs: str = "load") -> np.ndarray:
    """Solve ``C beta = rho`` in O(W^3) by fast diagonalization.

    With ``rhs="load"`` (default) ``rho`` is a load vector, i.e. the
    right-hand side of the linear system, and the result is exactly
    ``C^{-1} rho``: ``beta = P ((P^T rho P) / mu2d) P^T``.

    With ``rhs="polynomial"`` ``rho`` holds the Legendre coefficients of
    a polynomial ``r``; it is rewritten in the eigenfunctions with
    ``Pinv``, divided by ``mu2d`` and mapped back with ``P``.  This
    solves ``C beta = (M (x) M) rho`` where ``M`` is the 1D mass matrix.
    """
    R = _check_shape(pre, rho)
    P = pre.basis.P
    if rhs == "load":
        Rt = P.T @ R @ P
    elif rhs == "polynomial":
        Pinv = pre.basis.Pinv
        Rt = Pinv @ R @ Pinv.T
    else:
        raise ValueError(f"unknown rhs kind {rhs!r}")
    return P @ (Rt / pre.mu2d) @ P.T


@dataclass(frozen=True, eq=False)
class ConstrainedBlockSystem:
    """Matrix of the separable form on polynomials vanishing at the vertices.

    Unknowns are ordered as interior products ``P_ij = h_i(xi) h_j(eta)``
    (row-major in ``(i, j)``, ``3 <= i, j <= W+1``) followed by the edge
    functions ``R``: ``h_i V_1``, ``h_i V_2``, ``V_1 h_j``, ``V_2 h_j``.

    Attributes
    ----------
    nu : eigenvalues of the interior pencil, ascending.
    h : Legendre coefficients of ``h_3..h_{W+1}`` as columns.
    pp : diagonal of the interior block.
    pr, rr : interior/edge coupling and edge blocks.
    """

    W: int
    nu: np.ndarray
    h: np.ndarray
    pp: np.ndarray
    pr: np.ndarray
    rr: np.ndarray
    pp_offdiag: float
    _schur: tuple = field(repr=False)

    @property
    def n_interior(self) -> int:
        return self.pp.shape[0]

    @property
    def n_edge(self) -> int:
        return self.rr.shape[0]

    @cached_property
    def S(self) -> np.ndarray:
        S = self.rr - self.pr.T @ (self.pr / self.pp[:, None])
        return 0.5 * (S + S.T)

    def full_matrix(self) -> np.ndarray:
        return np.block([[np.diag(self.pp), self.pr], [self.pr.T, self.rr]])

    def apply(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        o, q = p[: self.n_interior], p[self.n_interior:]
        return np.concatenate([self.pp * o + self.pr @ q, self.pr.T @ o + self.rr @ q])

    def basis_1d(self) -> np.ndarray:
        """Columns ``[V_1, V_2, h_3, ..., h_{W+1}]`` in Legendre coefficients."""
        sf = shape_functions(self.W)
        return np.column_stack([sf[1], sf[2], self.h])

    def basis_coeffs(self) -> np.ndarray:
        """Tensor Legendre coefficients (flattened) of every unknown, as columns."""
        Y = self.basis_1d()
        cols = [np.kron(Y[:, a], Y[:, b]) for a, b in _index_pairs(self.W)]
        return np.column_stack(cols)


def _index_pairs(W: int) -> list:
    # positions in basis_1d(): 0 -> V_1, 1 -> V_2, k >= 2 -> h_{k+1}
    m = W - 1
    interior = [(2 + i, 2 + j) for i in range(m) for j in range(m)]
    edges = (
        [(2 + i, 0) for i in range(m)]
        + [(2 + i, 1) for i in range(m)]
        + [(0, 2 + j) for j in range(m)]
        + [(1, 2 + j) for j in range(m)]
    )
    return interior + edges


def assemble_constrained_system(W: int) -> ConstrainedBlockSystem:
    """Assemble and Schur-factor the vertex-constrained separable system.

    Entries are exact in coefficient space: for products
    ``f = a(xi) b(eta)`` and ``g = c(xi) d(eta)`` the form equals
    ``E(a,c) F(b,d) + F(a,c) E(b,d) + F(a,c) F(b,d)``.
    """
    if W < 4:
        raise ValueError(f"the constrained system needs W >= 4, got {W}")
    eig = gen_sym_eig(build_constrained_forms(W))
    sf = shape_functions(W)
    h = sf.bubbles() @ eig.P
    Y = np.column_stack([sf[1], sf[2], h])
    E1 = Y.T @ build_E(W) @ Y
    F1 = Y.T @ build_F(W) @ Y
    E1, F1 = 0.5 * (E1 + E1.T), 0.5 * (F1 + F1.T)

    pairs = _index_pairs(W)
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    A = (
        E1[np.ix_(a, a)] * F1[np.ix_(b, b)]
        + F1[np.ix_(a, a)] * E1[np.ix_(b, b)]
        + F1[np.ix_(a, a)] * F1[np.ix_(b, b)]
    )
    A = 0.5 * (A + A.T)
    ni = (W - 1) ** 2
    App = A[:ni, :ni]
    pp = np.diag(App).copy()
    off = App - np.diag(pp)
    pp_offdiag = float(np.max(np.abs(off)) / np.max(np.abs(pp))) if ni > 1 else 0.0
    pr = A[:ni, ni:]
    rr = A[ni:, ni:]
    S = rr - pr.T @ (pr / pp[:, None])
    try:
        factor = sla.cho_factor(0.5 * (S + S.T), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Schur complement is not positive definite") from exc
    return ConstrainedBlockSystem(
        W=W,
        nu=_frozen(eig.mu),
        h=_frozen(h),
        pp=_frozen(pp),
        pr=_frozen(pr),
        rr=_frozen(rr),
        pp_offdiag=pp_offdiag,
        _schur=factor,
    )


def schur_solve(sys: ConstrainedBlockSystem, z) -> np.ndarray:
    """Solve ``A p = z`` via the edge Schur complement.

    ``q`` solves ``S q = y - A_PR^T A_PP^{-1} x`` and then
    ``o = A_PP^{-1} (x - A_PR q)``; returns ``p = [o, q]``.
    """
    z = np.asarray(z, dtype=float)
    ni, ne = sys.n_interior, sys.n_edge
    if z.shape != (ni + ne,):
        raise ValueError(f"right-hand side must have length {ni + ne}, got {z.shape}")
    x, y = z[:ni], z[ni:]
    q = sla.cho_solve(sys._schur, y - sys.pr.T @ (x / sys.pp))
    o = (x - sys.pr @ q) / sys.pp
    return np.concatenate([o, q])
