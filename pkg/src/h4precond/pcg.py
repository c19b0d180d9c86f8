"""Preconditioned conjugate gradients and the manufactured B-system demo."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .forms1d import gram_matrix
from .tensor2d import apply_B, apply_C_inverse, build_preconditioner

__all__ = ["PcgTrace", "pcg_solve", "PcgDemo", "pcg_demo", "iteration_bound"]


@dataclass(frozen=True)
class PcgTrace:
    iterations: int
    residual_history: np.ndarray
    converged: bool
    final_relative_residual: float
    energy_error_history: np.ndarray | None = None


def pcg_solve(apply_A, apply_Minv, rhs, tol: float = 1e-10, max_iters: int = 500, x_true=None):
    """Solve ``A x = rhs`` by PCG from a zero initial guess.

    Stops when ``sqrt(r^T M^{-1} r)`` has dropped by ``tol`` relative to
    its initial value.  ``residual_history[k]`` is that norm after ``k``
    iterations.  If ``x_true`` is given, the A-norm of the error is
    recorded as well.

    Raises
    ------
    NumericalError
        On non-finite or non-positive curvature, which means ``A`` or
        ``M^{-1}`` is not positive definite.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(rhs, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_Minv(r)
    rz = float(r @ z)
    if not np.isfinite(rz) or rz < 0:
        raise NumericalError("preconditioner is not positive definite")
    r0 = math.sqrt(rz)
    history = [r0]
    energy = None
    if x_true is not None:
        x_true = np.asarray(x_true, dtype=float)
        e = x_true - x
        energy = [math.sqrt(max(float(e @ apply_A(e)), 0.0))]
    if r0 == 0.0:
        return x, PcgTrace(0, np.array(history), True, 0.0, None if energy is None else np.array(energy))

    p = z.copy()
    converged = False
    it = 0
    while it < max_iters:
        Ap = apply_A(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0:
            raise NumericalError(f"non-positive curvature at iteration {it}")
        a = rz / pAp
        x += a * p
        r -= a * Ap
        z = apply_Minv(r)
        rz_new = float(r @ z)
        if not np.isfinite(rz_new):
            raise NumericalError(f"non-finite residual at iteration {it}")
        it += 1
        history.append(math.sqrt(abs(rz_new)))
        if energy is not None:
            e = x_true - x
            energy.append(math.sqrt(max(float(e @ apply_A(e)), 0.0)))
        if history[-1] <= tol * r0:
            converged = True
            break
        p = z + (rz_new / rz) * p
        rz = rz_new

    trace = PcgTrace(
        iterations=it,
        residual_history=np.array(history),
        converged=converged,
        final_relative_residual=history[-1] / r0,
        energy_error_history=None if energy is None else np.array(energy),
    )
    return x, trace


def iteration_bound(kappa: float, tol: float) -> int:
    """Classical CG estimate ``ceil(sqrt(kappa)/2 * ln(2/tol)) + 5``."""
    return math.ceil(0.5 * math.sqrt(kappa) * math.log(2.0 / tol)) + 5


@dataclass(frozen=True)
class PcgDemo:
    W: int
    x: np.ndarray
    x_true: np.ndarray
    trace: PcgTrace
    preconditioned: bool

    @property
    def relative_error(self) -> float:
        return float(np.linalg.norm(self.x - self.x_true) / np.linalg.norm(self.x_true))


def pcg_demo(
    W: int,
    tol: float = 1e-10,
    max_iters: int = 500,
    seed: int = 42,
    preconditioned: bool = True,
    pre=None,
) -> PcgDemo:
    """Manufactured solution ``B beta* = rhs`` with random Legendre ``beta*``."""
    n = W + 1
    grams = [gram_matrix(W, k) for k in range(5)]
    rng = np.random.default_rng(seed)
    x_true = rng.standard_normal(n * n)

    def A(v):
        return apply_B(grams, v.reshape(n, n)).ravel()

    if preconditioned:
        pre = build_preconditioner(W) if pre is None else pre

        def Minv(v):
            return apply_C_inverse(pre, v.reshape(n, n)).ravel()
    else:
        def Minv(v):
            return v.copy()

    x, trace = pcg_solve(A, Minv, A(x_true), tol=tol, max_iters=max_iters)
    return PcgDemo(W, x, x_true, trace, preconditioned)
