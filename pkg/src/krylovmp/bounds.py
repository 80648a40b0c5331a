"""Evaluators for the theoretical error-bound quantities: condition
numbers of preconditioned operators, the preconditioner-application
error terms in their Cholesky closed forms, the assumption inequality,
and the backward/forward bound right-hand sides used as plot overlays.

All asymptotic constants are set to 1.  Two bound variants exist:
"plot", which drops the dimension and iteration-count factors the way
the reference plots do, and "strict", which keeps the n*k^2 factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    LowerTriangular,
    NotPositiveDefinite,
    SpdMatrix,
    eigvals_spd,
    eigvals_sym_jacobi,
)


@dataclass(frozen=True)
class BoundInputs:
    """Scalar inputs to the bound evaluators.

    The per-application roundoffs (u_s, u_q, u_z) are stored raw; the
    case-table aggregates (u1, m1, u2, m2) are derived per mode by
    :func:`case_table`.
    """

    n: int
    u: float  # working unit roundoff
    u_s: float
    u_q: float
    u_z: float
    kappa_A: float
    kappa_Minv: float
    kappa_precond: float  # kappa(M_L^-1 A M_R^-1)
    norm_A: float
    norm_Minv: float
    norm_xref: float
    max_xratio: float = 1.0  # max_j ||x_j|| / ||x_ref||, floored at 1

    def __post_init__(self):
        if min(self.kappa_A, self.kappa_Minv, self.kappa_precond) < 1.0:
            raise ValueError("condition numbers must be >= 1")
        if self.max_xratio < 1.0:
            raise ValueError("max_xratio is floored at 1")


@dataclass(frozen=True)
class BoundReport:
    """Per-iteration bound right-hand sides for overlay plotting."""

    backward_bound: np.ndarray
    forward_bound: np.ndarray
    assumption_lhs: np.ndarray
    epsilon_sz: float
    epsilon_sq: float
    assumption_satisfied_up_to_k: int  # -1 if violated from the start


def case_table(mode: str, u_s: float, u_q: float, u_z: float):
    """(u1, m1, u2, m2) aggregates for the Cholesky preconditioning
    case distinctions."""
    if mode == "left":
        return u_s, 1.5, u_s, 1.5
    if mode == "right":
        return u_z, 1.5, u_q + u_z, 1.5
    if mode == "split":
        return u_s + u_z, 0.5, u_s + u_q + u_z, 1.0
    if mode == "none":
        return 0.0, 1.5, 0.0, 1.5
    raise ValueError(f"unknown mode {mode!r}")


def kappa_preconditioned(a: SpdMatrix, m: SpdMatrix) -> float:
    """kappa(M_L^-1 A M_R^-1), equal to kappa(A^{1/2} M^-1 A^{1/2}) for
    every Cholesky-based scheme by similarity."""
    if a.is_diagonal and m.is_diagonal:
        ratio = a.diag / m.diag
        lo, hi = float(np.min(ratio)), float(np.max(ratio))
        if lo <= 0:
            raise NotPositiveDefinite("nonpositive generalized eigenvalue")
        return hi / lo
    ev_a = eigvals_spd(a)
    if ev_a[0] <= 0:
        raise NotPositiveDefinite("A is not positive definite")
    a_half = _spd_sqrt(a)
    m_inv = np.linalg.inv(m.to_dense())
    sym = a_half @ m_inv @ a_half
    ev = eigvals_sym_jacobi(0.5 * (sym + sym.T))
    if ev[0] <= 0:
        raise NotPositiveDefinite("preconditioned operator not positive definite")
    return float(ev[-1] / ev[0])


def _spd_sqrt(a: SpdMatrix) -> np.ndarray:
    if a.is_diagonal:
        return np.diag(np.sqrt(a.diag))
    w, v = np.linalg.eigh(a.to_dense())
    if w[0] <= 0:
        raise NotPositiveDefinite("matrix not positive definite")
    return (v * np.sqrt(w)) @ v.T


def kappa_split_factor(a: SpdMatrix, l: LowerTriangular) -> float:
    """kappa(L^-1 A L^-T) computed directly from the similar symmetric
    product, for cross-checking against :func:`kappa_preconditioned`."""
    ld = l.to_dense()
    linv = np.linalg.inv(ld)
    sym = linv @ a.to_dense() @ linv.T
    ev = eigvals_sym_jacobi(0.5 * (sym + sym.T))
    if ev[0] <= 0:
        raise NotPositiveDefinite("preconditioned operator not positive definite")
    return float(ev[-1] / ev[0])


def epsilon_pre_terms(inputs: BoundInputs, mode: str) -> tuple[float, float]:
    """Closed-form (epsilon_sz, epsilon_sq) for Cholesky left/right/
    split preconditioning, with O(.) constants set to 1."""
    n = inputs.n
    kappa = inputs.kappa_Minv
    if mode == "left":
        v = n * inputs.u_s * kappa**1.5
        return v, v
    if mode == "right":
        return n * inputs.u_z * kappa**1.5, n * inputs.u_q * kappa**1.5
    if mode == "split":
        return (
            n * (inputs.u_s + inputs.u_z) * kappa**0.5,
            n * (inputs.u_s + inputs.u_q) * kappa,
        )
    if mode == "none":
        return 0.0, 0.0
    raise ValueError(f"unknown mode {mode!r}")


def assumption_lhs(inputs: BoundInputs, mode: str, k: int) -> float:
    """Left-hand side of the precision-selection assumption inequality
    at iteration k (constants 1); +inf if 1 - n*u*kappa(A) <= 0."""
    n, u = inputs.n, inputs.u
    denom = 1.0 - n * u * inputs.kappa_A
    if denom <= 0.0:
        return np.inf
    _, _, u2, m2 = case_table(mode, inputs.u_s, inputs.u_q, inputs.u_z)
    term1 = n * (k + 1) * u * inputs.kappa_A / denom
    term2 = n * (k + 1) * u2 * inputs.kappa_Minv**m2
    term3 = k * (k + 1) * u * inputs.kappa_Minv**0.5 * inputs.kappa_precond**0.5
    return term1 + term2 + term3


def backward_bound(inputs: BoundInputs, k: int, variant: str = "plot") -> float:
    """Right-hand side of the backward-error bound on
    ||b - A x_i|| / (||A|| ||x||)."""
    base = inputs.u * inputs.kappa_Minv**0.5 * inputs.max_xratio
    if variant == "strict":
        return inputs.n * k**2 * base
    if variant == "plot":
        return base
    raise ValueError(f"unknown bound variant {variant!r}")


def forward_bound(inputs: BoundInputs, k: int, variant: str = "plot") -> float:
    """Forward A-norm bound; exactly kappa(A)^{1/2} times the backward
    bound."""
    return backward_bound(inputs, k, variant) * inputs.kappa_A**0.5


def residual_gap_bound(inputs: BoundInputs, k: int, max_x_abs: float, c: float = 1.0) -> float:
    """C * n * k * u * ||A|| * max_j(||x_j||, ||x||)."""
    return c * inputs.n * k * inputs.u * inputs.norm_A * max_x_abs


def bound_report(
    inputs: BoundInputs, mode: str, num_iters: int, variant: str = "plot"
) -> BoundReport:
    ks = np.arange(num_iters + 1)
    backward = np.array([backward_bound(inputs, int(k), variant) for k in ks])
    forward = backward * inputs.kappa_A**0.5
    assumption = np.array([assumption_lhs(inputs, mode, int(k)) for k in ks])
    eps_sz, eps_sq = epsilon_pre_terms(inputs, mode)
    ok = np.flatnonzero(assumption > 0.5)
    up_to = int(ok[0]) - 1 if ok.size else num_iters
    return BoundReport(
        backward_bound=backward,
        forward_bound=forward,
        assumption_lhs=assumption,
        epsilon_sz=eps_sz,
        epsilon_sq=eps_sq,
        assumption_satisfied_up_to_k=up_to,
    )
