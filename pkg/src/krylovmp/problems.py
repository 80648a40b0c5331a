"""Synthetic test problems: clustered-eigenvalue diagonal matrices, the
normalized all-ones right-hand side, and eigenvalue-truncation
preconditioners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SpdMatrix, cholesky, solve_lower, solve_upper


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of the clustered-spectrum diagonal test family."""

    n: int
    lambda_1: float
    lambda_n: float
    rho: float
    trunc_index: int

    def __post_init__(self):
        if not 0.0 < self.lambda_1 < self.lambda_n:
            raise ValueError("need 0 < lambda_1 < lambda_n")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if not 2 <= self.trunc_index <= self.n:
            raise ValueError("trunc_index must lie in {2, ..., n}")


def _rho_powers(rho: float, n: int) -> np.ndarray:
    """rho**k for k = 0..n-1 by repeated multiplication (deterministic
    across platforms, unlike library pow)."""
    p = np.empty(n)
    p[0] = 1.0
    for k in range(1, n):
        p[k] = p[k - 1] * rho
    return p


def build_matrix(spec: ProblemSpec) -> SpdMatrix:
    """Diagonal matrix with eigenvalues
    lambda_i = lambda_1 + (i-1)/(n-1) * (lambda_n - lambda_1) * rho**(n-i)."""
    n = spec.n
    lam = np.empty(n)
    lam[0] = spec.lambda_1
    lam[n - 1] = spec.lambda_n
    powers = _rho_powers(spec.rho, n)
    span = spec.lambda_n - spec.lambda_1
    for i in range(2, n):  # 1-based index i = 2..n-1
        lam[i - 1] = spec.lambda_1 + (i - 1) / (n - 1) * span * powers[n - i]
    return SpdMatrix.diagonal(lam)


def build_rhs(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.full(n, 1.0 / np.sqrt(n))


def build_preconditioner(spec: ProblemSpec, a: SpdMatrix) -> SpdMatrix:
    """Truncation preconditioner: eigenvalues at 1-based index >= i are
    replaced by lambda_i."""
    if not a.is_diagonal:
        raise ValueError("truncation preconditioner requires a diagonal matrix")
    d = a.diag.copy()
    i = spec.trunc_index
    d[i - 1 :] = d[i - 1]
    return SpdMatrix.diagonal(d)


def reference_solution(a: SpdMatrix, b) -> np.ndarray:
    """High-accuracy solution of A x = b used by the error diagnostics.

    Diagonal: componentwise division (error <= u per component).  Dense:
    Cholesky solve plus one refinement step with a compensated residual.
    """
    b = np.asarray(b, dtype=np.float64)
    if a.is_diagonal:
        return b / a.diag
    l = cholesky(a)
    x = solve_upper(l, solve_lower(l, b))
    r = _compensated_residual(a, x, b)
    dx = solve_upper(l, solve_lower(l, r))
    return x + dx


def _compensated_residual(a: SpdMatrix, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """b - A x with Neumaier (two-sum) accumulation per row."""
    dense = a.to_dense()
    n = dense.shape[0]
    r = np.empty(n)
    for i in range(n):
        s = b[i]
        comp = 0.0
        for j in range(n):
            term = -dense[i, j] * x[j]
            t = s + term
            if abs(s) >= abs(term):
                comp += (s - t) + term
            else:
                comp += (term - t) + s
            s = t
        r[i] = s + comp
    return r
