"""SPD operators, Cholesky factors, and format-parameterized solves.

Matrices are either diagonal (stored as their eigenvalue vector) or
dense symmetric.  All working-precision kernels use a fixed sequential
left-to-right accumulation order, so identical inputs give bitwise
identical results across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fpx import FP64, FloatFormat


class NotPositiveDefinite(Exception):
    """Raised when a matrix expected to be SPD is not."""


@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive definite operator, diagonal or dense.

    Dense matrices are symmetrized on construction; diagonal matrices
    are stored as their (strictly positive) eigenvalue vector.
    """

    diag: np.ndarray | None
    dense: np.ndarray | None

    @classmethod
    def diagonal(cls, eigenvalues) -> "SpdMatrix":
        d = np.asarray(eigenvalues, dtype=np.float64).copy()
        if d.ndim != 1 or d.size == 0:
            raise ValueError("diagonal requires a nonempty 1-d array")
        if not np.all(d > 0):
            raise NotPositiveDefinite("diagonal entries must be > 0")
        d.setflags(write=False)
        return cls(diag=d, dense=None)

    @classmethod
    def from_dense(cls, a) -> "SpdMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("dense matrix must be square")
        a = 0.5 * (a + a.T)  # symmetrize to the bit
        a.setflags(write=False)
        m = cls(diag=None, dense=a)
        cholesky(m)  # positive definiteness check
        return m

    @property
    def is_diagonal(self) -> bool:
        return self.diag is not None

    @property
    def n(self) -> int:
        return self.diag.shape[0] if self.is_diagonal else self.dense.shape[0]

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) if self.is_diagonal else np.array(self.dense)


@dataclass(frozen=True)
class LowerTriangular:
    """A lower-triangular factor, dense or diagonal (fast path)."""

    diag: np.ndarray | None
    dense: np.ndarray | None

    @property
    def is_diagonal(self) -> bool:
        return self.diag is not None

    @property
    def n(self) -> int:
        return self.diag.shape[0] if self.is_diagonal else self.dense.shape[0]

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) if self.is_diagonal else np.array(self.dense)

    @classmethod
    def identity(cls, n: int) -> "LowerTriangular":
        return cls(diag=np.ones(n), dense=None)


def cholesky(m: SpdMatrix) -> LowerTriangular:
    """Lower Cholesky factor of ``m``, computed in working precision."""
    if m.is_diagonal:
        return LowerTriangular(diag=np.sqrt(m.diag), dense=None)
    try:
        l = np.linalg.cholesky(m.dense)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    l.setflags(write=False)
    return LowerTriangular(diag=None, dense=l)


def _fmt_args(fmt: FloatFormat):
    return fmt.mantissa_bits, fmt.min_exponent, fmt.max_finite


def solve_lower(l: LowerTriangular, y_b, fmt: FloatFormat = FP64) -> np.ndarray:
    """Forward substitution L y = y_b, entirely in ``fmt`` arithmetic."""
    y_b = np.ascontiguousarray(y_b, dtype=np.float64)
    if l.is_diagonal:
        return _kernels.solve_diag(l.diag, y_b, *_fmt_args(fmt))
    return _kernels.solve_lower_dense(l.dense, y_b, *_fmt_args(fmt))


def solve_upper(l: LowerTriangular, y_b, fmt: FloatFormat = FP64) -> np.ndarray:
    """Back substitution L^T y = y_b, entirely in ``fmt`` arithmetic."""
    y_b = np.ascontiguousarray(y_b, dtype=np.float64)
    if l.is_diagonal:
        return _kernels.solve_diag(l.diag, y_b, *_fmt_args(fmt))
    return _kernels.solve_upper_dense(l.dense, y_b, *_fmt_args(fmt))


def solve_spd(l: LowerTriangular, y_b, fmt: FloatFormat = FP64) -> np.ndarray:
    """Solve L L^T y = y_b by two triangular solves, both in ``fmt``."""
    return solve_upper(l, solve_lower(l, y_b, fmt), fmt)


def matvec(a: SpdMatrix, v) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if a.is_diagonal:
        return a.diag * v
    return _kernels.matvec_dense(a.dense, v)


def dot(a, b) -> float:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _kernels.dot_seq(a, b)


def axpy(alpha: float, x, y) -> np.ndarray:
    """y + alpha*x, elementwise in working precision."""
    return np.asarray(y, dtype=np.float64) + alpha * np.asarray(x, dtype=np.float64)


def norm2(v) -> float:
    return float(np.sqrt(dot(v, v)))


def a_norm(a: SpdMatrix, v) -> float:
    """sqrt(v^T A v); tiny negative quadratic forms clamp to zero."""
    q = dot(v, matvec(a, v))
    if q < 0.0:
        q = 0.0
    return float(np.sqrt(q))


def eigvals_sym_jacobi(a: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by the cyclic Jacobi method.

    Stops when the off-diagonal Frobenius mass falls below
    1e-14 * ||a||_F or after ``max_sweeps`` sweeps.  Adequate at desk
    scale (n up to a few hundred).
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    tol = 1e-14 * np.linalg.norm(a, "fro")
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a = 0.5 * (a + a.T)
    return np.sort(a.diagonal())


def eigvals_spd(m: SpdMatrix) -> np.ndarray:
    """Sorted eigenvalues of an SPD operator."""
    if m.is_diagonal:
        return np.sort(m.diag)
    return eigvals_sym_jacobi(m.dense)


def spectral_norm(m: SpdMatrix) -> float:
    return float(eigvals_spd(m)[-1])


def cond2(m: SpdMatrix) -> float:
    """Spectral condition number lambda_max / lambda_min."""
    ev = eigvals_spd(m)
    lo, hi = float(ev[0]), float(ev[-1])
    if lo <= 0.0:
        raise NotPositiveDefinite(f"lambda_min = {lo} <= 0")
    return hi / lo
