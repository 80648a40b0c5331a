"""The preconditioned conjugate gradient framework with left/right/split
preconditioning, per-application precision, and full finite-precision
diagnostics.

The solver keeps every non-preconditioner operation in working precision
(binary64) with the fixed accumulation order of :mod:`krylovmp.linalg`;
only the preconditioner applications run through the simulated low
precision triangular solves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fpx import FP64, FloatFormat
from .linalg import (
    LowerTriangular,
    SpdMatrix,
    a_norm,
    axpy,
    dot,
    matvec,
    norm2,
    solve_lower,
    solve_spd,
    solve_upper,
)
from .problems import reference_solution

RUNNING = "Running"
CONVERGED = "Converged"
MAXITER = "MaxIter"
BREAKDOWN_NONFINITE = "Breakdown(NonFinite)"
BREAKDOWN_ZERO = "Breakdown(ZeroDenominator)"

TERMINAL = {CONVERGED, MAXITER, BREAKDOWN_NONFINITE, BREAKDOWN_ZERO}


@dataclass(frozen=True)
class PreconditionerScheme:
    """The (M_L, M_R) pair as a Cholesky factor plus the three
    application formats (s: M_L^-1, q: M_R^-1, z: M_R^-T)."""

    mode: str  # none | left | right | split
    factor: LowerTriangular | None = None
    fmt_s: FloatFormat = FP64
    fmt_q: FloatFormat = FP64
    fmt_z: FloatFormat = FP64

    def __post_init__(self):
        if self.mode not in ("none", "left", "right", "split"):
            raise ValueError(f"unknown preconditioning mode {self.mode!r}")
        if self.mode != "none" and self.factor is None:
            raise ValueError("preconditioned modes require a factor")

    @classmethod
    def unpreconditioned(cls) -> "PreconditionerScheme":
        return cls(mode="none")

    def apply_s(self, r: np.ndarray) -> np.ndarray:
        if self.mode == "left":
            return solve_spd(self.factor, r, self.fmt_s)
        if self.mode == "split":
            return solve_lower(self.factor, r, self.fmt_s)
        return r

    def apply_q(self, s: np.ndarray) -> np.ndarray:
        if self.mode == "right":
            return solve_spd(self.factor, s, self.fmt_q)
        if self.mode == "split":
            return solve_upper(self.factor, s, self.fmt_q)
        return s

    def apply_z(self, r: np.ndarray) -> np.ndarray:
        # M is symmetric, so M_R^-T for right preconditioning is the
        # same SPD solve; for split, M_R^-T = L^-1.
        if self.mode == "right":
            return solve_spd(self.factor, r, self.fmt_z)
        if self.mode == "split":
            return solve_lower(self.factor, r, self.fmt_z)
        return r


# Stopping rules


@dataclass(frozen=True)
class NoStop:
    """Run to maxiter."""


@dataclass(frozen=True)
class TrueResidualBelow:
    tau: float


@dataclass(frozen=True)
class RecursiveResidualBelow:
    tau: float


@dataclass(frozen=True)
class ANormErrorMin:
    """Stop after ``patience`` iterations without a new minimum of the
    A-norm error; the argmin iteration is reported on the trace."""

    patience: int


StoppingRule = NoStop | TrueResidualBelow | RecursiveResidualBelow | ANormErrorMin


@dataclass
class PcgState:
    k: int
    x: np.ndarray
    r: np.ndarray
    s: np.ndarray
    q: np.ndarray
    z: np.ndarray
    p: np.ndarray
    alpha: float
    beta: float


@dataclass(frozen=True)
class IterationRecord:
    k: int
    alpha: float
    beta: float
    norm_rhat: float
    norm_true_residual: float
    residual_gap: float
    a_norm_error: float
    f_value: float
    local_orth: float
    norm_x: float
    zs: float  # z_k^T s_k, exposes the underflow-to-zero failure mode
    status: str


@dataclass
class PcgTrace:
    records: list[IterationRecord]
    final_state: PcgState
    k_star_candidate: int | None = None
    best_k: int | None = None
    xs: list[np.ndarray] | None = None  # per-iteration copies, opt-in
    rs: list[np.ndarray] | None = None

    @property
    def status(self) -> str:
        return self.records[-1].status

    def argmin_a_norm_error(self) -> int:
        errs = np.array([rec.a_norm_error for rec in self.records])
        errs[~np.isfinite(errs)] = np.inf
        return int(np.argmin(errs))


def _nonfinite(*items) -> bool:
    for it in items:
        if isinstance(it, np.ndarray):
            if not np.all(np.isfinite(it)):
                return True
        elif not np.isfinite(it):
            return True
    return False


def _should_stop(stop, norm_true, norm_rhat, a_err, k, tracker) -> bool:
    if isinstance(stop, TrueResidualBelow):
        return norm_true <= stop.tau
    if isinstance(stop, RecursiveResidualBelow):
        return norm_rhat <= stop.tau
    if isinstance(stop, ANormErrorMin):
        if np.isfinite(a_err) and a_err < tracker["best"]:
            tracker["best"] = a_err
            tracker["best_k"] = k
        return k - tracker["best_k"] >= stop.patience
    return False


def pcg_run(
    a: SpdMatrix,
    b,
    x0,
    scheme: PreconditionerScheme,
    maxiter: int,
    stop: StoppingRule = NoStop(),
    keep_vectors: bool = False,
) -> PcgTrace:
    """Run the PCG framework and collect one record per iteration,
    including the k = 0 initial state.  With ``keep_vectors`` the trace
    also stores a copy of x and r at every recorded iteration."""
    if maxiter < 1:
        raise ValueError("maxiter must be >= 1")
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    x_ref = reference_solution(a, b)

    r = b - matvec(a, x)
    s = scheme.apply_s(r)
    q = scheme.apply_q(s)
    p = q.copy()
    z = scheme.apply_z(r)
    zs = dot(z, s)

    records: list[IterationRecord] = []
    xs: list[np.ndarray] = []
    rs: list[np.ndarray] = []
    tracker = {"best": np.inf, "best_k": 0}

    def diag_record(k, alpha, beta, local_orth, status):
        if keep_vectors:
            xs.append(x.copy())
            rs.append(r.copy())
        true_res = b - matvec(a, x)
        err = x - x_ref
        return IterationRecord(
            k=k,
            alpha=alpha,
            beta=beta,
            norm_rhat=norm2(r),
            norm_true_residual=norm2(true_res),
            residual_gap=norm2(true_res - r),
            a_norm_error=a_norm(a, err),
            f_value=0.5 * dot(x, matvec(a, x)) - dot(x, b),
            local_orth=local_orth,
            norm_x=norm2(x),
            zs=zs,
            status=status,
        )

    records.append(diag_record(0, np.nan, np.nan, 0.0, RUNNING))
    if _nonfinite(x, r, s, q, z, p):
        records[-1] = replace(records[-1], status=BREAKDOWN_NONFINITE)
        state = PcgState(0, x, r, s, q, z, p, np.nan, np.nan)
        return PcgTrace(records, state, xs=xs or None, rs=rs or None)

    alpha = np.nan
    beta = np.nan
    status = MAXITER
    for k in range(maxiter):
        ap = matvec(a, p)
        pap = dot(p, ap)
        if pap == 0.0 and zs != 0.0:
            status = BREAKDOWN_ZERO
            records.append(diag_record(k + 1, np.nan, np.nan, np.nan, status))
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = float(np.divide(zs, pap))
        p_prev = p
        zs_prev = zs
        x = axpy(alpha, p, x)
        r = axpy(-alpha, ap, r)
        s = scheme.apply_s(r)
        q = scheme.apply_q(s)
        z = scheme.apply_z(r)
        zs = dot(z, s)
        local_orth = abs(dot(r, p_prev))

        if _nonfinite(alpha, x, r, s, q, z):
            status = BREAKDOWN_NONFINITE
            beta = np.nan
            records.append(diag_record(k + 1, alpha, beta, local_orth, status))
            break

        rec = diag_record(k + 1, alpha, np.nan, local_orth, RUNNING)
        exact_zero = not r.any()  # solved exactly; continuing would 0/0
        if exact_zero or _should_stop(
            stop, rec.norm_true_residual, rec.norm_rhat, rec.a_norm_error, k + 1, tracker
        ):
            status = CONVERGED
            beta = np.nan
            records.append(replace(rec, status=status))
            break

        # beta comes after the stopping check, per the algorithm's line order
        if zs_prev == 0.0 and zs != 0.0:
            status = BREAKDOWN_ZERO
            records.append(replace(rec, status=status))
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = float(np.divide(zs, zs_prev))
        p = axpy(beta, p, q)
        if _nonfinite(beta, p):
            status = BREAKDOWN_NONFINITE
            records.append(replace(rec, beta=beta, status=status))
            break
        records.append(replace(rec, beta=beta))
    else:
        records[-1] = replace(records[-1], status=MAXITER)

    state = PcgState(records[-1].k, x, r, s, q, z, p, alpha, beta)
    trace = PcgTrace(records, state, xs=xs or None, rs=rs or None)
    if isinstance(stop, ANormErrorMin):
        trace.best_k = tracker["best_k"]
    return trace


def saad_split_run(
    a: SpdMatrix,
    b,
    x0,
    l: LowerTriangular,
    fmt_l: FloatFormat,
    fmt_r: FloatFormat,
    maxiter: int,
    stop: StoppingRule = NoStop(),
    keep_vectors: bool = False,
) -> PcgTrace:
    """Saad's split-preconditioned CG variant.

    The recursively updated residual is the left-preconditioned residual
    r_{k+1} = r_k - alpha_k L^-1 A p_k, so low precision in the left
    application is baked into the recurrence and limits the attainable
    accuracy.  Diagnostics recompute the true residual b - A x in
    working precision, so the stagnation is observable.
    """
    if maxiter < 1:
        raise ValueError("maxiter must be >= 1")
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    x_ref = reference_solution(a, b)

    rhat = solve_lower(l, b - matvec(a, x), fmt_l)
    p = solve_upper(l, rhat, fmt_r)
    rr = dot(rhat, rhat)

    records: list[IterationRecord] = []
    xs: list[np.ndarray] = []
    rs: list[np.ndarray] = []
    tracker = {"best": np.inf, "best_k": 0}

    def diag_record(k, alpha, beta, local_orth, status):
        if keep_vectors:
            xs.append(x.copy())
            rs.append(rhat.copy())
        true_res = b - matvec(a, x)
        # residual gap in the preconditioned space the recurrence lives in
        gap = norm2(solve_lower(l, true_res, FP64) - rhat)
        err = x - x_ref
        return IterationRecord(
            k=k,
            alpha=alpha,
            beta=beta,
            norm_rhat=norm2(rhat),
            norm_true_residual=norm2(true_res),
            residual_gap=gap,
            a_norm_error=a_norm(a, err),
            f_value=0.5 * dot(x, matvec(a, x)) - dot(x, b),
            local_orth=local_orth,
            norm_x=norm2(x),
            zs=rr,
            status=status,
        )

    records.append(diag_record(0, np.nan, np.nan, 0.0, RUNNING))
    alpha = np.nan
    beta = np.nan
    for k in range(maxiter):
        ap = matvec(a, p)
        pap = dot(p, ap)
        if pap == 0.0 and rr != 0.0:
            records.append(diag_record(k + 1, np.nan, np.nan, np.nan, BREAKDOWN_ZERO))
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = float(np.divide(rr, pap))
        p_prev = p
        rr_prev = rr
        x = axpy(alpha, p, x)
        rhat = axpy(-alpha, solve_lower(l, ap, fmt_l), rhat)
        rr = dot(rhat, rhat)
        local_orth = abs(dot(rhat, p_prev))

        if _nonfinite(alpha, x, rhat):
            records.append(diag_record(k + 1, alpha, np.nan, local_orth, BREAKDOWN_NONFINITE))
            break

        rec = diag_record(k + 1, alpha, np.nan, local_orth, RUNNING)
        exact_zero = not rhat.any()  # solved exactly; continuing would 0/0
        if exact_zero or _should_stop(
            stop, rec.norm_true_residual, rec.norm_rhat, rec.a_norm_error, k + 1, tracker
        ):
            records.append(replace(rec, status=CONVERGED))
            break

        if rr_prev == 0.0 and rr != 0.0:
            records.append(replace(rec, status=BREAKDOWN_ZERO))
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = float(np.divide(rr, rr_prev))
        p = axpy(beta, p, solve_upper(l, rhat, fmt_r))
        if _nonfinite(beta, p):
            records.append(replace(rec, beta=beta, status=BREAKDOWN_NONFINITE))
            break
        records.append(replace(rec, beta=beta))
    else:
        records[-1] = replace(records[-1], status=MAXITER)

    state = PcgState(records[-1].k, x, rhat, rhat, rhat, rhat, p, alpha, beta)
    trace = PcgTrace(records, state, xs=xs or None, rs=rs or None)
    if isinstance(stop, ANormErrorMin):
        trace.best_k = tracker["best_k"]
    return trace


def detect_k_star(trace: PcgTrace, epsilon: float) -> int | None:
    """First iteration k with f(x_k) - f(x_{k+1}) <= epsilon, or None."""
    f = [rec.f_value for rec in trace.records]
    finite = [v for v in f if np.isfinite(v)]
    if len(finite) < 2:
        raise ValueError("need at least 2 records with finite f_value")
    for k in range(len(f) - 1):
        if np.isfinite(f[k]) and np.isfinite(f[k + 1]) and f[k] - f[k + 1] <= epsilon:
            return k
    return None
