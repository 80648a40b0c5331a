"""Numba-compiled scalar/array primitives shared by fpx and linalg.

Everything here is parameterized by the raw format constants
(mantissa_bits, min_exponent, max_finite) rather than by FloatFormat
objects, so the kernels stay nopython-compilable.
"""

import math

import numpy as np
from numba import njit

# Rounding model: round-to-nearest, ties-to-even, on the target grid.
# The target value is found by rescaling x so that one unit in the last
# place of the destination format becomes 1.0, applying rint (which is
# ties-to-even in the default FP environment), and scaling back.  The
# scaled value never exceeds 2**(t+1) in magnitude for normal results,
# so rint is exact.


@njit(cache=True, nogil=True)
def round_scalar(x, mant_bits, min_exp, max_finite):
    """Round a binary64 value onto the grid of the target format.

    ``mant_bits`` is the number of stored fraction bits, ``min_exp`` the
    unbiased exponent of the smallest normal number, ``max_finite`` the
    largest finite value of the format.  NaN and +-inf pass through.
    """
    if x != x or x == np.inf or x == -np.inf:
        return x
    if x == 0.0:
        return x  # preserves the sign of zero
    m, e = math.frexp(x)  # x = m * 2**e, |m| in [0.5, 1)
    # Exponent of the leading significand bit is e - 1; the ulp of the
    # destination has exponent (e - 1) - mant_bits, clamped from below by
    # the fixed subnormal spacing min_exp - mant_bits.
    q = e - 1 - mant_bits
    q_min = min_exp - mant_bits
    if q < q_min:
        q = q_min
    y = math.ldexp(np.rint(math.ldexp(x, -q)), q)
    if y > max_finite:
        return np.inf
    if y < -max_finite:
        return -np.inf
    return y


@njit(cache=True, nogil=True)
def round_array(v, mant_bits, min_exp, max_finite):
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        out[i] = round_scalar(v[i], mant_bits, min_exp, max_finite)
    return out


@njit(cache=True, nogil=True)
def dot_seq(a, b):
    """Sequential left-to-right dot product (determinism contract)."""
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit(cache=True, nogil=True)
def matvec_dense(a, v):
    n = a.shape[0]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += a[i, j] * v[j]
        out[i] = acc
    return out


# Triangular solves with per-operation rounding.  The factor entries and
# the right-hand side are rounded into the target format up front, and
# every multiply, subtract, and divide is rounded individually.  Since
# every target format has at most 24 significand bits and the binary64
# carrier has 53 (53 >= 2*24 + 2), the double rounding through binary64
# coincides with correctly rounded target arithmetic.


@njit(cache=True, nogil=True)
def solve_lower_dense(l, b, mant_bits, min_exp, max_finite):
    n = l.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = round_scalar(b[i], mant_bits, min_exp, max_finite)
        for j in range(i):
            lij = round_scalar(l[i, j], mant_bits, min_exp, max_finite)
            prod = round_scalar(lij * y[j], mant_bits, min_exp, max_finite)
            acc = round_scalar(acc - prod, mant_bits, min_exp, max_finite)
        lii = round_scalar(l[i, i], mant_bits, min_exp, max_finite)
        y[i] = round_scalar(acc / lii, mant_bits, min_exp, max_finite)
    return y


@njit(cache=True, nogil=True)
def solve_upper_dense(l, b, mant_bits, min_exp, max_finite):
    """Back substitution against the transpose of the lower factor."""
    n = l.shape[0]
    y = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = round_scalar(b[i], mant_bits, min_exp, max_finite)
        for j in range(n - 1, i, -1):
            lji = round_scalar(l[j, i], mant_bits, min_exp, max_finite)
            prod = round_scalar(lji * y[j], mant_bits, min_exp, max_finite)
            acc = round_scalar(acc - prod, mant_bits, min_exp, max_finite)
        lii = round_scalar(l[i, i], mant_bits, min_exp, max_finite)
        y[i] = round_scalar(acc / lii, mant_bits, min_exp, max_finite)
    return y


@njit(cache=True, nogil=True)
def solve_diag(d, b, mant_bits, min_exp, max_finite):
    """Diagonal factor fast path; bitwise identical to the dense path
    because the off-diagonal terms there contribute exact zeros."""
    n = d.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = round_scalar(b[i], mant_bits, min_exp, max_finite)
        dii = round_scalar(d[i], mant_bits, min_exp, max_finite)
        y[i] = round_scalar(acc / dii, mant_bits, min_exp, max_finite)
    return y
