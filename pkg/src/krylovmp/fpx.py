"""Simulated reduced-precision binary floating-point arithmetic.

Values of every simulated format are carried as exactly-representable
binary64 numbers; each elementary operation is computed in binary64 and
rounded onto the target grid (round-to-nearest, ties-to-even).  Because
all simulated formats have at most 24 significand bits and binary64 has
53 >= 2*24 + 2, this double rounding is exact, i.e. it agrees with
correctly rounded native arithmetic in the target format.

NaN and +-inf propagate silently; detecting them is the caller's job.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import round_array, round_scalar


@dataclass(frozen=True)
class FloatFormat:
    """An IEEE-style binary format with subnormals, described by its
    exponent and stored-fraction widths."""

    name: str
    exponent_bits: int
    mantissa_bits: int
    has_subnormals: bool = True
    unit_roundoff: float = field(init=False)
    min_exponent: int = field(init=False)
    min_subnormal: float = field(init=False)
    min_normal: float = field(init=False)
    max_finite: float = field(init=False)

    def __post_init__(self):
        bias = 2 ** (self.exponent_bits - 1) - 1
        t = self.mantissa_bits
        object.__setattr__(self, "unit_roundoff", 2.0 ** -(t + 1))
        object.__setattr__(self, "min_exponent", 1 - bias)
        object.__setattr__(self, "min_normal", 2.0 ** (1 - bias))
        object.__setattr__(self, "min_subnormal", 2.0 ** (1 - bias - t))
        object.__setattr__(self, "max_finite", 2.0**bias * (2.0 - 2.0**-t))


FORMATS = {
    "fp64": FloatFormat("fp64", 11, 52),
    "fp32": FloatFormat("fp32", 8, 23),
    "fp16": FloatFormat("fp16", 5, 10),
    "bfloat16": FloatFormat("bfloat16", 8, 7),
}

FP64 = FORMATS["fp64"]
FP32 = FORMATS["fp32"]
FP16 = FORMATS["fp16"]
BFLOAT16 = FORMATS["bfloat16"]


def get_format(name: str) -> FloatFormat:
    """Look up a format by its registry name (exact, case-sensitive)."""
    try:
        return FORMATS[name]
    except KeyError:
        raise KeyError(
            f"unknown float format {name!r}; known: {sorted(FORMATS)}"
        ) from None


def round_to_format(x: float, fmt: FloatFormat) -> float:
    """Nearest value representable in ``fmt``, ties to even.

    Magnitudes below half the smallest subnormal flush to (signed) zero,
    magnitudes past the overflow threshold become +-inf, NaN stays NaN.
    """
    return round_scalar(float(x), fmt.mantissa_bits, fmt.min_exponent, fmt.max_finite)


def round_vector(v, fmt: FloatFormat) -> np.ndarray:
    """Elementwise :func:`round_to_format`."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    return round_array(v, fmt.mantissa_bits, fmt.min_exponent, fmt.max_finite)


_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: np.divide(a, b),  # IEEE x/0 -> inf/nan, untrapped
}


def fl(op: str, a: float, b: float, fmt: FloatFormat) -> float:
    """One correctly rounded arithmetic operation in ``fmt``.

    The operands are assumed to be representable in ``fmt`` already.
    Division by zero follows IEEE semantics (+-inf or NaN), untrapped.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        r = _OPS[op](float(a), float(b))
    return round_to_format(r, fmt)
