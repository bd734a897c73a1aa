"""Working-precision helpers.

Double precision uses plain ``complex128`` arrays.  Extended precision stores
``mpc`` values from a private mpmath context in object arrays, so every numpy
expression used by the jet engine keeps working unchanged.
"""

from __future__ import annotations

import mpmath
import numpy as np

EXTENDED_DPS = 40

_ctx = mpmath.MPContext()
_ctx.dps = EXTENDED_DPS

PRECISIONS = ("double", "extended")


def check_precision(precision: str) -> str:
    if precision not in PRECISIONS:
        raise ValueError(f"precision must be one of {PRECISIONS}, got {precision!r}")
    return precision


def mp() -> mpmath.MPContext:
    """The extended-precision mpmath context (40 significant digits)."""
    return _ctx


def is_extended(x) -> bool:
    return isinstance(x, np.ndarray) and x.dtype == object


def to_work(x, precision: str = "double") -> np.ndarray:
    """Convert scalars or arrays to the working representation."""
    check_precision(precision)
    if precision == "double":
        if is_extended(x):
            return to_complex(x)
        return np.asarray(x, dtype=complex)
    arr = np.asarray(x, dtype=object) if not is_extended(x) else x
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = v if isinstance(v, _ctx.mpc) else _ctx.mpc(complex(v))
    return out


def to_complex(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.vectorize(complex, otypes=[complex])(arr) if arr.size else arr.astype(complex)
    return arr.astype(complex)


def to_real(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr) if arr.size else arr.astype(float)
    return np.real(arr).astype(float) if np.iscomplexobj(arr) else arr.astype(float)


def precision_of(x) -> str:
    return "extended" if is_extended(x) else "double"
