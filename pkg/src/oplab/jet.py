"""Truncated Taylor series ("jets") over the complex numbers.

A :class:`Jet` of order ``N`` at ``z0`` holds the Taylor coefficients
``c_0 .. c_N`` of ``f(z0 + h) = sum_k c_k h^k + O(h^{N+1})``.  Coefficients are
stored unscaled, so ``f^{(k)}(z0) = k! c_k``.

Jets are batched: ``center`` may be an array of points and ``coeffs`` then has
shape ``(N + 1,) + center.shape``.  Every operation is vectorised over the
batch, which is what makes grid sweeps over the disk affordable.  Object
arrays of mpmath numbers are accepted everywhere for extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import JetMismatchError, PoleError
from .precision import is_extended, to_real

__all__ = [
    "Jet",
    "jet_const",
    "jet_var",
    "jet_add",
    "jet_sub",
    "jet_mul",
    "jet_div",
    "jet_compose",
    "jet_ipow",
]


def _zeros_like_batch(order: int, center: np.ndarray) -> np.ndarray:
    dtype = object if is_extended(center) else complex
    out = np.zeros((order + 1,) + center.shape, dtype=dtype)
    if dtype is object:
        out[...] = 0
    return out


@dataclass(frozen=True, eq=False)
class Jet:
    center: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.ndim < 1 or self.coeffs.shape[1:] != self.center.shape:
            raise JetMismatchError(
                f"coefficient shape {self.coeffs.shape} does not match center shape {self.center.shape}"
            )

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        """``f(z0)``, always an array shaped like the center (0-d for scalars)."""
        return self.coeffs[0:1].reshape(self.center.shape)

    def derivative(self, k: int) -> np.ndarray:
        """The k-th derivative at the center, ``k! * c_k``."""
        if not 0 <= k <= self.order:
            raise ValueError(f"derivative order {k} outside 0..{self.order}")
        return math.factorial(k) * self.coeffs[k]

    def derivatives(self) -> np.ndarray:
        return np.stack([self.derivative(k) for k in range(self.order + 1)])

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.center, self.coeffs[: order + 1])

    def differentiate(self, m: int) -> Jet:
        """Jet of ``f^{(m)}`` at the same center, of order ``N - m``."""
        if m > self.order:
            raise ValueError(f"jet of order {self.order} cannot be differentiated {m} times")
        n = self.order - m
        scale = [math.factorial(k + m) // math.factorial(k) for k in range(n + 1)]
        coeffs = np.stack([scale[k] * self.coeffs[k + m] for k in range(n + 1)])
        return Jet(self.center, coeffs)

    def max_abs_diff(self, other: Jet) -> float:
        _check_pair(self, other)
        return float(np.max(to_real(np.abs(self.coeffs - other.coeffs)), initial=0.0))

    # operator sugar ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        coeffs = self.coeffs.copy()
        coeffs[0] = coeffs[0] + other
        return Jet(self.center, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.center, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return jet_sub(self, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet(self.center, self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_div(self, other)
        return Jet(self.center, self.coeffs / other)

    def __rtruediv__(self, other):
        return jet_div(jet_const(other, self.center, self.order), self)

    def __pow__(self, p: int):
        return jet_ipow(self, p)

    def __repr__(self):
        return f"Jet(order={self.order}, batch={self.center.shape})"


def _check_pair(x: Jet, y: Jet) -> None:
    if x.order != y.order:
        raise JetMismatchError(f"jet orders differ: {x.order} vs {y.order}")
    if x.center is y.center:
        return
    if x.center.shape != y.center.shape or not np.array_equal(x.center, y.center):
        raise JetMismatchError("jet centers differ")


def jet_const(c, z0, n: int) -> Jet:
    """Jet of the constant function ``c``: coefficients ``(c, 0, ..., 0)``."""
    if n < 0:
        raise ValueError("jet order must be non-negative")
    center = z0 if isinstance(z0, np.ndarray) else np.asarray(z0, dtype=complex)
    coeffs = _zeros_like_batch(n, center)
    coeffs[0] = c
    return Jet(center, coeffs)


def jet_var(z0, n: int) -> Jet:
    """Jet of the identity ``f(z) = z``: coefficients ``(z0, 1, 0, ..., 0)``."""
    if n < 1:
        raise ValueError("the variable jet needs order >= 1")
    center = z0 if isinstance(z0, np.ndarray) else np.asarray(z0, dtype=complex)
    coeffs = _zeros_like_batch(n, center)
    coeffs[0] = center
    coeffs[1] = 1
    return Jet(center, coeffs)


def jet_add(x: Jet, y: Jet) -> Jet:
    _check_pair(x, y)
    return Jet(x.center, x.coeffs + y.coeffs)


def jet_sub(x: Jet, y: Jet) -> Jet:
    _check_pair(x, y)
    return Jet(x.center, x.coeffs - y.coeffs)


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = a[0] * b
    for i in range(1, n):
        out[i:] += a[i] * b[: n - i]
    return out


def jet_mul(x: Jet, y: Jet) -> Jet:
    """Truncated Cauchy product."""
    _check_pair(x, y)
    return Jet(x.center, _cauchy(x.coeffs, y.coeffs))


def jet_div(x: Jet, y: Jet) -> Jet:
    """Truncated series quotient ``x / y``; requires ``y(z0) != 0``."""
    _check_pair(x, y)
    b = y.coeffs
    b0 = b[0]
    if np.any(b0 == 0):
        raise PoleError("division by a jet whose constant term vanishes")
    n = x.order
    q = [None] * (n + 1)
    for k in range(n + 1):
        acc = x.coeffs[k]
        for i in range(1, k + 1):
            acc = acc - b[i] * q[k - i]
        q[k] = acc / b0
    return Jet(x.center, np.stack(q))


def jet_compose(outer: Jet, inner: Jet, *, rtol: float = 1e-12) -> Jet:
    """Jet of ``outer o inner`` at the inner's center.

    ``outer`` must be expanded at ``inner.value``.  Horner recomposition on
    the non-constant part of ``inner``.
    """
    if outer.order != inner.order:
        raise JetMismatchError(f"jet orders differ: {outer.order} vs {inner.order}")
    w = inner.value
    if outer.center is not w:
        if outer.center.shape != w.shape:
            raise JetMismatchError("outer jet is not expanded at the inner jet's value")
        gap = to_real(np.abs(outer.center - w))
        scale = 1.0 + to_real(np.abs(w))
        if np.any(gap > rtol * scale):
            raise JetMismatchError("outer jet is not expanded at the inner jet's value")
    n = inner.order
    h = inner.coeffs.copy()
    h[0] = 0
    acc = _zeros_like_batch(n, inner.center)
    acc[0] = outer.coeffs[n]
    for k in range(n - 1, -1, -1):
        acc = _cauchy(acc, h)
        acc[0] = acc[0] + outer.coeffs[k]
    return Jet(inner.center, acc)


def jet_ipow(x: Jet, p: int) -> Jet:
    """``x**p`` for a positive integer ``p`` by binary exponentiation."""
    if p < 1 or int(p) != p:
        raise ValueError("jet_ipow needs a positive integer exponent")
    result = None
    base = x
    p = int(p)
    while p:
        if p & 1:
            result = base if result is None else jet_mul(result, base)
        p >>= 1
        if p:
            base = jet_mul(base, base)
    return result
