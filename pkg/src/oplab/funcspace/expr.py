"""Analytic functions on the unit disk as immutable expression trees.

Every node evaluates to a :class:`~oplab.jet.Jet` of any requested order at
any batch of points in the disk.  Closed-form leaves are seeded with the jet
algebra itself (no hand-coded derivative tables), so the tree is exact to
working precision for every node kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..errors import DomainError
from ..jet import Jet, jet_compose, jet_const, jet_div, jet_ipow, jet_var
from ..precision import check_precision, is_extended, mp, to_real, to_work

__all__ = [
    "AnalyticFn",
    "Const",
    "Var",
    "Poly",
    "MobiusSigma",
    "TestFn",
    "Sum",
    "Product",
    "Quotient",
    "Compose",
    "Dilate",
    "Derivative",
    "eval_jet",
    "as_fn",
]


def _check_in_disk(z: np.ndarray, what: str) -> None:
    bad = to_real(np.abs(z)) >= 1.0
    if np.any(bad):
        where = complex(np.asarray(z).reshape(-1)[np.argmax(bad.reshape(-1))])
        raise DomainError(f"{what} left the open unit disk (|z| >= 1 at z = {where})")


def _const_for(value, center: np.ndarray):
    """Lift a node constant into the precision of ``center``.

    ``Fraction`` constants keep their exact value in extended precision.
    """
    if is_extended(center):
        ctx = mp()
        if isinstance(value, Fraction):
            return ctx.mpc(ctx.mpf(value.numerator) / value.denominator)
        return ctx.mpc(value)
    if isinstance(value, Fraction):
        return complex(float(value))
    return complex(value)


class AnalyticFn:
    """Base node.  Subclasses implement :meth:`_jet`."""

    def _jet(self, z0: np.ndarray, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, z, precision: str = "double"):
        return eval_jet(self, z, 0, precision=precision).value

    def __add__(self, other):
        return Sum((self, as_fn(other)))

    def __radd__(self, other):
        return Sum((as_fn(other), self))

    def __sub__(self, other):
        return Sum((self, Product((Const(-1), as_fn(other)))))

    def __rsub__(self, other):
        return Sum((as_fn(other), Product((Const(-1), self))))

    def __neg__(self):
        return Product((Const(-1), self))

    def __mul__(self, other):
        return Product((self, as_fn(other)))

    def __rmul__(self, other):
        return Product((as_fn(other), self))

    def __truediv__(self, other):
        return Quotient(self, as_fn(other))

    def __rtruediv__(self, other):
        return Quotient(as_fn(other), self)


def as_fn(x) -> AnalyticFn:
    if isinstance(x, AnalyticFn):
        return x
    return Const(complex(x))


@dataclass(frozen=True)
class Const(AnalyticFn):
    """Constant function; ``c`` may be a ``Fraction`` to stay exact."""

    c: complex | Fraction

    def __post_init__(self):
        if not isinstance(self.c, Fraction):
            object.__setattr__(self, "c", complex(self.c))

    def _jet(self, z0, order):
        return jet_const(_const_for(self.c, z0), z0, order)

    def __str__(self):
        return f"const({_fmt(complex(self.c))})"


@dataclass(frozen=True)
class Var(AnalyticFn):
    def _jet(self, z0, order):
        if order == 0:
            return Jet(z0, np.asarray(z0)[np.newaxis].copy())
        return jet_var(z0, order)

    def __str__(self):
        return "z"


@dataclass(frozen=True)
class Poly(AnalyticFn):
    """``c_0 + c_1 z + ... + c_d z^d``."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")

    def _jet(self, z0, order):
        x = Var()._jet(z0, order)
        acc = jet_const(_const_for(self.coeffs[-1], z0), z0, order)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + _const_for(c, z0)
        return acc

    def __str__(self):
        return "poly(" + ",".join(_fmt(c) for c in self.coeffs) + ")"


@dataclass(frozen=True)
class MobiusSigma(AnalyticFn):
    """The disk automorphism ``(a - z) / (1 - conj(a) z)``."""

    a: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        if abs(self.a) >= 1:
            raise DomainError(f"Mobius parameter must satisfy |a| < 1, got {self.a}")

    def _jet(self, z0, order):
        a = _const_for(self.a, z0)
        abar = _const_for(self.a.conjugate(), z0)
        x = Var()._jet(z0, order)
        return jet_div(a - x, 1 - abar * x)

    def __str__(self):
        return f"sigma({_fmt(self.a)})"


@dataclass(frozen=True)
class TestFn(AnalyticFn):
    """``((1 - |a|^2) / (1 - conj(a) z))^j``.

    ``scale = (1 - |a|^2)^j`` is premultiplied so the power is only ever taken
    of ``1 / (1 - conj(a) z)``.
    """

    __test__ = False  # not a pytest class

    j: int
    a: complex
    scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"test-function exponent must be a positive integer, got {self.j}")
        object.__setattr__(self, "j", int(self.j))
        if abs(self.a) >= 1:
            raise DomainError(f"test-function parameter must satisfy |a| < 1, got {self.a}")
        object.__setattr__(self, "scale", (1.0 - abs(self.a) ** 2) ** self.j)

    def _jet(self, z0, order):
        if self.a == 0:
            return jet_const(_const_for(1, z0), z0, order)
        if is_extended(z0):
            ctx = mp()
            a = ctx.mpc(self.a)
            scale = (1 - abs(a) ** 2) ** self.j
        else:
            scale = self.scale
        abar = _const_for(self.a.conjugate(), z0)
        x = Var()._jet(z0, order)
        one = jet_const(_const_for(1, z0), z0, order)
        return jet_ipow(jet_div(one, 1 - abar * x), self.j) * scale

    def __str__(self):
        return f"testfn({self.j},{_fmt(self.a)})"


@dataclass(frozen=True)
class Sum(AnalyticFn):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("empty sum")

    def _jet(self, z0, order):
        acc = self.children[0]._jet(z0, order)
        for c in self.children[1:]:
            acc = acc + c._jet(z0, order)
        return acc

    def __str__(self):
        return "(" + " + ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Product(AnalyticFn):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("empty product")

    def _jet(self, z0, order):
        acc = None
        for c in self.children:
            if isinstance(c, Const):
                # scalar factors skip the Cauchy product
                factor = _const_for(c.c, z0)
                acc = factor if acc is None else acc * factor
                continue
            j = c._jet(z0, order)
            if acc is None:
                acc = j
            elif isinstance(acc, Jet):
                acc = acc * j
            else:
                acc = j * acc
        if not isinstance(acc, Jet):
            acc = jet_const(acc, z0, order)
        return acc

    def __str__(self):
        return "(" + " * ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Quotient(AnalyticFn):
    num: AnalyticFn
    den: AnalyticFn

    def _jet(self, z0, order):
        return jet_div(self.num._jet(z0, order), self.den._jet(z0, order))

    def __str__(self):
        return f"({self.num} / {self.den})"


@dataclass(frozen=True)
class Compose(AnalyticFn):
    """``outer(inner(z))``; ``inner`` must map the disk into itself."""

    outer: AnalyticFn
    inner: AnalyticFn

    def _jet(self, z0, order):
        ij = self.inner._jet(z0, order)
        w = ij.value
        _check_in_disk(w, "inner function of a composition")
        oj = self.outer._jet(w, order)
        return jet_compose(oj, ij)

    def __str__(self):
        return f"compose({self.outer},{self.inner})"


@dataclass(frozen=True)
class Dilate(AnalyticFn):
    """``f(r z)`` for ``0 < r <= 1``."""

    r: float
    f: AnalyticFn

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        if not 0 < self.r <= 1:
            raise DomainError(f"dilation radius must lie in (0, 1], got {self.r}")

    def _jet(self, z0, order):
        r = mp().mpf(self.r) if is_extended(z0) else self.r
        # 0-d object arithmetic yields a bare scalar; keep it an array
        inner = self.f._jet(np.asarray(z0 * r, dtype=z0.dtype), order)
        powers = np.array([r**k for k in range(order + 1)], dtype=inner.coeffs.dtype)
        powers = powers.reshape((order + 1,) + (1,) * z0.ndim)
        return Jet(z0, inner.coeffs * powers)

    def __str__(self):
        return f"dilate({self.r!r},{self.f})"


@dataclass(frozen=True)
class Derivative(AnalyticFn):
    """``f^{(m)}``, realised by evaluating ``f`` at order ``N + m`` and shifting."""

    f: AnalyticFn
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("derivative order must be a non-negative integer")
        object.__setattr__(self, "m", int(self.m))

    def _jet(self, z0, order):
        return self.f._jet(z0, order + self.m).differentiate(self.m)

    def __str__(self):
        return f"diff({self.f},{self.m})"


def eval_jet(f: AnalyticFn, z0, order: int, precision: str | None = None) -> Jet:
    """Taylor jet of ``f`` of the given order at ``z0`` (scalar or array).

    ``precision`` defaults to the representation of ``z0`` (object arrays of
    mpmath numbers mean extended precision).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if precision is None:
        precision = "extended" if is_extended(z0) else "double"
    check_precision(precision)
    z = to_work(z0, precision)
    _check_in_disk(z, "evaluation point")
    return f._jet(z, order)


def _fmt(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i"
    sign = "+" if c.imag >= 0 or math.isnan(c.imag) else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


def atoms_sum(atoms: Sequence[tuple[complex, complex]]) -> AnalyticFn:
    """``sum_k c_k sigma_{a_k}`` from a list of ``(c_k, a_k)`` pairs."""
    return Sum(tuple(Product((Const(c), MobiusSigma(a))) for c, a in atoms))
