"""Test functions ``f_{j,a}`` and the delta-interpolating combinations ``g_{i,a}``.

``g_{i,a} = sum_j c_j f_{j,a}`` is built so that ``g^{(k)}(a)`` equals
``delta_{ik} conj(a)^k / (1 - |a|^2)^k`` for every derivative order ``k`` in
the operator's index set.  Since ``f_{j,a}^{(k)}(a) = (j)_k conj(a)^k /
(1 - |a|^2)^k``, the coefficients solve the integer system
``sum_j c_j (j)_k = delta_{ik}`` and do not depend on ``a``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DeltaSystemError, DomainError
from .funcspace.expr import AnalyticFn, Const, Product, Sum, TestFn, eval_jet
from .precision import mp

def pochhammer(j: int, k: int) -> int:
    """Rising factorial ``(j)_k = j (j+1) ... (j+k-1)``, with ``(j)_0 = 1``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    out = 1
    for t in range(k):
        out *= j + t
    return out


def index_set(m: int) -> tuple[int, ...]:
    """Derivative orders entering ``(Tf)''``; colliding orders merge for ``m <= 2``."""
    if m < 1:
        raise ValueError("operator order m must be >= 1")
    return tuple(sorted({0, 1, 2, m, m + 1, m + 2}))


def default_basis(m: int) -> tuple[int, ...]:
    """Exponents ``j`` of the square system: ``{1,2,3,m+1,m+2,m+3}``, or ``1..m+3`` for ``m <= 2``."""
    if m <= 2:
        return tuple(range(1, m + 4))
    return (1, 2, 3, m + 1, m + 2, m + 3)


@dataclass(frozen=True)
class DeltaSystem:
    m: int
    index_set: tuple
    basis_js: tuple
    matrix: np.ndarray  # rows k in index_set, columns j in basis_js

    @classmethod
    def build(cls, m: int, basis_js=None, rows=None) -> DeltaSystem:
        rows = tuple(rows) if rows is not None else index_set(m)
        basis = tuple(basis_js) if basis_js is not None else default_basis(m)
        mat = np.array([[pochhammer(j, k) for j in basis] for k in rows], dtype=object)
        return cls(m, rows, basis, mat)

    def residual(self, coeffs, i: int) -> float:
        """Exact ``max_k |sum_j c_j (j)_k - delta_ik|`` for the given coefficients."""
        worst = Fraction(0)
        for k, row in zip(self.index_set, self.matrix):
            got = sum(Fraction(c) * int(p) for c, p in zip(coeffs, row))
            worst = max(worst, abs(got - (1 if k == i else 0)))
        return float(worst)


_cache: dict = {}
_cache_lock = threading.Lock()


@dataclass(frozen=True)
class DeltaSolution:
    i: int
    m: int
    index_set: tuple
    basis_js: tuple
    coeffs: tuple
    residual: float
    condition: float
    exact: tuple  # Fraction coefficients before rounding
    rounded_residual: float = 0.0


def _solve_exact(mat, target) -> list[Fraction] | None:
    """Gaussian elimination over the rationals; ``None`` if singular."""
    n = len(mat)
    a = [[Fraction(int(v)) for v in row] + [Fraction(t)] for row, t in zip(mat, target)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] / a[r][r] for r in range(n)]


def solve_delta_coeffs(i: int, m: int, basis_js=None, rows=None) -> DeltaSolution:
    """Coefficients ``c_j`` with ``sum_j c_j (j)_k = delta_{ik}`` for all ``k`` in ``rows``.

    The matrix is integer, so the system is solved exactly over the rationals.
    ``residual`` is the residual of the exact coefficients (which is what
    :func:`g_ia` uses), ``rounded_residual`` that of their double rounding,
    which grows with the conditioning of the system.  Results are memoised
    per system.
    """
    key = (i, m, tuple(basis_js) if basis_js is not None else None, tuple(rows) if rows is not None else None)
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit
    system = DeltaSystem.build(m, basis_js, rows)
    if i not in system.index_set:
        raise ValueError(f"target index {i} not in index set {system.index_set}")
    n_rows, n_cols = system.matrix.shape
    if n_rows != n_cols:
        raise DeltaSystemError(f"delta system is not square: {n_rows} conditions, {n_cols} exponents")
    target = [1 if k == i else 0 for k in system.index_set]
    cond = float(np.linalg.cond(system.matrix.astype(float)))
    exact = _solve_exact(system.matrix.tolist(), target)
    if exact is None:
        raise DeltaSystemError(f"singular Pochhammer system for m={m}, basis={system.basis_js}")
    coeffs = tuple(float(c) for c in exact)
    sol = DeltaSolution(
        i,
        m,
        system.index_set,
        system.basis_js,
        coeffs,
        system.residual(exact, i),
        cond,
        tuple(exact),
        system.residual(coeffs, i),
    )
    with _cache_lock:
        _cache[key] = sol
    return sol


def paper_three_term(i: int, m: int) -> DeltaSolution:
    """Three-term combination over ``{1,2,3}`` (for ``i <= 2``) or ``{m+1,m+2,m+3}``.

    Only the three conditions ``k in {0,1,2}`` (resp. ``{m,m+1,m+2}``) are
    imposed; :func:`verify_delta` reports which of the remaining ones hold.
    """
    if m <= 2:
        raise ValueError("the three-term construction is only defined for m > 2")
    if i in (0, 1, 2):
        return solve_delta_coeffs(i, m, (1, 2, 3), (0, 1, 2))
    if i in (m, m + 1, m + 2):
        return solve_delta_coeffs(i, m, (m + 1, m + 2, m + 3), (m, m + 1, m + 2))
    raise ValueError(f"index {i} not in the index set for m={m}")


def g_from_coeffs(coeffs, basis_js, a: complex) -> AnalyticFn:
    """``sum_j c_j f_{j,a}``; ``Fraction`` coefficients stay exact in extended precision."""
    return Sum(tuple(Product((Const(c), TestFn(j, a))) for c, j in zip(coeffs, basis_js) if c != 0))


def g_ia(i: int, a: complex, m: int, basis_js=None) -> AnalyticFn:
    """``g_{i,a} = sum_j c_j f_{j,a}`` with the square-system coefficients."""
    a = complex(a)
    if a == 0:
        raise DomainError("g_{i,a} is only defined for a != 0")
    if abs(a) >= 1:
        raise DomainError(f"|a| must be < 1, got {a}")
    sol = solve_delta_coeffs(i, m, basis_js)
    return g_from_coeffs(sol.exact, sol.basis_js, a)


@dataclass(frozen=True)
class DeltaReport:
    i: int
    a: complex
    index_set: tuple
    mismatches: dict  # k -> scaled mismatch
    max_mismatch: float
    tolerance: float
    satisfied: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "a": [self.a.real, self.a.imag],
            "index_set": list(self.index_set),
            "mismatches": {str(k): v for k, v in self.mismatches.items()},
            "max_mismatch": self.max_mismatch,
            "satisfied": list(self.satisfied),
            "passed": self.passed,
        }


def verify_delta(
    g: AnalyticFn,
    i: int,
    a: complex,
    m: int,
    tolerance: float = 1e-10,
    ks=None,
    precision: str = "auto",
) -> DeltaReport:
    """Compare ``g^{(k)}(a)`` with ``delta_{ik} conj(a)^k / (1-|a|^2)^k`` via jets.

    Mismatches are scaled by ``(1-|a|^2)^k`` so every order is measured on the
    same footing.  ``precision="auto"`` switches to extended precision for
    ``m > 2``: the six-term sums cancel terms of size up to ``1e10`` at
    ``m = 6``, which double precision cannot resolve to ``1e-10``.
    """
    a = complex(a)
    ks = tuple(ks) if ks is not None else index_set(m)
    if precision == "auto":
        precision = "extended" if (m > 2 or max(ks) > 8) else "double"
    jet = eval_jet(g, a, max(ks), precision=precision)
    if precision == "extended":
        ctx = mp()
        a_w = ctx.mpc(a)
        s = 1 - abs(a_w) ** 2
        conj = ctx.conj(a_w)
    else:
        a_w, s, conj = a, 1 - abs(a) ** 2, a.conjugate()
    mism = {}
    for k in ks:
        got = np.asarray(jet.derivative(k), dtype=object).reshape(-1)[0]
        want = (conj**k / s**k) if k == i else 0
        mism[k] = float(abs(got - want) * s**k)
    ok = tuple(k for k in ks if mism[k] <= tolerance)
    worst = max(mism.values())
    return DeltaReport(i, a, ks, mism, worst, tolerance, ok, worst <= tolerance)
