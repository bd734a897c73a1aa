"""Sup-type and integral norms on the disk.

Zygmund-type seminorm ``sup (1-|z|^2)^alpha |f''(z)|`` and the integral
surrogate ``|f(0)| + |f'(0)| + int_D |f''| dA`` for the minimal Mobius
invariant space.  ``dA`` is Lebesgue measure divided by pi, so the disk has
unit mass; this only moves constants.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, NonFiniteError
from ..precision import to_real
from .expr import AnalyticFn, eval_jet
from .grid import DiskGrid

CONVERGED_RTOL = 1e-3
GROWTH_FACTOR = 2.0
TRACE_ATOL = 1e-12


@dataclass(frozen=True)
class NormEstimate:
    value: float
    attained_at: complex | None = None
    refinement_trace: tuple = ()
    converged: bool = True

    @property
    def verdict(self) -> str:
        return trace_verdict(self.refinement_trace)

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "refinement_trace": list(self.refinement_trace),
            "converged": self.converged,
            "verdict": self.verdict,
        }
        if self.attained_at is not None:
            d["attained_at"] = [self.attained_at.real, self.attained_at.imag]
        return d


def trace_converged(trace: Sequence[float], rtol: float = CONVERGED_RTOL) -> bool:
    if len(trace) < 2:
        return True
    a, b = trace[-2], trace[-1]
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(b - a) <= rtol * abs(b) + TRACE_ATOL


def trace_verdict(trace: Sequence[float]) -> str:
    """Three-valued finiteness verdict for a refinement trace.

    ``bounded`` when the last two entries agree to ``CONVERGED_RTOL``;
    ``unbounded`` when each of the last two steps grew by at least
    ``GROWTH_FACTOR``; ``inconclusive`` otherwise.
    """
    if trace_converged(trace):
        return "bounded"
    if len(trace) >= 3:
        a, b, c = trace[-3:]
        if a > TRACE_ATOL and b >= GROWTH_FACTOR * a and c >= GROWTH_FACTOR * b:
            return "unbounded"
    if not math.isfinite(trace[-1]):
        return "unbounded"
    return "inconclusive"


def weight(z: np.ndarray, alpha: float) -> np.ndarray:
    """``(1 - |z|^2)^alpha`` computed as ``((1-|z|)(1+|z|))^alpha``."""
    r = to_real(np.abs(z))
    return ((1 - r) * (1 + r)) ** alpha


def _check_finite(vals: np.ndarray, pts: np.ndarray) -> None:
    bad = ~np.isfinite(vals)
    if np.any(bad):
        p = complex(pts.reshape(-1)[np.argmax(bad.reshape(-1))])
        raise NonFiniteError(f"non-finite evaluation at z = {p}", point=p)


def _local_refine(
    fn: Callable[[np.ndarray], np.ndarray],
    grid: DiskGrid,
    best: complex,
    ridx: int,
    r_cap: float,
    rounds: int = 8,
    size: int = 7,
) -> tuple[float, complex]:
    """Zoom search in ``(-log(1-r), theta)`` around a grid maximiser."""
    t_of = lambda r: -math.log1p(-r)
    i_lo = max(ridx - 1, 0)
    i_hi = min(ridx + 1, len(grid.radii) - 1)
    t_lo = t_of(grid.radii[i_lo])
    t_hi = min(t_of(grid.radii[i_hi]), t_of(r_cap))
    th0 = math.atan2(best.imag, best.real)
    dth = grid.angle_step(ridx) if grid.radii[ridx] > 0 else math.pi
    th_lo, th_hi = th0 - dth, th0 + dth
    best_val, best_z = -math.inf, best
    for _ in range(rounds):
        if t_hi < t_lo:
            break
        ts = np.linspace(t_lo, t_hi, size)
        ths = np.linspace(th_lo, th_hi, size)
        rr = -np.expm1(-ts)
        z = (rr[:, None] * np.exp(1j * ths)[None, :]).reshape(-1)
        vals = to_real(fn(z))
        _check_finite(vals, z)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_z = float(vals[k]), complex(z[k])
        it, ith = divmod(k, size)
        dt = (t_hi - t_lo) / (size - 1)
        dh = (th_hi - th_lo) / (size - 1)
        t_lo, t_hi = max(ts[it] - dt, t_lo), min(ts[it] + dt, t_hi)
        th_lo, th_hi = ths[ith] - dh, ths[ith] + dh
    return best_val, best_z


def sup_estimate(
    fn: Callable[[np.ndarray], np.ndarray],
    grid: DiskGrid,
    *,
    values: np.ndarray | None = None,
    local: bool = True,
) -> NormEstimate:
    """Grid sup of a non-negative function with a per-level trace.

    Trace entry ``l`` is the running maximum over grid points with
    ``1 - |z| >= floors[l]`` plus a local zoom around that level's maximiser,
    so the trace is non-decreasing and its growth exposes divergence at the
    boundary.
    """
    vals = to_real(fn(grid.points)) if values is None else np.asarray(values, dtype=float)
    _check_finite(vals, grid.points)
    trace = []
    best_val, best_z = -math.inf, 0j
    refined: dict = {}  # (grid index, cap) -> zoom result; levels often share both
    for lvl in range(grid.n_levels):
        mask = grid.level <= lvl
        if not np.any(mask):
            trace.append(max(best_val, 0.0))
            continue
        idx = np.flatnonzero(mask)
        k = idx[int(np.argmax(vals[idx]))]
        if vals[k] > best_val:
            best_val, best_z = float(vals[k]), complex(grid.points[k])
        if local:
            ridx = int(grid.radius_index[k])
            cap = min(grid.level_cap(lvl), float(grid.radii[min(ridx + 1, len(grid.radii) - 1)]))
            key = (int(k), cap)
            if key not in refined:
                refined[key] = _local_refine(fn, grid, complex(grid.points[k]), ridx, cap)
            lv, lz = refined[key]
            if lv > best_val:
                best_val, best_z = lv, lz
        trace.append(best_val)
    trace = tuple(trace)
    return NormEstimate(best_val, best_z, trace, trace_converged(trace))


def second_derivative_weighted(f: AnalyticFn, alpha: float, precision: str = "double") -> Callable:
    def fn(z):
        d2 = eval_jet(f, z, 2, precision=precision).derivative(2)
        return weight(z, alpha) * to_real(np.abs(d2))

    return fn


def zygmund_seminorm(f: AnalyticFn, alpha: float, grid: DiskGrid, precision: str = "double") -> NormEstimate:
    """``sup_z (1-|z|^2)^alpha |f''(z)|`` over the grid, with local refinement."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return sup_estimate(second_derivative_weighted(f, alpha, precision), grid)


def value_and_slope_at_zero(f: AnalyticFn, precision: str = "double") -> float:
    j = eval_jet(f, 0j, 1, precision=precision)
    return float(abs(complex(j.coeffs[0]))) + float(abs(complex(j.coeffs[1])))


def zygmund_norm(f: AnalyticFn, alpha: float, grid: DiskGrid, precision: str = "double") -> NormEstimate:
    """``|f(0)| + |f'(0)| + zygmund_seminorm``."""
    base = value_and_slope_at_zero(f, precision)
    s = zygmund_seminorm(f, alpha, grid, precision)
    trace = tuple(base + t for t in s.refinement_trace)
    return NormEstimate(base + s.value, s.attained_at, trace, trace_converged(trace))


# --- quadrature -------------------------------------------------------------


@dataclass(frozen=True)
class QuadConfig:
    """Polar quadrature over the disk.

    Radial annuli ``[1 - 2^{-n}, 1 - 2^{-n-1}]`` for ``n < depth`` plus a last
    annulus reaching ``r = 1``; Gauss-Legendre with ``gl_nodes`` points in ``r``
    on each; periodic trapezoid in angle, doubled per annulus until the annulus
    integral settles to ``angle_rtol``.  :meth:`doubled` is the refinement
    step used for the convergence trace.
    """

    gl_nodes: int = 8
    depth: int = 16
    min_angles: int = 64
    max_angles: int = 2**16
    angle_rtol: float = 1e-8
    agreements: int = 1
    levels: int = 2

    def doubled(self) -> QuadConfig:
        return replace(self, gl_nodes=2 * self.gl_nodes, min_angles=2 * self.min_angles)

    def to_dict(self) -> dict:
        return asdict(self)


def _annulus_edges(depth: int) -> np.ndarray:
    inner = 1.0 - 2.0 ** (-np.arange(0, depth + 1, dtype=float))
    inner[0] = 0.0
    return np.append(inner, 1.0)


def disk_integral(g: Callable[[np.ndarray], np.ndarray], quad: QuadConfig | None = None) -> float:
    """``int_D g dA`` with ``dA`` normalised to unit mass (Lebesgue / pi).

    The trapezoid count of each annulus starts from half the count the
    previous annulus settled at (integrands vary continuously in ``r``) and
    doubles until ``agreements`` successive doublings agree to ``angle_rtol``.
    """
    q = quad or QuadConfig()
    x, w = np.polynomial.legendre.leggauss(q.gl_nodes)
    edges = _annulus_edges(q.depth)
    total = 0.0
    prev_n = q.min_angles
    for r0, r1 in zip(edges[:-1], edges[1:]):
        rr = 0.5 * (r1 - r0) * x + 0.5 * (r1 + r0)
        wr = 0.5 * (r1 - r0) * w * rr
        n = int(max(q.min_angles, prev_n // 2))
        theta = 2 * np.pi * np.arange(n) / n
        z = rr[:, None] * np.exp(1j * theta)[None, :]
        vals = to_real(g(z.reshape(-1))).reshape(z.shape)
        _check_finite(vals, z)
        sums = vals.sum(axis=1)
        est = float(wr @ (sums / n)) * 2 * np.pi
        agreed = 0
        while n < q.max_angles and agreed < q.agreements:
            theta = 2 * np.pi * (np.arange(n) + 0.5) / n
            z = rr[:, None] * np.exp(1j * theta)[None, :]
            vals = to_real(g(z.reshape(-1))).reshape(z.shape)
            _check_finite(vals, z)
            sums = sums + vals.sum(axis=1)
            n *= 2
            new = float(wr @ (sums / n)) * 2 * np.pi
            agreed = agreed + 1 if abs(new - est) <= q.angle_rtol * abs(new) + 1e-300 else 0
            est = new
        prev_n = n
        total += est
    return total / math.pi


def b1_surrogate_norm(f: AnalyticFn, quad: QuadConfig | None = None, precision: str = "double") -> NormEstimate:
    """``|f(0)| + |f'(0)| + int_D |f''| dA`` with a doubled-resolution trace."""
    q = quad or QuadConfig()
    base = value_and_slope_at_zero(f, precision)

    def g(z):
        return to_real(np.abs(eval_jet(f, z, 2, precision=precision).derivative(2)))

    trace = []
    cfg = q
    for _ in range(max(q.levels, 1)):
        trace.append(base + disk_integral(g, cfg))
        cfg = cfg.doubled()
    trace = tuple(trace)
    return NormEstimate(trace[-1], None, trace, trace_converged(trace))


def atomic_l1_bound(atoms: Sequence[tuple[complex, complex]]) -> float:
    """``sum |c_k|``: an upper bound for the norm of ``sum c_k sigma_{a_k}``."""
    if len(atoms) == 0:
        raise ValueError("atomic decomposition needs at least one atom")
    for _, a in atoms:
        if abs(a) >= 1:
            raise DomainError(f"atom parameter must satisfy |a| < 1, got {a}")
    return float(sum(abs(c) for c, _ in atoms))
