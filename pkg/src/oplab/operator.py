"""The weighted composition-differentiation operator ``T f = u f(phi) + v f^{(m)}(phi)``.

Besides applying ``T`` to expression trees, this module exposes the
coefficient functions ``I_k`` that carry ``(Tf)''``:

    (Tf)''(z) = sum_k I_k(z) f^{(k)}(phi(z))

with ``I_0 = u''``, ``I_1 = 2u'phi' + u phi''``, ``I_2 = u phi'^2`` and the same
three expressions in ``v`` attached to orders ``m, m+1, m+2``.  For
``m <= 2`` the orders collide and the colliding terms are summed.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .funcspace.expr import (
    AnalyticFn,
    Compose,
    Const,
    Derivative,
    MobiusSigma,
    Product,
    Sum,
    TestFn,
    Var,
    as_fn,
    eval_jet,
)
from .jet import jet_div
from .funcspace.grid import DiskGrid
from .funcspace.norms import NormEstimate, sup_estimate, trace_converged, weight
from .precision import check_precision, mp, to_complex, to_real, to_work

__all__ = [
    "OperatorSpec",
    "CoefficientBundle",
    "IdentityReport",
    "SamplerConfig",
    "apply",
    "coefficient_bundle",
    "image_derivatives",
    "second_derivative_identity_check",
    "first_derivative_at_zero",
    "first_derivative_check",
    "check_self_map",
    "GridBundle",
    "image_norm",
    "testfn_family_jets",
    "testfn_image_norms",
    "sample_family",
    "op_norm_lower_bound",
    "thread_count",
]


def thread_count() -> int:
    """Worker cap from ``OPLAB_THREADS`` (default: up to 4 CPUs)."""
    raw = os.environ.get("OPLAB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(f"OPLAB_THREADS must be a positive integer, got {raw!r}") from exc
        if n < 1:
            raise ValueError(f"OPLAB_THREADS must be a positive integer, got {raw!r}")
        return n
    return max(1, min(4, os.cpu_count() or 1))


def parallel_map(fn, items) -> list:
    """Order-preserving map honouring :func:`thread_count`."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class OperatorSpec:
    """The symbols ``(u, v, phi)`` together with order ``m`` and weight exponent ``alpha``.

    Attributes:
        u: Multiplier of the composition term.
        v: Multiplier of the differentiated composition term.
        phi: Analytic self-map of the disk.
        m: Order of the derivative, at least 1.
        alpha: Exponent of the target weight ``(1 - |z|^2)^alpha``.
        name: Label used in reports.
    """

    u: AnalyticFn
    v: AnalyticFn
    phi: AnalyticFn
    m: int
    alpha: float
    name: str = ""

    def __post_init__(self):
        for attr in ("u", "v", "phi"):
            object.__setattr__(self, attr, as_fn(getattr(self, attr)))
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValueError(f"operator order m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        alpha = float(self.alpha)
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ValueError(f"alpha must be a positive real, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        # fail fast on symbols that already leave the disk at the origin
        phi0 = complex(eval_jet(self.phi, 0j, 0).value)
        if abs(phi0) >= 1:
            raise DomainError(f"phi(0) = {phi0} is not in the open unit disk")

    @property
    def index_set(self) -> tuple[int, ...]:
        m = self.m
        return tuple(sorted({0, 1, 2, m, m + 1, m + 2}))

    def scaled(self, c: complex) -> OperatorSpec:
        """The operator with symbols ``(c u, c v, phi)``."""
        c = complex(c)
        return OperatorSpec(
            Product((Const(c), self.u)), Product((Const(c), self.v)), self.phi, self.m, self.alpha, self.name
        )

    def describe(self) -> dict:
        return {
            "name": self.name,
            "u": str(self.u),
            "v": str(self.v),
            "phi": str(self.phi),
            "m": self.m,
            "alpha": self.alpha,
        }


def apply(T: OperatorSpec, f: AnalyticFn) -> AnalyticFn:
    """The tree ``u (f o phi) + v (f^{(m)} o phi)``.

    The derivative node is realised at evaluation time by a jet of ``f`` of
    order ``m`` plus the requested order.
    """
    f = as_fn(f)
    return Sum(
        (
            Product((T.u, Compose(f, T.phi))),
            Product((T.v, Compose(Derivative(f, T.m), T.phi))),
        )
    )


@dataclass(frozen=True, eq=False)
class CoefficientBundle:
    """The coefficient functions at a point (or a batch of points).

    Attributes:
        at: Evaluation point(s).
        entries: Map from derivative order ``k`` to ``I_k(at)``, colliding
            orders summed.
        phi: ``phi(at)``.
        terms: The six unmerged terms as ``(k, label, value)`` triples.
    """

    at: np.ndarray
    entries: dict
    phi: np.ndarray
    terms: tuple = field(default=())

    def keys(self) -> tuple[int, ...]:
        return tuple(self.entries)

    def __getitem__(self, k: int):
        return self.entries[k]


def coefficient_bundle(T: OperatorSpec, z, precision: str = "double") -> CoefficientBundle:
    """``I_k(z)`` for every ``k`` in the merged index set.

    Args:
        T: The operator.
        z: A point or an array of points in the disk.
        precision: ``"double"`` or ``"extended"``.

    Returns:
        The bundle; values have the shape of ``z``.
    """
    check_precision(precision)
    zw = to_work(z, precision)
    u = eval_jet(T.u, zw, 2, precision=precision)
    v = eval_jet(T.v, zw, 2, precision=precision)
    p = eval_jet(T.phi, zw, 2, precision=precision)
    u0, u1, u2 = (u.derivative(k) for k in range(3))
    v0, v1, v2 = (v.derivative(k) for k in range(3))
    p0, p1, p2 = (p.derivative(k) for k in range(3))
    m = T.m
    terms = (
        (0, "u''", u2),
        (1, "2u'phi' + u phi''", 2 * u1 * p1 + u0 * p2),
        (2, "u phi'^2", u0 * p1 * p1),
        (m, "v''", v2),
        (m + 1, "2v'phi' + v phi''", 2 * v1 * p1 + v0 * p2),
        (m + 2, "v phi'^2", v0 * p1 * p1),
    )
    entries: dict = {}
    for k, _, val in terms:
        entries[k] = entries[k] + val if k in entries else val
    entries = {k: entries[k] for k in sorted(entries)}
    return CoefficientBundle(zw, entries, p0, terms)


def image_derivatives(bundle: CoefficientBundle, f: AnalyticFn) -> np.ndarray:
    """``sum_k I_k f^{(k)}(phi)`` at the bundle's points."""
    top = max(bundle.entries)
    fj = eval_jet(f, bundle.phi, top)
    acc = None
    for k, ik in bundle.entries.items():
        term = ik * fj.derivative(k)
        acc = term if acc is None else acc + term
    return acc


@dataclass(frozen=True)
class IdentityReport:
    abs_mismatch: float
    rel_mismatch: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def second_derivative_identity_check(
    T: OperatorSpec, f: AnalyticFn, z, tolerance: float = 1e-9, precision: str = "double"
) -> IdentityReport:
    """Compare the jet second derivative of ``T f`` with the coefficient expansion.

    Path one differentiates the tree ``apply(T, f)`` as a whole; path two
    assembles ``sum_k I_k f^{(k)}(phi)`` from the bundle.  ``passed`` uses the
    relative mismatch, floored at 1 in the denominator.
    """
    zw = to_work(z, precision)
    direct = eval_jet(apply(T, f), zw, 2, precision=precision).derivative(2)
    expanded = image_derivatives(coefficient_bundle(T, zw, precision), f)
    diff = to_real(np.abs(direct - expanded))
    scale = np.maximum(to_real(np.abs(direct)), 1.0)
    abs_mm = float(np.max(diff, initial=0.0))
    rel_mm = float(np.max(diff / scale, initial=0.0))
    return IdentityReport(abs_mm, rel_mm, tolerance, rel_mm <= tolerance)


def first_derivative_at_zero(T: OperatorSpec, f: AnalyticFn, precision: str = "double") -> complex:
    """``u'(0) f(phi0) + u(0) phi'(0) f'(phi0) + v'(0) f^{(m)}(phi0) + v(0) phi'(0) f^{(m+1)}(phi0)``."""
    zero = to_work(0j, precision)
    u = eval_jet(T.u, zero, 1, precision=precision)
    v = eval_jet(T.v, zero, 1, precision=precision)
    p = eval_jet(T.phi, zero, 1, precision=precision)
    fj = eval_jet(f, p.value, T.m + 1, precision=precision)
    m = T.m
    val = (
        u.derivative(1) * fj.derivative(0)
        + u.value * p.derivative(1) * fj.derivative(1)
        + v.derivative(1) * fj.derivative(m)
        + v.value * p.derivative(1) * fj.derivative(m + 1)
    )
    return complex(np.asarray(val, dtype=object).reshape(-1)[0]) if precision == "extended" else complex(val)


def first_derivative_check(T: OperatorSpec, f: AnalyticFn, tolerance: float = 1e-12) -> IdentityReport:
    """Four-term formula for ``(Tf)'(0)`` against the jet derivative of ``apply(T, f)``."""
    formula = first_derivative_at_zero(T, f)
    direct = complex(eval_jet(apply(T, f), 0j, 1).derivative(1))
    diff = abs(formula - direct)
    rel = diff / max(abs(direct), 1.0)
    return IdentityReport(diff, rel, tolerance, rel <= tolerance)


def check_self_map(T: OperatorSpec, points: np.ndarray) -> float:
    """Largest ``|phi|`` over ``points``; raise if ``phi`` leaves the disk there."""
    vals = to_complex(eval_jet(T.phi, points, 0).value)
    mods = np.abs(vals)
    if not np.all(np.isfinite(mods)):
        k = int(np.argmax(~np.isfinite(mods)))
        raise DomainError(f"phi is not finite at z = {complex(points.reshape(-1)[k])}")
    k = int(np.argmax(mods))
    if mods.reshape(-1)[k] >= 1:
        raise DomainError(
            f"phi does not map the disk into itself: |phi(z)| = {mods.reshape(-1)[k]:.6g} at z = {complex(points.reshape(-1)[k])}"
        )
    return float(mods.max(initial=0.0))


def testfn_family_jets(a: complex, js, w: np.ndarray, order: int) -> dict:
    """Jets of ``f_{j,a}`` at ``w`` for several exponents, sharing one series division.

    Equivalent to evaluating each :class:`~oplab.funcspace.expr.TestFn` node,
    but ``1 / (1 - conj(a) w)`` and its powers are built once.
    """
    js = sorted(set(int(j) for j in js))
    a = complex(a)
    if a == 0:
        return {j: eval_jet(Const(1), w, order) for j in js}
    ext = w.dtype == object
    if ext:
        a_w = mp().mpc(a)
        s = 1 - abs(a_w) ** 2
        abar = mp().conj(a_w)
    else:
        s = 1.0 - abs(a) ** 2
        abar = a.conjugate()
    x = eval_jet(Var(), w, order)
    one = eval_jet(Const(1), w, order)
    base = jet_div(one, 1 - abar * x)
    out = {}
    power, p = None, 0
    for j in js:
        while p < j:
            power = base if power is None else power * base
            p += 1
        out[j] = power * (s**j)
    return out


class GridBundle:
    """Coefficient bundle cached on a grid, for repeated evaluation of ``||T f||``.

    Constructing it checks that ``phi`` maps every grid point into the disk.
    """

    def __init__(self, T: OperatorSpec, grid: DiskGrid, precision: str = "double"):
        self.T = T
        self.grid = grid
        self.precision = check_precision(precision)
        self.sup_phi = check_self_map(T, grid.points)
        self.bundle = coefficient_bundle(T, grid.points, precision)
        self.weight = weight(grid.points, T.alpha)

    def weighted_image(self, f: AnalyticFn) -> np.ndarray:
        """``(1 - |z|^2)^alpha |(Tf)''(z)|`` at every grid point."""
        return self.weight * to_real(np.abs(image_derivatives(self.bundle, f)))

    def weighted_testfn_images(self, a: complex, js) -> dict:
        """:meth:`weighted_image` of ``f_{j,a}`` for every ``j`` in ``js``."""
        top = max(self.bundle.entries)
        jets = testfn_family_jets(a, js, self.bundle.phi, top)
        out = {}
        for j, fj in jets.items():
            acc = None
            for k, ik in self.bundle.entries.items():
                term = ik * fj.derivative(k)
                acc = term if acc is None else acc + term
            out[j] = self.weight * to_real(np.abs(acc))
        return out

    def pointwise(self, f: AnalyticFn):
        """The same quantity at arbitrary points (used by local refinement)."""
        T, precision = self.T, self.precision

        def fn(z):
            vals = image_derivatives(coefficient_bundle(T, z, precision), f)
            return weight(z, T.alpha) * to_real(np.abs(vals))

        return fn


def image_norm(
    T: OperatorSpec,
    f: AnalyticFn,
    grid: DiskGrid,
    cache: GridBundle | None = None,
    precision: str = "double",
) -> NormEstimate:
    """``||T f||`` in the Zygmund-type norm, via the coefficient expansion.

    Args:
        T: The operator.
        f: Function to map.
        grid: Sample grid for the sup.
        cache: Optional precomputed bundle on ``grid``; its precision wins.
        precision: Working precision when no cache is given.

    Returns:
        The norm estimate; its trace adds ``|Tf(0)| + |(Tf)'(0)|`` to the
        seminorm trace.
    """
    if cache is None or cache.grid is not grid or cache.T is not T:
        cache = GridBundle(T, grid, precision)
    return _norm_from_values(T, f, cache, cache.weighted_image(f))


def _norm_from_values(T: OperatorSpec, f: AnalyticFn, cache: GridBundle, values: np.ndarray) -> NormEstimate:
    j = eval_jet(apply(T, f), 0j, 1)
    base = float(abs(complex(j.coeffs[0]))) + float(abs(complex(j.coeffs[1])))
    s = sup_estimate(cache.pointwise(f), cache.grid, values=values)
    trace = tuple(base + t for t in s.refinement_trace)
    return NormEstimate(base + s.value, s.attained_at, trace, trace_converged(trace))


def testfn_image_norms(T: OperatorSpec, a: complex, js, cache: GridBundle) -> dict:
    """``||T f_{j,a}||`` for several ``j`` at one parameter ``a``."""
    images = cache.weighted_testfn_images(a, js)
    return {j: _norm_from_values(T, TestFn(j, a), cache, vals) for j, vals in images.items()}


@dataclass(frozen=True)
class SamplerConfig:
    """Deterministic family of atomic combinations ``sum c_k sigma_{a_k}``, ``sum |c_k| = 1``.

    Attributes:
        radii: Moduli the atoms are placed at.
        angles_per_radius: Fibonacci-lattice angles used at each radius.
        combos: Random 2- and 3-atom combinations added after the single atoms.
        max_atoms: Upper limit on atoms per function.
        seed: RNG seed for the combinations.
    """

    radii: tuple = (0.5, 0.9, 0.99, 0.999)
    angles_per_radius: int = 4
    combos: int = 8
    max_atoms: int = 3
    seed: int = 20240611

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radii"] = list(self.radii)
        return d


_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def sample_family(config: SamplerConfig | None = None) -> list[tuple[tuple[complex, complex], ...]]:
    """Atom lists ``((c_1, a_1), ...)`` with unit ``l^1`` mass.

    Single atoms come first (every radius, golden-angle spaced), then random
    combinations of 2 to ``max_atoms`` atoms drawn from that pool.
    """
    cfg = config or SamplerConfig()
    pool = []
    idx = 0
    for r in cfg.radii:
        for _ in range(cfg.angles_per_radius):
            pool.append(r * complex(math.cos(idx * _GOLDEN_ANGLE), math.sin(idx * _GOLDEN_ANGLE)))
            idx += 1
    family = [((1 + 0j, a),) for a in pool]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.combos):
        n = int(rng.integers(2, max(cfg.max_atoms, 2) + 1))
        picks = rng.choice(len(pool), size=n, replace=False)
        w = rng.random(n) + 0.1
        w = w / w.sum()
        phases = np.exp(2j * np.pi * rng.random(n))
        family.append(tuple((complex(wi * ph), pool[int(p)]) for wi, ph, p in zip(w, phases, picks)))
    return family


def _atoms_fn(atoms) -> AnalyticFn:
    return Sum(tuple(Product((Const(c), MobiusSigma(a))) for c, a in atoms))


def op_norm_lower_bound(
    T: OperatorSpec, grid: DiskGrid, config: SamplerConfig | None = None, cache: GridBundle | None = None
) -> NormEstimate:
    """``max ||T f||`` over a deterministic family of functions with atomic norm at most 1.

    The trace runs over the atom radii: entry ``l`` is the maximum over
    functions whose atoms all satisfy ``|a| <= radii[l]``.  Growth along it is
    the signature of an unbounded operator.
    """
    cfg = config or SamplerConfig()
    family = sample_family(cfg)
    if cache is None or cache.grid is not grid or cache.T is not T:
        cache = GridBundle(T, grid)
    norms = parallel_map(lambda atoms: image_norm(T, _atoms_fn(atoms), grid, cache).value, family)
    reach = [max(abs(a) for _, a in atoms) for atoms in family]
    trace = []
    for r in cfg.radii:
        vals = [n for n, rr in zip(norms, reach) if rr <= r + 1e-12]
        trace.append(max(vals, default=0.0))
    trace = tuple(trace)
    return NormEstimate(trace[-1], None, trace, trace_converged(trace))
