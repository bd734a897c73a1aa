"""Numerical boundedness verdicts plus the essential-norm and compactness quantities built on them.

Quantities, for ``k`` in the merged index set and ``j`` in the exponent list
of the active delta system:

* ``Q_k = sup (1-|z|^2)^alpha |I_k(z)| / (1-|phi(z)|^2)^k``
* ``U_j = sup (1-|z|^2)^alpha |I_j(z)|``
* ``S_j = sup_a ||T f_{j,a}||``
* ``E_j = limsup_{|a| -> 1} ||T f_{j,a}||``
* ``F_k = limsup_{|phi(z)| -> 1} Q_k(z)``

Every sup carries a refinement trace over boundary floors and every limsup a
per-annulus trend over the tail ``|.| = 1 - 2^{-n}``; verdicts are read off
those traces and are three-valued.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import UnboundedOperatorError
from .funcspace.expr import AnalyticFn, Const, Dilate, MobiusSigma, Product, Sum
from .funcspace.grid import GridConfig, make_grid
from .funcspace.norms import NormEstimate, sup_estimate, trace_verdict, weight
from .operator import (
    GridBundle,
    OperatorSpec,
    SamplerConfig,
    coefficient_bundle,
    image_norm,
    op_norm_lower_bound,
    parallel_map,
    sample_family,
    testfn_image_norms,
)
from .precision import to_real
from .testfns import default_basis

__all__ = [
    "AnalysisConfig",
    "TailConfig",
    "CriterionReport",
    "Analysis",
    "combine_verdicts",
    "q_values",
    "criterion_iii",
    "criterion_ii",
    "a_grid",
    "third_split_check",
    "essential_quantities",
    "compactness_verdict",
    "dilation_residual",
    "radial_profile",
    "profile_csv",
    "analyze",
]

VANISH_ABS = 1e-6
DECAY_RATIO = 0.75
FLAT_RATIO = 0.9


@dataclass(frozen=True)
class TailConfig:
    """Geometric tail ``1 - 2^{-n}``, ``n = n0 .. n_max``, for limsup trends.

    Attributes:
        n0: First tail index.
        n_max: Deepest tail index (16 in double, 24 in extended precision).
        angles: Test-function parameters per annulus, spaced by ``2 pi / angles``.
        window: The reported limsup is the max over this many deepest annuli.
    """

    n0: int = 4
    n_max: int = 16
    angles: int = 4
    window: int = 3

    def __post_init__(self):
        if not 1 <= self.n0 < self.n_max:
            raise ValueError(f"tail indices must satisfy 1 <= n0 < n_max, got {self.n0}, {self.n_max}")
        if self.angles < 1 or self.window < 1:
            raise ValueError("angles and window must be positive")

    @property
    def ns(self) -> tuple[int, ...]:
        return tuple(range(self.n0, self.n_max + 1))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything an analysis run depends on; embedded verbatim in reports.

    Attributes:
        grid: Sample grid in ``z``.
        a_floor: Smallest ``1 - |a|`` on the test-function grid.
        a_angles: Angles per radius on the test-function grid.
        tail: Limsup tail.
        sampler: Atomic family for the operator-norm lower bound.
        dilation_radii: Radii ``r`` for the residuals ``||T - T K_r||``.
        precision: ``"double"`` or ``"extended"``.
    """

    grid: GridConfig = field(default_factory=GridConfig)
    a_floor: float = 1e-6
    a_angles: int = 8
    tail: TailConfig = field(default_factory=TailConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    dilation_radii: tuple = (0.5, 0.9, 0.99)
    precision: str = "double"

    @classmethod
    def for_precision(cls, precision: str, **overrides) -> AnalysisConfig:
        """Defaults for a precision mode: the extended tail goes to ``n = 24``."""
        if precision == "extended":
            overrides.setdefault("tail", TailConfig(n_max=24))
            overrides.setdefault("grid", GridConfig(floor=1e-9))
        return cls(precision=precision, **overrides)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "a_floor": self.a_floor,
            "a_angles": self.a_angles,
            "tail": self.tail.to_dict(),
            "sampler": self.sampler.to_dict(),
            "dilation_radii": list(self.dilation_radii),
            "precision": self.precision,
        }


def combine_verdicts(verdicts) -> str:
    """``unbounded`` if any is, ``bounded`` if all are, ``inconclusive`` otherwise."""
    verdicts = list(verdicts)
    if any(v == "unbounded" for v in verdicts):
        return "unbounded"
    if all(v == "bounded" for v in verdicts):
        return "bounded"
    return "inconclusive"


class Analysis:
    """Per-operator cache of the grid with its coefficient bundle, plus test-function norms."""

    def __init__(self, T: OperatorSpec, config: AnalysisConfig | None = None):
        self.T = T
        self.config = config or AnalysisConfig()
        self.grid = make_grid(self.config.grid)
        self.cache = GridBundle(T, self.grid, self.config.precision)
        self._norms: dict = {}

    def test_norms(self, pairs) -> list[float]:
        """``||T f_{j,a}||`` for ``(j, a)`` pairs, memoised; one shared pass per ``a``."""
        pairs = [(int(j), complex(a)) for j, a in pairs]
        todo: dict = {}
        for j, a in pairs:
            if (j, a) not in self._norms:
                todo.setdefault(a, set()).add(j)
        items = list(todo.items())
        results = parallel_map(lambda item: testfn_image_norms(self.T, item[0], item[1], self.cache), items)
        for (a, _), res in zip(items, results):
            for j, est in res.items():
                self._norms[(j, a)] = est.value
        return [self._norms[p] for p in pairs]


def _as_analysis(T, config) -> Analysis:
    if isinstance(T, Analysis):
        return T
    return Analysis(T, config)


def q_values(cache: GridBundle, k: int, z=None) -> np.ndarray:
    """``Q_k`` integrand at the grid points, or at ``z`` if given."""
    if z is None:
        ik = cache.bundle.entries[k]
        phi = cache.bundle.phi
        w = cache.weight
    else:
        b = coefficient_bundle(cache.T, z, cache.precision)
        ik, phi, w = b.entries[k], b.phi, weight(z, cache.T.alpha)
    rho = to_real(np.abs(phi))
    denom = ((1 - rho) * (1 + rho)) ** k
    return w * to_real(np.abs(ik)) / denom


def _u_values(cache: GridBundle, k: int, z=None) -> np.ndarray:
    if z is None:
        return cache.weight * to_real(np.abs(cache.bundle.entries[k]))
    b = coefficient_bundle(cache.T, z, cache.precision)
    return weight(z, cache.T.alpha) * to_real(np.abs(b.entries[k]))


def criterion_iii(T, config: AnalysisConfig | None = None) -> dict[int, NormEstimate]:
    """Grid sups of ``Q_k`` for every ``k`` in the merged index set, with traces."""
    an = _as_analysis(T, config)
    out = {}
    for k in an.cache.bundle.entries:
        out[k] = sup_estimate(lambda z, k=k: q_values(an.cache, k, z), an.grid, values=q_values(an.cache, k))
    return out


def a_grid(floor: float = 1e-6, angles: int = 8) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Test-function parameters: the origin plus ``angles`` points on each radius.

    Radii are ``0.5`` and the decades ``1 - 10^{-d}`` down to ``floor``.
    Returns the points with their trace levels, plus the level floors.
    """
    floors = []
    d = 1
    while 10.0 ** (-d) >= floor * (1 - 1e-9):
        floors.append(10.0 ** (-d))
        d += 1
    radii = [0.5] + [1 - f for f in floors]
    levels = [0] + list(range(len(floors)))
    pts, lev = [0j], [0]
    theta = 2 * np.pi * np.arange(angles) / angles
    for r, l in zip(radii, levels):
        pts.extend(r * np.exp(1j * theta))
        lev.extend([l] * angles)
    return np.array(pts), np.array(lev), tuple(floors)


@dataclass(frozen=True)
class CriterionII:
    s_sups: dict  # j -> NormEstimate over the a-grid levels
    u_sups: dict  # k -> NormEstimate over the z-grid
    verdict: str


def criterion_ii(T, config: AnalysisConfig | None = None) -> CriterionII:
    """``S_j`` over the test-function grid and ``U_j`` over the sample grid.

    ``S_j``'s trace entry ``l`` is the max of ``||T f_{j,a}||`` over parameters
    with ``1 - |a| >= 10^{-(l+1)}``.
    """
    an = _as_analysis(T, config)
    pts, lev, floors = a_grid(an.config.a_floor, an.config.a_angles)
    js = default_basis(an.T.m)
    pairs = [(j, complex(a)) for j in js for a in pts]
    norms = np.array(an.test_norms(pairs)).reshape(len(js), len(pts))
    s_sups = {}
    for row, j in zip(norms, js):
        trace = tuple(float(row[lev <= l].max()) for l in range(len(floors)))
        best = int(np.argmax(row))
        s_sups[j] = NormEstimate(trace[-1], complex(pts[best]), trace, trace_verdict(trace) == "bounded")
    u_sups = {}
    for k in an.cache.bundle.entries:
        u_sups[k] = sup_estimate(lambda z, k=k: _u_values(an.cache, k, z), an.grid, values=_u_values(an.cache, k))
    verdict = combine_verdicts([e.verdict for e in s_sups.values()] + [e.verdict for e in u_sups.values()])
    return CriterionII(s_sups, u_sups, verdict)


@dataclass(frozen=True)
class SplitReport:
    outer: dict  # k -> sup of Q_k over |phi| > 1/3
    inner: dict  # k -> sup of Q_k over |phi| <= 1/3
    global_: dict  # k -> sup over all grid points
    inner_ratio: dict  # k -> max Q_k / U_k over |phi| <= 1/3
    bound: dict  # k -> (9/8)^k
    passed: bool

    def to_dict(self) -> dict:
        keys = sorted(self.global_)
        return {
            "outer": {str(k): self.outer[k] for k in keys},
            "inner": {str(k): self.inner[k] for k in keys},
            "global": {str(k): self.global_[k] for k in keys},
            "inner_ratio": {str(k): self.inner_ratio[k] for k in keys},
            "bound": {str(k): self.bound[k] for k in keys},
            "passed": self.passed,
        }


def third_split_check(T, config: AnalysisConfig | None = None) -> SplitReport:
    """Split the ``Q_k`` sup at ``|phi| = 1/3`` and bound the inner ratio by ``(9/8)^k``.

    Works on raw grid values so the partition identity is exact.
    """
    an = _as_analysis(T, config)
    rho = to_real(np.abs(an.cache.bundle.phi))
    inner_mask = rho <= 1 / 3
    outer, inner, glob, ratio, bound = {}, {}, {}, {}, {}
    ok = True
    for k in an.cache.bundle.entries:
        q = q_values(an.cache, k)
        u = _u_values(an.cache, k)
        glob[k] = float(q.max(initial=0.0))
        outer[k] = float(q[~inner_mask].max(initial=0.0))
        inner[k] = float(q[inner_mask].max(initial=0.0))
        nz = inner_mask & (u > 0)
        ratio[k] = float((q[nz] / u[nz]).max(initial=0.0))
        bound[k] = (9 / 8) ** k
        ok &= glob[k] == max(outer[k], inner[k])
        ok &= ratio[k] <= bound[k] * (1 + 1e-12)
    return SplitReport(outer, inner, glob, ratio, bound, bool(ok))


def _trend_vanishes(trend, window: int) -> bool:
    """Deepest value below ``VANISH_ABS``, or geometric decay across the window."""
    if trend[-1] <= VANISH_ABS:
        return True
    tail = trend[-window:]
    return all(b <= DECAY_RATIO * a for a, b in zip(tail[:-1], tail[1:]))


def _trend_flat(trend, window: int) -> bool:
    tail = trend[-window:]
    return tail[-1] > VANISH_ABS and min(tail) >= FLAT_RATIO * max(tail)


@dataclass(frozen=True)
class EssentialReport:
    ns: tuple
    e_trace: dict  # j -> per-annulus max of ||T f_{j,a}||
    f_trace: dict  # k -> per-annulus max of Q_k over |phi| in the annulus
    e_limsup: dict
    f_limsup: dict
    populated: tuple  # per annulus: does any grid point have |phi| there?
    empty_tail: bool

    @property
    def max_e(self) -> float:
        return max(self.e_limsup.values(), default=0.0)

    @property
    def max_f(self) -> float:
        return max(self.f_limsup.values(), default=0.0)


def essential_quantities(T, config: AnalysisConfig | None = None, q_verdict: str | None = None) -> EssentialReport:
    """Per-annulus trends of ``E_j`` and ``F_k`` over the geometric tail.

    Raises:
        UnboundedOperatorError: if the ``Q_k`` sups diverge.
    """
    an = _as_analysis(T, config)
    if q_verdict is None:
        q_verdict = combine_verdicts(e.verdict for e in criterion_iii(an).values())
    if q_verdict == "unbounded":
        raise UnboundedOperatorError(
            f"operator {an.T.name or an.T.describe()} is unbounded (Q_k sups diverge); "
            "essential-norm quantities assume a bounded operator"
        )
    tail = an.config.tail
    ns = tail.ns
    js = default_basis(an.T.m)
    theta = 2 * np.pi * np.arange(tail.angles) / tail.angles
    pairs = []
    for j in js:
        for n in ns:
            r = 1 - 2.0 ** (-n)
            pairs.extend((j, complex(r * np.exp(1j * t))) for t in theta)
    vals = np.array(an.test_norms(pairs)).reshape(len(js), len(ns), len(theta))
    e_trace = {j: tuple(float(x) for x in vals[i].max(axis=1)) for i, j in enumerate(js)}

    rho = to_real(np.abs(an.cache.bundle.phi))
    gap = 1 - rho
    populated = []
    bins = []
    for n in ns:
        mask = (gap <= 2.0 ** (-n)) & (gap > 2.0 ** (-n - 1))
        bins.append(mask)
        populated.append(bool(mask.any()))
    deeper = gap <= 2.0 ** (-tail.n0)
    f_trace = {}
    for k in an.cache.bundle.entries:
        q = q_values(an.cache, k)
        f_trace[k] = tuple(float(q[mask].max(initial=0.0)) for mask in bins)
    w = tail.window
    e_lim = {j: max(t[-w:]) for j, t in e_trace.items()}
    f_lim = {k: max(t[-w:]) for k, t in f_trace.items()}
    return EssentialReport(ns, e_trace, f_trace, e_lim, f_lim, tuple(populated), not bool(deeper.any()))


@dataclass(frozen=True)
class CompactnessVerdict:
    via_f: str  # compact | non-compact | inconclusive
    via_e: str
    verdict: str
    agree: bool

    def to_dict(self) -> dict:
        return asdict(self)


def compactness_verdict(ess: EssentialReport, window: int = 3) -> CompactnessVerdict:
    """Read compactness off the ``F_k`` and ``E_j`` trends.

    ``F`` says compact when the tail is empty or every deepest-annulus
    ``F_k`` is at most ``1e-6``, and non-compact when some ``F_k`` trend is
    flat (within 10%) over the window at a nonzero level.  ``E`` says compact
    when every trend is below ``1e-6`` at the deepest annulus or shrinks by at
    least ``DECAY_RATIO`` per annulus across the window, and non-compact when
    some trend is flat over the window.
    """
    if ess.empty_tail or all(t[-1] <= VANISH_ABS for t in ess.f_trace.values()):
        via_f = "compact"
    elif any(_trend_flat(t, window) for t in ess.f_trace.values()):
        via_f = "non-compact"
    else:
        via_f = "inconclusive"
    if all(_trend_vanishes(t, window) for t in ess.e_trace.values()):
        via_e = "compact"
    elif any(_trend_flat(t, window) for t in ess.e_trace.values()):
        via_e = "non-compact"
    else:
        via_e = "inconclusive"
    agree = via_f == via_e
    return CompactnessVerdict(via_f, via_e, via_f if agree else "inconclusive", agree)


def _residual_fn(f: AnalyticFn, r: float) -> AnalyticFn:
    return Sum((f, Product((Const(-1), Dilate(r, f)))))


def dilation_residual(T, config: AnalysisConfig | None = None, family=None) -> dict:
    """``max_f ||T f - T K_r f||`` over the atomic family, for each ``r``."""
    an = _as_analysis(T, config)
    fam = family if family is not None else sample_family(an.config.sampler)
    fns = [Sum(tuple(Product((Const(c), MobiusSigma(a))) for c, a in atoms)) for atoms in fam]
    out = {}
    for r in an.config.dilation_radii:
        vals = parallel_map(lambda f: image_norm(an.T, _residual_fn(f, r), an.grid, an.cache).value, fns)
        out[float(r)] = float(max(vals, default=0.0))
    return out


def radial_profile(T, config: AnalysisConfig | None = None) -> list[tuple[float, int, float]]:
    """Rows ``(r, k, max over the grid circle |z| = r of Q_k)``."""
    an = _as_analysis(T, config)
    rows = []
    for k in an.cache.bundle.entries:
        q = q_values(an.cache, k)
        for i, r in enumerate(an.grid.radii):
            rows.append((float(r), int(k), float(q[an.grid.radius_index == i].max())))
    return rows


def profile_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "k", "q_annulus_max"])
    for r, k, q in rows:
        w.writerow([repr(r), k, repr(q)])
    return buf.getvalue()


def _est(e: NormEstimate) -> dict:
    d = {"value": e.value, "trace": list(e.refinement_trace), "verdict": e.verdict}
    if e.attained_at is not None:
        d["attained_at"] = [e.attained_at.real, e.attained_at.imag]
    return d


@dataclass
class CriterionReport:
    """Serializable collection of everything computed for one operator.

    Sections that were not requested stay ``None`` and are omitted from JSON.
    """

    operator: dict
    config: dict
    q_sups: dict | None = None
    s_sups: dict | None = None
    u_sups: dict | None = None
    split: SplitReport | None = None
    essential: EssentialReport | None = None
    compactness: CompactnessVerdict | None = None
    dilation: dict | None = None
    op_norm_lb: NormEstimate | None = None
    verdicts: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d: dict = {"operator": self.operator, "config": self.config}
        if self.q_sups is not None:
            d["q_sups"] = {str(k): _est(e) for k, e in self.q_sups.items()}
        if self.s_sups is not None:
            d["s_sups"] = {str(j): _est(e) for j, e in self.s_sups.items()}
        if self.u_sups is not None:
            d["u_sups"] = {str(k): _est(e) for k, e in self.u_sups.items()}
        if self.split is not None:
            d["split"] = self.split.to_dict()
        if self.essential is not None:
            ess = self.essential
            d["tail_n"] = list(ess.ns)
            d["e_trace"] = {str(j): list(t) for j, t in ess.e_trace.items()}
            d["f_trace"] = {str(k): list(t) for k, t in ess.f_trace.items()}
            d["e_limsup"] = {str(j): v for j, v in ess.e_limsup.items()}
            d["f_limsup"] = {str(k): v for k, v in ess.f_limsup.items()}
            d["empty_tail"] = ess.empty_tail
            d["essential_bracket"] = {"max_e": ess.max_e, "max_f": ess.max_f, "min_max_e_f": min(ess.max_e, ess.max_f)}
        if self.compactness is not None:
            d["compactness"] = self.compactness.to_dict()
        if self.dilation is not None:
            d["dilation_residual"] = {repr(r): v for r, v in self.dilation.items()}
        if self.op_norm_lb is not None:
            d["op_norm_lower_bound"] = _est(self.op_norm_lb)
        d["verdicts"] = dict(self.verdicts)
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def analyze(
    T: OperatorSpec,
    config: AnalysisConfig | None = None,
    sections=("bounded", "essential"),
    strict: bool = True,
) -> CriterionReport:
    """Run the requested sections and collect a report.

    Args:
        T: The operator.
        config: Analysis configuration.
        sections: Any of ``"bounded"`` (both boundedness criteria plus the
            split check), ``"essential"`` (everything in ``"compactness"``
            together with dilation residuals and the operator-norm lower bound)
            and ``"compactness"`` (E/F trends with the compactness verdict).
        strict: When false, an unbounded operator skips the essential
            sections (verdict ``"n/a"``) instead of raising.

    Returns:
        The report.  ``verdicts`` holds ``bounded`` (from criterion iii),
        ``bounded_ii``, ``agree`` and, when computed, ``compact``.
    """
    an = Analysis(T, config)
    rep = CriterionReport(T.describe(), an.config.to_dict())
    rep.extra["sup_phi"] = an.cache.sup_phi
    q = criterion_iii(an)
    rep.q_sups = q
    q_verdict = combine_verdicts(e.verdict for e in q.values())
    rep.verdicts["bounded"] = q_verdict
    if "bounded" in sections:
        c2 = criterion_ii(an)
        rep.s_sups, rep.u_sups = c2.s_sups, c2.u_sups
        rep.verdicts["bounded_ii"] = c2.verdict
        rep.verdicts["agree"] = c2.verdict == q_verdict
        rep.split = third_split_check(an)
        rep.verdicts["split_passed"] = rep.split.passed
    wants_essential = "essential" in sections or "compactness" in sections
    if wants_essential and q_verdict == "unbounded" and not strict:
        rep.verdicts["compact"] = "n/a"
    elif wants_essential:
        ess = essential_quantities(an, q_verdict=q_verdict)
        rep.essential = ess
        cv = compactness_verdict(ess, an.config.tail.window)
        rep.compactness = cv
        rep.verdicts["compact"] = cv.verdict
        if "essential" in sections:
            rep.dilation = dilation_residual(an)
            rep.op_norm_lb = op_norm_lower_bound(an.T, an.grid, an.config.sampler, an.cache)
    return rep
