"""Two-path identity checks behind ``oplab verify-identities``.

* jet derivatives against central finite differences taken in extended
  precision with step ``1e-4``;
* ``(Tf)''`` from the whole tree against the coefficient expansion;
* ``(Tf)'(0)`` from the four-term formula against the jet of ``T f``;
* delta systems: ``g_{i,a}^{(k)}(a)`` against the Kronecker targets.
"""

from __future__ import annotations

import math

import numpy as np

from .funcspace.expr import AnalyticFn, MobiusSigma, Poly, TestFn, eval_jet
from .operator import OperatorSpec, apply, first_derivative_check, second_derivative_identity_check
from .precision import EXTENDED_DPS, mp
from .testfns import g_from_coeffs, g_ia, index_set, paper_three_term, solve_delta_coeffs, verify_delta

__all__ = [
    "FD_STEP",
    "central_difference",
    "relative_error",
    "check_jet_vs_fd",
    "sample_points",
    "verify_identities",
    "delta_report",
    "DELTA_POINTS",
]

FD_STEP = 1e-4
REL_FLOOR = 1e-12
DELTA_POINTS = (0.3 + 0.4j, -0.9, 0.85j, 0.7 * np.exp(1j * np.pi / 5))


def central_difference(f: AnalyticFn, z0: complex, k: int, h: float = FD_STEP) -> complex:
    """``k``-th central difference quotient of ``f`` at ``z0`` with step ``h``.

    ``sum_i (-1)^i C(k, i) f(z0 + (k/2 - i) h) / h^k``, evaluated in extended
    precision so that the ``h^{-k}`` amplification does not swamp the
    ``O(h^2)`` truncation error.  The working precision is raised to
    ``k * log10(1/h) + 30`` digits while the quotient is formed; this
    temporarily changes the shared extended context, so the function is not
    meant to run concurrently with other extended-precision work.
    """
    if k == 0:
        return complex(np.asarray(f(z0, precision="extended")).reshape(-1)[0])
    ctx = mp()
    digits = max(EXTENDED_DPS, int(math.ceil(k * -math.log10(h))) + 30)
    with ctx.workdps(digits):
        hh = ctx.mpf(h)
        z = ctx.mpc(z0)
        nodes = np.array([z + (ctx.mpf(k) / 2 - i) * hh for i in range(k + 1)], dtype=object)
        vals = eval_jet(f, nodes, 0, precision="extended").value
        acc = ctx.mpc(0)
        for i in range(k + 1):
            acc += (-1) ** i * math.comb(k, i) * vals[i]
        return complex(acc / hh**k)


def relative_error(got: complex, want: complex, floor: float = REL_FLOOR) -> float:
    """``|got - want| / max(|got|, |want|, floor)``."""
    return abs(got - want) / max(abs(got), abs(want), floor)


def check_jet_vs_fd(f: AnalyticFn, z0: complex, order: int, h: float = FD_STEP) -> float:
    """Worst relative error over ``k <= order`` between jet and finite-difference derivatives."""
    jet = eval_jet(f, complex(z0), order)
    return max(relative_error(complex(jet.derivative(k)), central_difference(f, z0, k, h)) for k in range(order + 1))


def sample_points(n: int, radius: float = 0.9, seed: int = 7) -> np.ndarray:
    """Deterministic points in ``|z| <= radius``, area-uniform."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


def _test_functions(m: int) -> list[AnalyticFn]:
    return [TestFn(1, 0.4 - 0.3j), TestFn(m + 1, 0.6j), MobiusSigma(-0.5 + 0.2j), Poly((1, -2, 0.5j, 0.25))]


def verify_identities(
    T: OperatorSpec,
    precision: str = "double",
    paper_3term: bool = False,
    tolerance: float = 1e-9,
    n_points: int = 8,
) -> dict:
    """Run every two-path check for one operator and collect a JSON-ready report.

    Args:
        T: The operator.
        precision: Working precision for the expansion check.
        paper_3term: Also report the three-term delta combinations.
        tolerance: Pass threshold for the expansion and delta checks.
        n_points: Sample points per check.

    Returns:
        A dict with per-check worst mismatches and an overall ``passed`` flag.
    """
    pts = sample_points(n_points)
    fd_pts = sample_points(n_points, radius=0.5, seed=11)
    fns = _test_functions(T.m)

    fd_worst = 0.0
    for f in (T.u, T.v, T.phi, *fns[:2]):
        for z0 in fd_pts[:3]:
            fd_worst = max(fd_worst, check_jet_vs_fd(f, z0, 6))
    tf_fd = max(check_jet_vs_fd(apply(T, fns[0]), z0, 2) for z0 in fd_pts[:2])

    expansion = [second_derivative_identity_check(T, f, pts, tolerance, precision) for f in fns]
    first = [first_derivative_check(T, f) for f in fns]

    delta_pts = DELTA_POINTS
    delta = {}
    for i in index_set(T.m):
        worst = max(verify_delta(g_ia(i, a, T.m), i, a, T.m, tolerance).max_mismatch for a in delta_pts)
        delta[str(i)] = worst

    report = {
        "precision": precision,
        "tolerance": tolerance,
        "fd_step": FD_STEP,
        "jet_vs_fd_max_rel": fd_worst,
        "image_jet_vs_fd_max_rel": tf_fd,
        "fd_tolerance": 1e-6,
        "second_derivative_max_rel": max(r.rel_mismatch for r in expansion),
        "first_derivative_max_rel": max(r.rel_mismatch for r in first),
        "first_derivative_tolerance": 1e-12,
        "delta_max_mismatch": delta,
    }
    passed = (
        fd_worst <= 1e-6
        and tf_fd <= 1e-6
        and report["second_derivative_max_rel"] <= tolerance
        and report["first_derivative_max_rel"] <= 1e-12
        and max(delta.values()) <= tolerance
    )
    if paper_3term:
        report["paper_3term"] = _three_term_report(T.m, delta_pts, tolerance)
    report["max_mismatch"] = max(
        report["second_derivative_max_rel"], report["first_derivative_max_rel"], max(delta.values())
    )
    report["passed"] = bool(passed)
    return report


def _three_term_report(m: int, points, tolerance: float) -> dict:
    """Which delta conditions the three-term combinations satisfy (informational)."""
    if m <= 2:
        return {"applicable": False, "reason": "three-term construction needs m > 2"}
    out = {"applicable": True, "combinations": {}}
    for i in index_set(m):
        sol = paper_three_term(i, m)
        sats = None
        worst = 0.0
        for a in points:
            rep = verify_delta(g_from_coeffs(sol.exact, sol.basis_js, a), i, a, m, tolerance)
            sats = set(rep.satisfied) if sats is None else sats & set(rep.satisfied)
            worst = max(worst, rep.max_mismatch)
        out["combinations"][str(i)] = {
            "basis": list(sol.basis_js),
            "coefficients": [str(c) for c in sol.exact],
            "satisfied_k": sorted(sats),
            "violated_k": sorted(set(index_set(m)) - sats),
            "max_mismatch": worst,
        }
    return out


def delta_report(m: int, points=DELTA_POINTS, tolerance: float = 1e-10, paper_3term: bool = False) -> dict:
    """Square-system ``g_{i,a}`` delta checks for every ``i`` in the index set.

    Args:
        m: Operator order.
        points: Parameters ``a`` to test.
        tolerance: Pass threshold on the scaled mismatch.
        paper_3term: Also report the three-term combinations (never affects
            ``passed``).
    """
    per_i = {}
    for i in index_set(m):
        sol = solve_delta_coeffs(i, m)
        worst = max(verify_delta(g_ia(i, a, m), i, a, m, tolerance).max_mismatch for a in points)
        per_i[str(i)] = {
            "basis": list(sol.basis_js),
            "coefficients": [str(c) for c in sol.exact],
            "exact_residual": sol.residual,
            "rounded_residual": sol.rounded_residual,
            "max_mismatch": worst,
        }
    out = {
        "m": m,
        "index_set": list(index_set(m)),
        "tolerance": tolerance,
        "points": [[complex(a).real, complex(a).imag] for a in points],
        "square_system": per_i,
        "passed": all(v["max_mismatch"] <= tolerance for v in per_i.values()),
    }
    if paper_3term:
        out["paper_3term"] = _three_term_report(m, points, tolerance)
    return out
