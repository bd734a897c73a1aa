"""
Essential-norm trends and compactness
=====================================

For a bounded operator the distance to the compact operators is governed by
two limsups: ``E_j`` over test functions whose parameter runs to the circle,
and ``F_k`` over points where ``|phi|`` approaches 1.  Numerically both are
per-annulus trends over the tail ``1 - 2^-n``.  A symbol with ``sup|phi| < 1``
leaves the ``F`` tail empty and the ``E`` trends decay; the identity keeps
them flat.

Run with ``python3 demos/03_compactness.py`` (about a minute).
"""

from oplab.criteria import AnalysisConfig, analyze
from oplab.funcspace import parse_fn
from oplab.operator import OperatorSpec

config = AnalysisConfig()

cases = [
    OperatorSpec(parse_fn("1+z"), parse_fn("z*z"), parse_fn("dilate(0.5,z)"), 4, 1.0, "contractive symbol"),
    OperatorSpec(parse_fn("const(1)"), parse_fn("const(0)"), parse_fn("z"), 4, 2.0, "identity"),
]

for T in cases:
    rep = analyze(T, config)
    ess = rep.essential
    print(f"\n== {T.name}: {T.describe()}")
    print("tail n:", list(ess.ns))
    j = min(ess.e_trace)
    print(f"E_{j} per annulus:", [f"{x:.3g}" for x in ess.e_trace[j]])
    k = max(ess.f_limsup, key=ess.f_limsup.get)
    print(f"F_{k} per annulus:", [f"{x:.3g}" for x in ess.f_trace[k]], "(empty tail)" if ess.empty_tail else "")
    print("dilation residuals ||T - T K_r|| over the atomic family:", {r: f"{v:.3g}" for r, v in rep.dilation.items()})
    print("operator-norm lower bound:", f"{rep.op_norm_lb.value:.4g}")
    cv = rep.compactness
    print(f"compact via F: {cv.via_f}; via E: {cv.via_e}; verdict: {cv.verdict}")
