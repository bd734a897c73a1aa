"""
Boundedness by two routes
=========================

The operator ``f -> u f(phi) + v f^(m)(phi)`` is bounded into the weighted
Zygmund-type space exactly when the weighted sups ``Q_k`` are finite, and also
exactly when the images of the test functions stay bounded.  This demo runs
both checks on the identity operator for a good and a bad weight exponent and
prints the refinement traces the verdicts are read from.

Run with ``python3 demos/02_boundedness.py`` (about half a minute).
"""

from oplab.criteria import AnalysisConfig, analyze
from oplab.funcspace import Const, Var
from oplab.operator import OperatorSpec

config = AnalysisConfig()

for alpha in (2.0, 1.0):
    T = OperatorSpec(Const(1), Const(0), Var(), m=3, alpha=alpha, name=f"identity, alpha={alpha:g}")
    report = analyze(T, config, sections=("bounded",))
    print(f"\n== {T.name}")
    # Q_2 = (1-|z|^2)^alpha / (1-|z|^2)^2 is constant for alpha = 2 and blows up for alpha = 1.
    q2 = report.q_sups[2]
    print("Q_2 trace over boundary floors 1e-1 .. 1e-6:", [f"{t:.4g}" for t in q2.refinement_trace])
    s1 = report.s_sups[1]
    print("S_1 trace over the test-function grid:     ", [f"{t:.4g}" for t in s1.refinement_trace])
    v = report.verdicts
    print(f"criterion (iii): {v['bounded']}, criterion (ii): {v['bounded_ii']}, agree: {v['agree']}")
    print("1/3 split check passed:", v["split_passed"])
