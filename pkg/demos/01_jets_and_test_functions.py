"""
Jets and delta combinations of test functions
=============================================

Taylor jets of expression trees give exact derivatives of every test
function at its own parameter.  Those derivatives feed a small rational linear
system whose solution turns the test functions into delta interpolants.

Run with ``python3 demos/01_jets_and_test_functions.py``.
"""

import math

import numpy as np

from oplab.funcspace import MobiusSigma, TestFn, eval_jet, parse_fn
from oplab.testfns import g_ia, index_set, pochhammer, solve_delta_coeffs, verify_delta

# A jet stores Taylor coefficients, so derivatives come out as k! * c_k.
f = parse_fn("compose(testfn(2, 0.6i), dilate(0.8, z))")
jet = eval_jet(f, 0.3 - 0.2j, 4)
print("f =", f)
print("derivatives at 0.3-0.2i:", np.round(jet.derivatives(), 6))

# Jets are batched: one call evaluates a whole array of points.
pts = np.linspace(-0.9, 0.9, 5)
print("sigma_{0.5}'' on a segment:", np.round(eval_jet(MobiusSigma(0.5), pts, 2).derivative(2), 4))

# At z = a, the k-th derivative of f_{j,a} is (j)_k conj(a)^k / (1-|a|^2)^k.
a = 0.7 * np.exp(1j * math.pi / 5)
for j in (1, 3):
    jet = eval_jet(TestFn(j, a), a, 4)
    closed = [pochhammer(j, k) * np.conj(a) ** k / (1 - abs(a) ** 2) ** k for k in range(5)]
    err = max(abs(complex(jet.derivative(k)) - closed[k]) for k in range(5))
    print(f"j={j}: jet vs closed form, max error {err:.1e}")

# Those derivatives do not depend on a once rescaled, so the coefficients of
# g_{i,a} = sum c_j f_{j,a} solve a fixed Pochhammer system.
for m in (1, 4):
    print(f"\nm={m}: derivative orders {index_set(m)}")
    for i in index_set(m):
        sol = solve_delta_coeffs(i, m)
        rep = verify_delta(g_ia(i, a, m), i, a, m)
        coeffs = ", ".join(str(c) for c in sol.exact)
        print(f"  i={i}: c = ({coeffs}); worst scaled mismatch {rep.max_mismatch:.1e}")
