"""Analytic functions on the disk and the norms they are measured in."""

from .expr import (
    AnalyticFn,
    Compose,
    Const,
    Derivative,
    Dilate,
    MobiusSigma,
    Poly,
    Product,
    Quotient,
    Sum,
    TestFn,
    Var,
    as_fn,
    atoms_sum,
    eval_jet,
)
from .grid import DiskGrid, GridConfig, make_grid, tail_radii
from .norms import (
    NormEstimate,
    QuadConfig,
    atomic_l1_bound,
    b1_surrogate_norm,
    disk_integral,
    sup_estimate,
    trace_converged,
    trace_verdict,
    weight,
    zygmund_norm,
    zygmund_seminorm,
)
from .parse import parse_fn
