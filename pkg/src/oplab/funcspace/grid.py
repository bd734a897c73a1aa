"""Polar sample grids on the unit disk with geometric boundary refinement."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

MIN_FLOOR = 1e-12


@dataclass(frozen=True)
class GridConfig:
    """Knobs for :func:`make_grid`.

    Radii are ``1 - 2^{-n} (1 - r1)`` for ``n = 0, 1, ...`` while ``1 - r`` stays
    above ``floor``, plus ``1 - floor`` itself and every decade ``1 - 10^{-d}``
    used as a trace level.  The angular count at radius ``r`` is the power of two
    nearest above ``angle_scale / (1 - r)``, clamped to
    ``[base_angles, max_angles]``; ``r = 0`` gets a single point.
    """

    r1: float = 0.0
    floor: float = 1e-6
    base_angles: int = 8
    angle_scale: float = 4.0
    max_angles: int = 1024
    refinements: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DiskGrid:
    config: GridConfig
    radii: np.ndarray
    counts: np.ndarray
    points: np.ndarray
    radius_index: np.ndarray
    level: np.ndarray
    floors: tuple = field(default=())

    @property
    def n_points(self) -> int:
        return int(self.points.size)

    @property
    def n_levels(self) -> int:
        return len(self.floors)

    @property
    def max_radius(self) -> float:
        return float(self.radii[-1])

    def refine(self) -> DiskGrid:
        """Doubling refinement: midpoint radii and twice the angles."""
        return make_grid(replace(self.config, refinements=self.config.refinements + 1))

    def angle_step(self, i: int) -> float:
        return 2 * math.pi / int(self.counts[i])

    def level_cap(self, level: int) -> float:
        """Largest radius admitted at a trace level."""
        return 1.0 - self.floors[level]


def _trace_floors(r1: float, floor: float) -> tuple:
    floors = []
    d = 1
    while 10.0 ** (-d) > floor * (1 + 1e-9):
        if 10.0 ** (-d) < 1 - r1:
            floors.append(10.0 ** (-d))
        d += 1
    floors.append(floor)
    return tuple(floors)


def _angle_count(r: float, cfg: GridConfig, doublings: int) -> int:
    if r == 0:
        return 1
    want = cfg.angle_scale * 2**doublings / (1 - r)
    n = 2 ** max(0, math.ceil(math.log2(want)))
    lo = cfg.base_angles * 2**doublings
    hi = cfg.max_angles * 2**doublings
    return int(min(max(n, lo), hi))


def make_grid(config: GridConfig | None = None) -> DiskGrid:
    cfg = config or GridConfig()
    if not 0 <= cfg.r1 < 1:
        raise ValueError(f"r1 must lie in [0, 1), got {cfg.r1}")
    if cfg.floor < MIN_FLOOR:
        raise ValueError(f"boundary floor {cfg.floor:g} is below {MIN_FLOOR:g}; double precision cannot resolve it")
    if cfg.floor >= 1 - cfg.r1:
        raise ValueError("boundary floor must be smaller than 1 - r1")
    if cfg.base_angles < 1 or cfg.max_angles < cfg.base_angles:
        raise ValueError("angular counts must satisfy 1 <= base_angles <= max_angles")

    gaps = []
    n = 0
    while True:
        g = 2.0 ** (-n) * (1 - cfg.r1)
        if g <= cfg.floor:
            break
        gaps.append(g)
        n += 1
    floors = _trace_floors(cfg.r1, cfg.floor)
    gaps.extend(f for f in floors)
    gaps = np.unique(np.array(gaps))[::-1]  # decreasing gap = increasing radius

    for _ in range(cfg.refinements):
        mids = np.sqrt(gaps[:-1] * gaps[1:])
        gaps = np.unique(np.concatenate([gaps, mids]))[::-1]

    radii = 1.0 - gaps
    counts = np.array([_angle_count(r, cfg, cfg.refinements) for r in radii], dtype=int)

    pts, ridx, lev = [], [], []
    level_of_gap = np.array(
        [next(i for i, f in enumerate(floors) if g >= f * (1 - 1e-9)) for g in gaps], dtype=int
    )
    for i, (r, c) in enumerate(zip(radii, counts)):
        theta = 2 * np.pi * np.arange(c) / c
        pts.append(r * np.exp(1j * theta) if r > 0 else np.zeros(1, dtype=complex))
        ridx.append(np.full(c, i))
        lev.append(np.full(c, level_of_gap[i]))
    return DiskGrid(
        config=cfg,
        radii=radii,
        counts=counts,
        points=np.concatenate(pts),
        radius_index=np.concatenate(ridx),
        level=np.concatenate(lev),
        floors=floors,
    )


def tail_radii(n0: int, n_max: int) -> np.ndarray:
    """Geometric tail ``1 - 2^{-n}`` for ``n = n0 .. n_max``."""
    return 1.0 - 2.0 ** (-np.arange(n0, n_max + 1, dtype=float))
