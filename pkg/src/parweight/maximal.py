"""Parabolic maximal operators over finite box families.

The value at a cell is the largest lagged-part average of |f| over family
boxes whose (grid-clipped) full time window and spatial footprint contain
the cell.  Cells inside no family box are flagged uncovered and excluded
from norm ratios instead of being zero-filled, which avoids artificial
boundary blow-ups the continuum operators do not have.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CoverageMismatch, InadmissibleBox, ZeroDenominator
from .pargeo import (BoxFamily, PrefixAverager, SpaceTimeGrid, box_region,
                     cylinder_family, rectangle_family, spatial_members)

_PART = {"rect+": "upper", "rect-": "lower", "cyl+": "upper",
         "cyl-": "lower", "hl": "full"}


@dataclass
class MaximalField:
    values: np.ndarray
    covered: np.ndarray          # bool mask of cells inside >= 1 family box
    op: str
    gamma: float


def _values(field) -> np.ndarray:
    return np.abs(getattr(field, "values", field))


def maximal_field(grid: SpaceTimeGrid, f, op: str, gamma: float,
                  family: BoxFamily, restrict: tuple | None = None) -> MaximalField:
    """Sup over containing family boxes of the lagged-part average of |f|.

    restrict=(tau, j) keeps only rectangles of grid tau with |level| <= j
    (the restricted operator); with j at the family's deepest level and a
    single-grid family this is the unrestricted single-grid operator.
    """
    part = _PART[op]
    fa = _values(f)
    avg = PrefixAverager(grid, fa)
    vals = np.zeros((grid.space.n, grid.nt))
    covered = np.zeros((grid.space.n, grid.nt), dtype=bool)
    for box in family:
        if restrict is not None and box.kind == "rectangle":
            tau, j = restrict
            if box.shape[1] != tau or abs(box.shape[2]) > j:
                continue
        try:
            region = box_region(grid, box, part, family.adj)
        except InadmissibleBox:
            continue
        a = avg.region_average(region)
        ids = spatial_members(grid, box, family.adj)
        lp = box.edge(family.adj) ** grid.p
        s0, s1 = grid.time_slice(max(box.center_time - lp, grid.t0),
                                 min(box.center_time + lp, grid.t_end))
        if s1 <= s0:
            continue
        blk = vals[np.ix_(ids, np.arange(s0, s1))]
        vals[np.ix_(ids, np.arange(s0, s1))] = np.maximum(blk, a)
        covered[np.ix_(ids, np.arange(s0, s1))] = True
    return MaximalField(values=vals, covered=covered, op=op, gamma=gamma)


def _weight_sum(grid, w, mask) -> float:
    return float((w * grid.cell_measure() * mask).sum())


def weak_type_ratio(grid: SpaceTimeGrid, omega, q: float, gamma: float,
                    op: str, family: BoxFamily, testset, thresholds=None) -> float:
    """Empirical weak (q, omega) operator norm to the q-th power:
    max over (f, xi) of xi^q * omega({Mf > xi}) / int |f|^q omega."""
    w = getattr(omega, "values", omega)
    if thresholds is None:
        thresholds = 2.0 ** np.arange(-4, 5)
    best = 0.0
    for f in testset:
        fa = _values(f)
        denom = float((fa ** q * w * grid.cell_measure()).sum())
        if denom == 0.0:
            warnings.warn("skipping identically zero test field", stacklevel=2)
            continue
        mf = maximal_field(grid, fa, op, gamma, family)
        for xi in thresholds:
            level = mf.covered & (mf.values > xi)
            num = xi ** q * _weight_sum(grid, w, level)
            if num > 0:
                best = max(best, num / denom)
    if best == 0.0 and not testset:
        raise ZeroDenominator("empty testset")
    return best


def strong_type_ratio(grid: SpaceTimeGrid, omega, q: float, gamma: float,
                      op: str, family: BoxFamily, testset) -> float:
    """max over f of ||Mf||_{L^q(omega)} / ||f||_{L^q(omega)}, the maximal
    field restricted to covered cells."""
    w = getattr(omega, "values", omega)
    cm = grid.cell_measure()
    best = 0.0
    for f in testset:
        fa = _values(f)
        denom = float((fa ** q * w * cm).sum()) ** (1.0 / q)
        if denom == 0.0:
            warnings.warn("skipping identically zero test field", stacklevel=2)
            continue
        mf = maximal_field(grid, fa, op, gamma, family)
        num = float(((mf.values * mf.covered) ** q * w * cm).sum()) ** (1.0 / q)
        best = max(best, num / denom)
    return best


def snapped_lag(grid: SpaceTimeGrid, raw: float, lp_finest: float) -> float:
    """Largest aligned lag <= raw on the finest family scale (0 if none).

    Coarser dyadic levels have l^p an integer multiple of the finest one,
    so alignment at the finest scale implies alignment everywhere.
    """
    if raw <= 0:
        return 0.0
    j = int(np.floor(raw * lp_finest / grid.dt + 1e-12))
    return j * grid.dt / lp_finest


def equivalence_lags(grid: SpaceTimeGrid, adj, gamma: float):
    """The rectangle-side and cylinder-side comparison lags of the pointwise
    two-sided estimate, snapped down to grid-aligned values."""
    g0 = adj.grids[0]
    K0 = grid.space.quasi_K0
    c1, C1, delta = g0.c1, g0.C1, g0.delta
    C = max(adj.location_const, 1.0)
    p = grid.p
    raw1 = gamma * min((c1 / C) ** p, (c1 * delta) ** p / (2 * K0 * C1 * C) ** p)
    raw2 = gamma * min(1.0, 1.0 / (2 * K0 * C1) ** p)
    lp_fine = g0.edge_length(g0.k_max) ** p
    return snapped_lag(grid, raw1, lp_fine), snapped_lag(grid, raw2, lp_fine)


def maximal_equivalence_check(grid: SpaceTimeGrid, f, gamma: float, adj,
                              k_values=None, cyl_edges=None):
    """Pointwise two-sided comparison of the cylinder and rectangle maximal
    operators; returns the smallest constants realized on the grid."""
    g1, g2 = equivalence_lags(grid, adj, gamma)
    cyl = cylinder_family(grid, gamma, edges=cyl_edges, require_parts=("upper",))
    cyl2 = cylinder_family(grid, g2, edges=cyl_edges, require_parts=("upper",))
    rect = rectangle_family(grid, adj, gamma, k_values=k_values,
                            require_parts=("upper",))
    rect1 = rectangle_family(grid, adj, g1, k_values=k_values,
                             require_parts=("upper",))
    m_cyl = maximal_field(grid, f, "cyl+", gamma, cyl)
    m_rect1 = maximal_field(grid, f, "rect+", g1, rect1)
    m_rect = maximal_field(grid, f, "rect+", gamma, rect)
    m_cyl2 = maximal_field(grid, f, "cyl+", g2, cyl2)
    cov = m_cyl.covered & m_rect1.covered & m_rect.covered & m_cyl2.covered
    for m in (m_cyl, m_rect1, m_rect, m_cyl2):
        if not np.array_equal(m.covered, cov):
            raise CoverageMismatch("operators cover different cell sets")
    with np.errstate(divide="ignore", invalid="ignore"):
        fwd = np.where(cov & (m_rect1.values > 0), m_cyl.values / m_rect1.values, 0.0)
        bwd = np.where(cov & (m_cyl2.values > 0), m_rect.values / m_cyl2.values, 0.0)
    return {"c_fwd": float(fwd.max()), "c_bwd": float(bwd.max()),
            "gamma1": g1, "gamma2": g2}


def make_testset(grid: SpaceTimeGrid, family: BoxFamily, seed: int = 0,
                 n_indicators: int = 4, n_sign: int = 2, n_smooth: int = 2):
    """Seeded adversarial fields: box-part indicators, +-1 fields, and
    smoothed positive noise."""
    rng = np.random.default_rng(seed)
    fields = []
    boxes = family.boxes
    for _ in range(min(n_indicators, len(boxes))):
        box = boxes[int(rng.integers(len(boxes)))]
        part = "upper" if rng.random() < 0.5 else "lower"
        try:
            region = box_region(grid, box, part, family.adj)
        except InadmissibleBox:
            continue
        fields.append(region.mask().astype(float))
    for _ in range(n_sign):
        fields.append(rng.choice([-1.0, 1.0], size=(grid.space.n, grid.nt)))
    for _ in range(n_smooth):
        z = rng.random((grid.space.n, grid.nt)) + 0.25
        for ax in (0, 1):
            z = (z + np.roll(z, 1, axis=ax) + np.roll(z, -1, axis=ax)) / 3.0
        fields.append(z)
    return fields
