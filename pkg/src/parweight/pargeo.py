"""Space-time grids, parabolic cylinders/rectangles, and region averages.

Time cells are uniform: cell s covers [t0 + s*dt, t0 + (s+1)*dt) with
center tau_s = t0 + (s + 1/2)*dt.  All box time intervals are half-open
[a, b), selected by cell-center membership, so aligned boxes (interval
endpoints on grid lines) produce exact disjoint unions and the translation
identity upper = lower + (1+gamma)*l^p holds cell-exactly.

Region averages are backed by per-point temporal prefix sums; the naive
double loop is kept in the tests as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import AdjacentSystem
from .errors import EmptyRegion, InadmissibleBox
from .space import Ball, PointCloudSpace

_ALIGN_TOL = 1e-9


@dataclass
class SpaceTimeGrid:
    space: PointCloudSpace
    t0: float
    dt: float
    nt: int
    p: float

    def __post_init__(self):
        if self.dt <= 0 or self.nt <= 0 or self.p <= 1:
            raise ValueError("require dt > 0, nt > 0, p > 1")

    @property
    def t_end(self) -> float:
        return self.t0 + self.nt * self.dt

    def cell_times(self) -> np.ndarray:
        return self.t0 + (np.arange(self.nt) + 0.5) * self.dt

    def cell_measure(self) -> np.ndarray:
        """lambda of each cell as (n_points, nt) broadcastable column."""
        return self.space.masses[:, None] * self.dt

    def total_measure(self) -> float:
        return float(self.space.masses.sum()) * self.nt * self.dt

    def time_slice(self, a: float, b: float) -> tuple[int, int]:
        """Cell index range [s0, s1) of centers falling in [a, b)."""
        s0 = int(np.ceil((a - self.t0) / self.dt - 0.5 - _ALIGN_TOL))
        s1 = int(np.ceil((b - self.t0) / self.dt - 0.5 - _ALIGN_TOL))
        return max(s0, 0), min(s1, self.nt)

    def is_aligned(self, value: float) -> bool:
        r = value / self.dt
        return abs(r - round(r)) < _ALIGN_TOL


@dataclass(frozen=True)
class ParabolicBox:
    """Cylinder R(x,t,l) or rectangle P(tau,k,alpha,t) with lag gamma.

    shape: ("cylinder", x, t, l) or ("rectangle", tau, k, alpha, t).
    """

    shape: tuple
    gamma: float

    @property
    def kind(self) -> str:
        return self.shape[0]

    @property
    def center_time(self) -> float:
        return self.shape[2] if self.kind == "cylinder" else self.shape[4]

    def edge(self, adj: AdjacentSystem | None = None) -> float:
        if self.kind == "cylinder":
            return self.shape[3]
        return adj.grids[self.shape[1]].edge_length(self.shape[2])

    def time_window(self, lp: float, part: str) -> tuple[float, float]:
        t, g = self.center_time, self.gamma
        if part == "lower":
            return t - lp, t - g * lp
        if part == "upper":
            return t + g * lp, t + lp
        return t - lp, t + lp


@dataclass
class Region:
    """Product region: a spatial point set times a time index range, or an
    explicit cell list (point_ids/time_idx pairs)."""

    point_ids: np.ndarray
    t_start: int
    t_stop: int
    grid: SpaceTimeGrid
    explicit: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_time(self) -> int:
        return self.t_stop - self.t_start

    @property
    def measure(self) -> float:
        if self.explicit is not None:
            i, _ = self.explicit
            return float(self.grid.space.masses[i].sum()) * self.grid.dt
        return float(self.grid.space.masses[self.point_ids].sum()) * self.n_time * self.grid.dt

    def cells(self):
        if self.explicit is not None:
            return self.explicit
        ii = np.repeat(self.point_ids, self.n_time)
        ss = np.tile(np.arange(self.t_start, self.t_stop), len(self.point_ids))
        return ii, ss

    def mask(self) -> np.ndarray:
        m = np.zeros((self.grid.space.n, self.grid.nt), dtype=bool)
        if self.explicit is not None:
            m[self.explicit] = True
        else:
            m[np.ix_(self.point_ids, np.arange(self.t_start, self.t_stop))] = True
        return m


def spatial_members(grid: SpaceTimeGrid, box: ParabolicBox,
                    adj: AdjacentSystem | None = None) -> np.ndarray:
    if box.kind == "cylinder":
        _, x, _, l = box.shape
        return grid.space.ball_members(Ball(int(x), float(l)))
    _, tau, k, alpha, _ = box.shape
    return adj.grids[tau].cube_members(k, alpha)


def box_region(grid: SpaceTimeGrid, box: ParabolicBox, part: str = "full",
               adj: AdjacentSystem | None = None) -> Region:
    """Cells of the requested part of the box; raises if either the spatial
    footprint or the time window is empty or sticks out of the grid."""
    ids = spatial_members(grid, box, adj)
    if ids.size == 0:
        raise InadmissibleBox("empty spatial part")
    l = box.edge(adj)
    lp = l ** grid.p
    a, b = box.time_window(lp, part)
    if a < grid.t0 - _ALIGN_TOL or b > grid.t_end + _ALIGN_TOL:
        raise InadmissibleBox(f"time window [{a}, {b}) outside grid")
    s0, s1 = grid.time_slice(a, b)
    if s1 <= s0:
        raise InadmissibleBox(f"empty temporal part [{a}, {b})")
    return Region(point_ids=ids, t_start=s0, t_stop=s1, grid=grid)


def box_admissible(grid: SpaceTimeGrid, box: ParabolicBox,
                   adj: AdjacentSystem | None = None,
                   parts=("lower", "upper")) -> bool:
    try:
        for part in parts:
            box_region(grid, box, part, adj)
        return True
    except InadmissibleBox:
        return False


def translate_region(region: Region, offset: float) -> Region:
    """Temporal translation by an aligned offset (multiple of dt)."""
    steps = offset / region.grid.dt
    if abs(steps - round(steps)) > _ALIGN_TOL:
        raise InadmissibleBox(f"offset {offset} not aligned to dt")
    steps = int(round(steps))
    return Region(point_ids=region.point_ids, t_start=region.t_start + steps,
                  t_stop=region.t_stop + steps, grid=region.grid)


class PrefixAverager:
    """Temporal prefix sums of mass-weighted field values.

    For a product region the weighted sum is O(#spatial members); results
    are bit-identical to left-to-right per-point summation because the
    cumulative sums fix the summation order.
    """

    def __init__(self, grid: SpaceTimeGrid, values: np.ndarray):
        self.grid = grid
        w = values * grid.cell_measure()
        self.prefix = np.concatenate(
            [np.zeros((grid.space.n, 1)), np.cumsum(w, axis=1)], axis=1)
        self.values = values

    def region_sum(self, region: Region) -> float:
        if region.explicit is not None:
            i, s = region.explicit
            w = self.values[i, s] * self.grid.space.masses[i] * self.grid.dt
            return float(w.sum())
        ids = region.point_ids
        return float((self.prefix[ids, region.t_stop]
                      - self.prefix[ids, region.t_start]).sum())

    def region_average(self, region: Region) -> float:
        lam = region.measure
        if lam <= 0:
            raise EmptyRegion("region has zero measure")
        return self.region_sum(region) / lam


def region_average(grid: SpaceTimeGrid, values: np.ndarray, region: Region) -> float:
    """One-shot average; build a PrefixAverager for repeated queries."""
    lam = region.measure
    if lam <= 0:
        raise EmptyRegion("region has zero measure")
    if region.explicit is not None:
        i, s = region.explicit
        total = float((values[i, s] * grid.space.masses[i] * grid.dt).sum())
    else:
        ids = region.point_ids
        sub = values[ids, region.t_start:region.t_stop]
        total = float((sub.sum(axis=1) * grid.space.masses[ids]).sum()) * grid.dt
    return total / lam


# ---------------------------------------------------------------------------
# Box families

@dataclass
class BoxFamily:
    boxes: list
    mode: str                    # "rectangle" | "cylinder"
    adj: AdjacentSystem | None = None
    descriptor: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)


def _aligned_lag(grid: SpaceTimeGrid, lp: float, gamma: float) -> bool:
    return (grid.is_aligned(lp) and grid.is_aligned(gamma * lp)
            and grid.is_aligned((1 + gamma) * lp) and grid.is_aligned((1 - gamma) * lp))


def rectangle_family(grid: SpaceTimeGrid, adj: AdjacentSystem, gamma: float,
                     k_values=None, taus=None, time_stride: int = 1,
                     max_boxes: int = 20000,
                     require_parts=("lower", "upper")) -> BoxFamily:
    """All aligned admissible rectangles of the adjacent system.

    Time centers walk the grid lines with the given stride; levels whose
    lagged window lengths are not multiples of dt are skipped.
    """
    g0 = adj.grids[0]
    if k_values is None:
        k_values = range(g0.k_min, g0.k_max + 1)
    if taus is None:
        taus = range(adj.K)
    boxes = []
    for k in k_values:
        lp = g0.edge_length(k) ** grid.p
        if not _aligned_lag(grid, lp, gamma):
            continue
        need_lower = "lower" in require_parts or "full" in require_parts
        lo_steps = int(round(lp / grid.dt)) if need_lower else 0
        hi_steps = int(round(lp / grid.dt)) if ("upper" in require_parts or "full" in require_parts) else 0
        m0 = lo_steps
        m1 = grid.nt - hi_steps
        for tau in taus:
            for alpha in range(adj.grids[tau].n_cubes(k)):
                for m in range(m0, m1 + 1, time_stride):
                    t = grid.t0 + m * grid.dt
                    box = ParabolicBox(shape=("rectangle", tau, k, alpha, t),
                                       gamma=gamma)
                    if box_admissible(grid, box, adj, parts=require_parts):
                        boxes.append(box)
    if len(boxes) > max_boxes:
        idx = np.linspace(0, len(boxes) - 1, max_boxes).astype(int)
        boxes = [boxes[i] for i in sorted(set(idx.tolist()))]
    return BoxFamily(boxes=boxes, mode="rectangle", adj=adj,
                     descriptor={"gamma": gamma, "k_values": list(k_values),
                                 "time_stride": time_stride})


def cylinder_family(grid: SpaceTimeGrid, gamma: float, edges=None,
                    center_stride: int = 1, time_stride: int = 1,
                    max_boxes: int = 20000,
                    require_parts=("lower", "upper")) -> BoxFamily:
    """Cylinders with centers on a strided cell set and an edge ladder whose
    l^p values are aligned multiples of dt."""
    if edges is None:
        edges = default_edge_ladder(grid, gamma)
    boxes = []
    for l in edges:
        lp = l ** grid.p
        if not _aligned_lag(grid, lp, gamma):
            continue
        steps = int(round(lp / grid.dt))
        for x in range(0, grid.space.n, center_stride):
            for m in range(steps, grid.nt - steps + 1, time_stride):
                t = grid.t0 + m * grid.dt
                box = ParabolicBox(shape=("cylinder", x, t, float(l)), gamma=gamma)
                if box_admissible(grid, box, parts=require_parts):
                    boxes.append(box)
    if len(boxes) > max_boxes:
        idx = np.linspace(0, len(boxes) - 1, max_boxes).astype(int)
        boxes = [boxes[i] for i in sorted(set(idx.tolist()))]
    return BoxFamily(boxes=boxes, mode="cylinder", adj=None,
                     descriptor={"gamma": gamma, "edges": [float(l) for l in edges]})


def default_edge_ladder(grid: SpaceTimeGrid, gamma: float, n_max: int = 8):
    """Edges l with l^p an aligned multiple of dt (gamma windows aligned too),
    geometric in l^p by factors of 2, capped at the grid half-length."""
    ladder = []
    lp = grid.dt
    cap = grid.nt * grid.dt / 2
    while lp <= cap and len(ladder) < n_max:
        if _aligned_lag(grid, lp, gamma):
            ladder.append(lp ** (1.0 / grid.p))
        lp *= 2
    return ladder
