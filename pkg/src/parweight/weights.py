"""Weight fields and the one-sided Muckenhoupt functionals.

The A_q functional of a box pairs the plain average of the weight over the
past part with the (q-1)-power of the average of the dual weight
sigma = omega^(1-q') over the future part; "plus" orientation reads
past = lower part, future = upper part, and "minus" swaps them.  All
constants reported here are maxima over a finite box family, hence lower
bounds of the continuum suprema.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import maximal
from .errors import (EmptyFamily, NonpositiveWeight, ShiftOutOfGrid,
                     SubsetNotContained)
from .pargeo import (BoxFamily, ParabolicBox, PrefixAverager, Region,
                     SpaceTimeGrid, box_region, translate_region)


@dataclass
class WeightField:
    values: np.ndarray           # (n_points, nt), strictly positive
    preset: str = "file"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values <= 0) or not np.all(np.isfinite(self.values)):
            raise NonpositiveWeight("weight values must be positive and finite")

    def dual(self, q: float) -> "WeightField":
        """sigma = omega^(1-q') with q' the conjugate exponent."""
        qp = q / (q - 1.0)
        return WeightField(self.values ** (1.0 - qp), preset=f"dual({self.preset})")

    def scaled(self, c: float) -> "WeightField":
        return WeightField(c * self.values, preset=f"{c}*{self.preset}")


def constant(grid: SpaceTimeGrid, c: float = 1.0) -> WeightField:
    return WeightField(np.full((grid.space.n, grid.nt), c), preset="constant")


def exp_time(grid: SpaceTimeGrid, a: float = 1.0) -> WeightField:
    t = grid.cell_times()
    return WeightField(np.tile(np.exp(a * t), (grid.space.n, 1)),
                       preset=f"exp_time({a})")


def pow_time(grid: SpaceTimeGrid, alpha: float, center: float = 0.0) -> WeightField:
    """|t - center|^alpha; the grid must not place a cell center at `center`."""
    t = grid.cell_times()
    base = np.abs(t - center)
    if np.any(base == 0):
        raise NonpositiveWeight("a cell center coincides with the singular time")
    return WeightField(np.tile(base ** alpha, (grid.space.n, 1)),
                       preset=f"pow_time({alpha})")


def pow_space(grid: SpaceTimeGrid, alpha: float, origin: int = 0) -> WeightField:
    d = grid.space.dist[origin]
    if np.any(d == 0) and alpha < 0:
        raise NonpositiveWeight("singular at the origin point")
    base = np.where(d > 0, d, grid.space.spacing / 2) ** alpha
    return WeightField(np.tile(base[:, None], (1, grid.nt)),
                       preset=f"pow_space({alpha})")


def from_csv(grid: SpaceTimeGrid, path) -> WeightField:
    vals = np.empty((grid.space.n, grid.nt))
    vals.fill(np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals[int(row["cell_point_id"]), int(row["time_index"])] = float(row["value"])
    if np.any(np.isnan(vals)):
        raise NonpositiveWeight("CSV does not cover every cell")
    return WeightField(vals, preset="file")


def to_csv(field_values: np.ndarray, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["cell_point_id", "time_index", "value"])
        n, nt = field_values.shape
        for i in range(n):
            for s in range(nt):
                wr.writerow([i, s, repr(float(field_values[i, s]))])


def make_preset(grid: SpaceTimeGrid, spec) -> WeightField:
    """Config-facing constructor: 'constant', ['exp_time', a], ['pow_time', a],
    ['pow_space', a], or ['file', path]."""
    if isinstance(spec, str):
        name, args = spec, []
    else:
        name, args = spec[0], list(spec[1:])
    table = {"constant": constant, "exp_time": exp_time, "pow_time": pow_time,
             "pow_space": pow_space, "file": from_csv}
    if name not in table:
        raise KeyError(f"unknown weight preset {name!r}")
    return table[name](grid, *args)


@dataclass
class MuckenhouptReport:
    constant: float
    q: float
    lag: float
    orientation: str
    mode: str
    worst_box: ParabolicBox | None
    n_boxes: int


def _box_functional(avg_w: PrefixAverager, avg_s: PrefixAverager,
                    grid, box, adj, q: float, orientation: str) -> float:
    low = box_region(grid, box, "lower", adj)
    up = box_region(grid, box, "upper", adj)
    if orientation == "plus":
        past, future = low, up
    else:
        past, future = up, low
    return avg_w.region_average(past) * avg_s.region_average(future) ** (q - 1.0)


def muckenhoupt_constant(grid: SpaceTimeGrid, omega: WeightField, q: float,
                         gamma: float, orientation: str, family: BoxFamily) -> MuckenhouptReport:
    """Max over the family of the A_q functional; worst box recorded with a
    lowest-index tie-break."""
    if not 1.0 < q < np.inf:
        raise ValueError("require q in (1, inf)")
    if len(family) == 0:
        raise EmptyFamily("no admissible boxes")
    avg_w = PrefixAverager(grid, omega.values)
    avg_s = PrefixAverager(grid, omega.dual(q).values)
    best, worst_box = -np.inf, None
    for box in family:
        val = _box_functional(avg_w, avg_s, grid, box, family.adj, q, orientation)
        if val > best:
            best, worst_box = val, box
    return MuckenhouptReport(constant=best, q=q, lag=gamma, orientation=orientation,
                             mode=family.mode, worst_box=worst_box, n_boxes=len(family))


def a1_constant(grid: SpaceTimeGrid, omega: WeightField, gamma: float,
                orientation: str, family: BoxFamily) -> MuckenhouptReport:
    """Smallest discrete C with (backward for plus / forward for minus)
    lagged maximal of omega <= C * omega on covered cells."""
    op = "rect-" if orientation == "plus" else "rect+"
    if family.mode == "cylinder":
        op = "cyl-" if orientation == "plus" else "cyl+"
    mf = maximal.maximal_field(grid, omega.values, op, gamma, family)
    cov = mf.covered
    if not cov.any():
        raise EmptyFamily("no covered cells")
    ratio = np.where(cov, mf.values / omega.values, -np.inf)
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return MuckenhouptReport(constant=float(ratio[idx]), q=1.0, lag=gamma,
                             orientation=orientation, mode=family.mode,
                             worst_box=None, n_boxes=len(family))


def _region_weight_sum(grid, values, region: Region) -> float:
    return PrefixAverager(grid, values).region_sum(region)


def absolute_continuity_check(grid: SpaceTimeGrid, omega: WeightField, q: float,
                              gamma: float, box: ParabolicBox, subset: Region,
                              aq_constant: float, adj=None, side: str = "upper"):
    """Forward-in-time doubling: compares omega(lower) against the
    constant-weighted subset bound (side='upper' uses S inside the upper
    part; side='lower' runs the dual inequality with sigma and P inside the
    lower part).  Returns lhs, rhs and their ratio (expected <= 1)."""
    low = box_region(grid, box, "lower", adj)
    up = box_region(grid, box, "upper", adj)
    sub_mask = subset.mask()
    if side == "upper":
        if np.any(sub_mask & ~up.mask()):
            raise SubsetNotContained("S must lie inside the upper part")
        lhs = _region_weight_sum(grid, omega.values, low)
        rhs = (aq_constant * (low.measure / subset.measure) ** q
               * _region_weight_sum(grid, omega.values, subset))
    else:
        sig = omega.dual(q).values
        qp = q / (q - 1.0)
        if np.any(sub_mask & ~low.mask()):
            raise SubsetNotContained("P must lie inside the lower part")
        lhs = _region_weight_sum(grid, sig, up)
        rhs = (aq_constant ** (qp - 1.0) * (up.measure / subset.measure) ** qp
               * _region_weight_sum(grid, sig, subset))
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}


def time_shift_check(grid: SpaceTimeGrid, omega: WeightField, q: float,
                     gamma: float, box: ParabolicBox, theta: float,
                     aq_constant: float, adj=None):
    """Forward time shift: the lower-part average of omega is controlled by
    the average over the copy shifted forward by theta*(1+gamma)*l^p, with
    the A_q constant to the power ceil(theta); dually for sigma shifted
    backward."""
    if theta <= 0:
        raise ValueError("require theta > 0")
    lp = box.edge(adj) ** grid.p
    offset = theta * (1.0 + gamma) * lp
    low = box_region(grid, box, "lower", adj)
    up = box_region(grid, box, "upper", adj)
    shifted_low = translate_region(low, offset)
    shifted_up = translate_region(up, -offset)
    for reg in (shifted_low, shifted_up):
        if reg.t_start < 0 or reg.t_stop > grid.nt:
            raise ShiftOutOfGrid(f"shift theta={theta} leaves the time grid")
    sig = omega.dual(q).values
    bound = aq_constant ** np.ceil(theta)
    lhs1 = PrefixAverager(grid, omega.values).region_average(low)
    rhs1 = bound * PrefixAverager(grid, omega.values).region_average(shifted_low)
    lhs2 = PrefixAverager(grid, sig).region_average(up)
    rhs2 = bound * PrefixAverager(grid, sig).region_average(shifted_up)
    return {"lhs_weight": lhs1, "rhs_weight": rhs1,
            "lhs_dual": lhs2, "rhs_dual": rhs2,
            "bound_exponent": int(np.ceil(theta)),
            "holds": bool(lhs1 <= rhs1 * (1 + 1e-12) and lhs2 <= rhs2 * (1 + 1e-12))}


def two_offset_functional(grid: SpaceTimeGrid, omega: WeightField, q: float,
                          gamma: float, box: ParabolicBox, theta1: float,
                          theta2: float, adj=None) -> float:
    """A_q functional with the lower part shifted back by theta1*(1+gamma)*l^p
    and the upper part shifted forward by theta2*(1+gamma)*l^p; admissible
    whenever theta1 + theta2 > -2*gamma/(1+gamma)."""
    if theta1 + theta2 <= -2.0 * gamma / (1.0 + gamma):
        raise ValueError("offsets collapse the lag window")
    lp = box.edge(adj) ** grid.p
    low = translate_region(box_region(grid, box, "lower", adj),
                           -theta1 * (1.0 + gamma) * lp)
    up = translate_region(box_region(grid, box, "upper", adj),
                          theta2 * (1.0 + gamma) * lp)
    for reg in (low, up):
        if reg.t_start < 0 or reg.t_stop > grid.nt:
            raise ShiftOutOfGrid("offset leaves the time grid")
    sig = omega.dual(q).values
    return (PrefixAverager(grid, omega.values).region_average(low)
            * PrefixAverager(grid, sig).region_average(up) ** (q - 1.0))
