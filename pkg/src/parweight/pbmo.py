"""Parabolic BMO: best per-box oscillation constants, the seminorm over a
box family, John-Nirenberg tail profiling, and the log correspondence with
the one-sided Muckenhoupt classes.

The per-box objective avg_{future}(u - a)_+ + avg_{past}(a - u)_+ is convex
and piecewise linear in a, so its minimum sits on a breakpoint, which is a
u-value of one of the two parts; the scan over breakpoints is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllTailsZero, EmptyFamily
from .pargeo import BoxFamily, ParabolicBox, SpaceTimeGrid, box_region
from .weights import WeightField, muckenhoupt_constant


@dataclass
class OscillationResult:
    box: ParabolicBox
    a_best: float
    value: float
    orientation: str


@dataclass
class JNProfile:
    box: ParabolicBox
    a_best: float
    xi: np.ndarray
    upper_tail: np.ndarray       # lambda(R^+(gamma) & {(u-a)_+ > xi}) / lambda(R)
    lower_tail: np.ndarray       # lambda(R^-(gamma) & {(a-u)_+ > xi}) / lambda(R)
    A: float
    B: float
    degenerate: bool


def _part_samples(grid: SpaceTimeGrid, u: np.ndarray, box: ParabolicBox,
                  part: str, adj):
    region = box_region(grid, box, part, adj)
    ii, ss = region.cells()
    return u[ii, ss], grid.space.masses[ii] * grid.dt, region.measure


def best_oscillation_constant(grid: SpaceTimeGrid, u: np.ndarray,
                              box: ParabolicBox, orientation: str = "plus",
                              adj=None) -> OscillationResult:
    """Exact minimizer of the two-part one-sided oscillation; ties resolve
    to the leftmost minimizing breakpoint."""
    if not 0.0 < box.gamma < 1.0:
        raise ValueError("oscillation requires gamma in (0, 1)")
    if orientation == "plus":
        fut_part, past_part = "upper", "lower"
    else:
        fut_part, past_part = "lower", "upper"
    uf, wf, lam_f = _part_samples(grid, u, box, fut_part, adj)
    up_, wp, lam_p = _part_samples(grid, u, box, past_part, adj)
    a_grid = np.unique(np.concatenate([uf, up_]))
    # F(a) = sum_f w (u-a)_+ / lam_f + sum_p w (a-u)_+ / lam_p at each breakpoint
    fut = np.clip(uf[None, :] - a_grid[:, None], 0.0, None) @ wf / lam_f
    past = np.clip(a_grid[:, None] - up_[None, :], 0.0, None) @ wp / lam_p
    vals = fut + past
    i = int(np.argmin(vals))     # argmin takes the first, i.e. leftmost, minimum
    return OscillationResult(box=box, a_best=float(a_grid[i]),
                             value=float(vals[i]), orientation=orientation)


def pbmo_norm(grid: SpaceTimeGrid, u: np.ndarray, family: BoxFamily,
              orientation: str = "plus"):
    """Sup over the family of the best per-box oscillation."""
    if len(family) == 0:
        raise EmptyFamily("no boxes")
    worst = None
    for box in family:
        res = best_oscillation_constant(grid, u, box, orientation, family.adj)
        if worst is None or res.value > worst.value:
            worst = res
    return {"norm": worst.value, "worst": worst, "n_boxes": len(family)}


def jn_profile(grid: SpaceTimeGrid, u: np.ndarray, box: ParabolicBox,
               xi_grid=None, orientation: str = "plus", adj=None) -> JNProfile:
    """Tail fractions of the recentered field on both lagged parts and a
    least-squares exponential fit tail ~ A exp(-B xi) over nonzero tails."""
    res = best_oscillation_constant(grid, u, box, orientation, adj)
    a = res.a_best
    if orientation == "plus":
        fut_part, past_part = "upper", "lower"
    else:
        fut_part, past_part = "lower", "upper"
    uf, wf, _ = _part_samples(grid, u, box, fut_part, adj)
    up_, wp, _ = _part_samples(grid, u, box, past_part, adj)
    lam_full = box_region(grid, box, "full", adj).measure
    if xi_grid is None:
        spread = max(float(np.max(np.abs(np.concatenate([uf, up_]) - a))), 1e-12)
        xi_grid = np.linspace(0.0, spread, 17)[1:]
    xi_grid = np.asarray(xi_grid, dtype=float)
    upper = np.array([float(wf[(uf - a) > xi].sum()) for xi in xi_grid]) / lam_full
    lower = np.array([float(wp[(a - up_) > xi].sum()) for xi in xi_grid]) / lam_full
    y = np.concatenate([upper, lower])
    x = np.concatenate([xi_grid, xi_grid])
    keep = y > 0
    if not keep.any():
        return JNProfile(box=box, a_best=a, xi=xi_grid, upper_tail=upper,
                         lower_tail=lower, A=0.0, B=0.0, degenerate=True)
    if np.ptp(x[keep]) == 0:
        slope, intercept = 0.0, float(np.log(y[keep].max()))
    else:
        slope, intercept = np.polyfit(x[keep], np.log(y[keep]), 1)
    return JNProfile(box=box, a_best=a, xi=xi_grid, upper_tail=upper,
                     lower_tail=lower, A=float(np.exp(intercept)),
                     B=float(-slope), degenerate=False)


def jn_envelope(grid: SpaceTimeGrid, u: np.ndarray, family: BoxFamily,
                xi_grid=None, orientation: str = "plus"):
    """Single (A, B) pair fitted over the pooled nonzero tails of the family;
    raises AllTailsZero if every box is tail-free at every threshold."""
    xs, ys = [], []
    for box in family:
        prof = jn_profile(grid, u, box, xi_grid, orientation, family.adj)
        for tail in (prof.upper_tail, prof.lower_tail):
            keep = tail > 0
            xs.append(prof.xi[keep])
            ys.append(tail[keep])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if len(x) == 0:
        raise AllTailsZero("no nonzero tails in the family")
    if np.ptp(x) == 0:
        slope, intercept = 0.0, float(np.log(y.max()))
    else:
        slope, intercept = np.polyfit(x, np.log(y), 1)
    resid = float(np.max(np.abs(np.log(y) - (slope * x + intercept))))
    return {"A": float(np.exp(intercept)), "B": float(-slope),
            "max_log_residual": resid, "n_points": len(x)}


def log_correspondence_check(grid: SpaceTimeGrid, omega: WeightField, q: float,
                             family: BoxFamily):
    """u = -log omega should have small PBMO^+ norm exactly when omega has a
    moderate A_q^+ constant; returns both numbers each way."""
    u = -np.log(omega.values)
    g = family.boxes[0].gamma if len(family) else 0.0
    fwd = pbmo_norm(grid, u, family, "plus")
    aq = muckenhoupt_constant(grid, omega, q, g, "plus", family)
    back = WeightField(np.exp(-u), preset="exp(-u)")
    aq_back = muckenhoupt_constant(grid, back, q, g, "plus", family)
    return {"pbmo_norm_of_minus_log": fwd["norm"], "aq_constant": aq.constant,
            "aq_of_exp_minus_u": aq_back.constant}
