"""Reverse Hoelder search, self-improvement in q, A-infinity-type envelope
fitting, and time-lag transfer experiments.

The reverse Hoelder inequality compares the (kappa+1)-power mean of the
weight over the unlagged past part against the plain mean over the unlagged
future part; its dual runs on omega^(1-q') with the parts swapped.  The
(kappa, C) pairs reported are empirically realized values for the given
weight, family, and grid, not the continuum constants.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFamily, LadderExhausted
from .pargeo import BoxFamily, ParabolicBox, PrefixAverager, SpaceTimeGrid, box_region
from .weights import MuckenhouptReport, WeightField, muckenhoupt_constant

DEFAULT_KAPPA_LADDER = (1.0, 0.5, 0.25, 0.1, 0.05)


@dataclass
class RHIResult:
    kappa: float
    C: float
    worst_box: ParabolicBox | None
    mode: str
    side: str                    # "weight" | "dual"
    within_budget: bool


def _unlagged(box: ParabolicBox) -> ParabolicBox:
    return dataclasses.replace(box, gamma=0.0)


def rhi_constant(grid: SpaceTimeGrid, omega: WeightField, q: float,
                 family: BoxFamily, side: str, kappa: float):
    """Realized constant max over boxes of lhs/rhs at one kappa."""
    if len(family) == 0:
        raise EmptyFamily("no boxes")
    if side == "weight":
        lhs_vals = omega.values ** (kappa + 1.0)
        rhs_vals = omega.values
        past_part, future_part = "lower", "upper"
    else:
        qp = q / (q - 1.0)
        lhs_vals = omega.values ** ((1.0 - qp) * (kappa + 1.0))
        rhs_vals = omega.values ** (1.0 - qp)
        past_part, future_part = "upper", "lower"
    avg_l = PrefixAverager(grid, lhs_vals)
    avg_r = PrefixAverager(grid, rhs_vals)
    best, worst = -np.inf, None
    for box in family:
        b0 = _unlagged(box)
        lhs = avg_l.region_average(box_region(grid, b0, past_part, family.adj)) ** (1.0 / (kappa + 1.0))
        rhs = avg_r.region_average(box_region(grid, b0, future_part, family.adj))
        val = lhs / rhs
        if val > best:
            best, worst = val, box
    return best, worst


def reverse_holder_search(grid: SpaceTimeGrid, omega: WeightField, q: float,
                          family: BoxFamily, side: str = "weight",
                          kappa_ladder=DEFAULT_KAPPA_LADDER,
                          C_budget: float = 8.0) -> RHIResult:
    """Largest ladder kappa whose realized constant fits the budget; if none
    does, the smallest-kappa result is returned flagged out of budget."""
    ladder = sorted(kappa_ladder, reverse=True)
    last = None
    for kappa in ladder:
        C, worst = rhi_constant(grid, omega, q, family, side, kappa)
        last = RHIResult(kappa=kappa, C=C, worst_box=worst, mode=family.mode,
                         side=side, within_budget=C <= C_budget)
        if last.within_budget:
            return last
    return last


def self_improvement(grid: SpaceTimeGrid, omega: WeightField, q: float,
                     gamma: float, family: BoxFamily, epsilon_ladder,
                     budget_factor: float = np.inf):
    """Constants at the improved exponents q - eps; largest eps whose
    constant stays within budget_factor times the base constant."""
    base = muckenhoupt_constant(grid, omega, q, gamma, "plus", family).constant
    trend = {}
    chosen = None
    for eps in sorted(epsilon_ladder):
        if q - eps <= 1.0:
            raise ValueError(f"epsilon {eps} leaves the exponent range (q - eps must exceed 1)")
        c = muckenhoupt_constant(grid, omega, q - eps, gamma, "plus", family).constant
        trend[eps] = c
        if np.isfinite(c) and c <= budget_factor * base:
            chosen = eps
    if chosen is None:
        raise LadderExhausted("no ladder epsilon met the budget")
    return {"epsilon": chosen, "constant_at_q_minus_eps": trend[chosen],
            "base_constant": base, "trend": trend}


def ainfty_check(grid: SpaceTimeGrid, omega: WeightField, family: BoxFamily,
                 subset_fractions=(0.125, 0.25, 0.5, 1.0)):
    """Fits the smallest (eps, Ctilde) with
    omega(E) <= Ctilde * (lambda(E)/lambda(P^-))^eps * omega(P^+) over
    worst-case subsets E: for each box and target fraction, the cells of the
    past part with the LARGEST omega values (adversarial for an upper bound
    on omega(E)) up to the requested lambda fraction."""
    if len(family) == 0:
        raise EmptyFamily("no boxes")
    avg_w = PrefixAverager(grid, omega.values)
    pts_log_frac, pts_log_ratio = [], []
    for box in family:
        low = box_region(grid, box, "lower", family.adj)
        up = box_region(grid, box, "upper", family.adj)
        wmass_up = avg_w.region_sum(up)
        ii, ss = low.cells()
        wvals = omega.values[ii, ss]
        cmass = grid.space.masses[ii] * grid.dt
        order = np.argsort(-wvals, kind="stable")
        lam_cum = np.cumsum(cmass[order])
        w_cum = np.cumsum((wvals * cmass)[order])
        lam_total = low.measure
        for frac in subset_fractions:
            ncells = int(np.searchsorted(lam_cum, frac * lam_total - 1e-12)) + 1
            ncells = min(ncells, len(order))
            ratio = w_cum[ncells - 1] / wmass_up
            realized_frac = lam_cum[ncells - 1] / lam_total
            if ratio > 0 and realized_frac > 0:
                pts_log_frac.append(np.log(realized_frac))
                pts_log_ratio.append(np.log(ratio))
    x = np.asarray(pts_log_frac)
    y = np.asarray(pts_log_ratio)
    if np.ptp(x) == 0:
        eps = 1.0
    else:
        eps = max(float(np.polyfit(x, y, 1)[0]), 0.0)
    log_C = float(np.max(y - eps * x))
    resid = float(np.max(np.abs(y - eps * x - log_C))) if len(x) else 0.0
    return {"epsilon_fit": eps, "Ctilde_fit": float(np.exp(log_C)),
            "max_residual": resid, "n_points": len(x)}


def lag_transfer(grid: SpaceTimeGrid, omega: WeightField, q: float,
                 gamma_list, family: BoxFamily):
    """A_q^+ constants over the same spatial boxes re-lagged to each gamma,
    plus all pairwise ratios."""
    constants = {}
    for g in gamma_list:
        boxes = [dataclasses.replace(b, gamma=g) for b in family.boxes]
        fam_g = BoxFamily(boxes=boxes, mode=family.mode, adj=family.adj)
        constants[g] = muckenhoupt_constant(grid, omega, q, g, "plus", fam_g).constant
    ratios = {(a, b): constants[a] / constants[b]
              for a in gamma_list for b in gamma_list if a < b}
    return {"constants": constants, "ratios": ratios}


def lag_transfer_inequality(grid: SpaceTimeGrid, omega: WeightField, q: float,
                            gamma: float, gamma_prime: float, family: BoxFamily):
    """Per-box check of functional(gamma') <= ((1-gamma)/(1-gamma'))^q *
    functional(gamma), exact since the re-lagged parts are subsets."""
    if not gamma <= gamma_prime:
        raise ValueError("require gamma <= gamma'")
    factor = ((1.0 - gamma) / (1.0 - gamma_prime)) ** q
    avg_w = PrefixAverager(grid, omega.values)
    avg_s = PrefixAverager(grid, omega.dual(q).values)
    violations = []
    worst_margin = np.inf
    for box in family:
        bg = dataclasses.replace(box, gamma=gamma)
        bgp = dataclasses.replace(box, gamma=gamma_prime)
        f_g = (avg_w.region_average(box_region(grid, bg, "lower", family.adj))
               * avg_s.region_average(box_region(grid, bg, "upper", family.adj)) ** (q - 1.0))
        f_gp = (avg_w.region_average(box_region(grid, bgp, "lower", family.adj))
                * avg_s.region_average(box_region(grid, bgp, "upper", family.adj)) ** (q - 1.0))
        margin = factor * f_g - f_gp
        worst_margin = min(worst_margin, margin)
        if f_gp > factor * f_g * (1 + 1e-12):
            violations.append(box)
    return {"violations": violations, "n_boxes": len(family),
            "factor": factor, "worst_margin": worst_margin}
