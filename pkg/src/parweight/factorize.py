"""Rubio de Francia factorization and Coifman-Rochberg constructions.

The factorization runs a Neumann series phi = sum_i (2*That)^-i T^i g for
the sublinear operator pairing the backward and forward lagged maximal
operators; u = omega^(1/q) phi^(q-1) and v = omega^(-1/q) phi then satisfy
omega = u v^(1-q) exactly, with one-sided A_1 certificates inherited from
T phi <= 2*That*phi.  Exponents q < 2 route through the dual weight at the
conjugate exponent with the time orientation swapped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import maximal
from .errors import DegenerateMeasure, Divergence
from .pargeo import BoxFamily, PrefixAverager, SpaceTimeGrid, box_region, rectangle_family
from .weights import WeightField, a1_constant


@dataclass
class FactorizationResult:
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    T_norm_est: float
    n_terms: int
    residual: float              # max relative error of omega - u v^(1-q)
    a1_plus_const_u: float       # realized A_1^+ constant of u
    a1_minus_const_v: float      # realized A_1^- constant of v
    certificates: dict
    route: str                   # "direct" | "dual"


def _lq_norm(grid: SpaceTimeGrid, f: np.ndarray, q: float) -> float:
    return float((np.abs(f) ** q * grid.cell_measure()).sum()) ** (1.0 / q)


class _PairedOperator:
    """T f = [w^(-1/q) M_past(f^(q-1) w^(1/q))]^(1/(q-1)) + w^(1/q) M_future(f w^(-1/q)).

    orientation "plus": past operator is the backward (lower-part) maximal,
    future is the forward one; "minus" swaps them.
    """

    def __init__(self, grid, w, q, gamma, fam_lower, fam_upper, orientation):
        self.grid, self.w, self.q, self.gamma = grid, w, q, gamma
        if orientation == "plus":
            self.op_past, self.fam_past = "rect-", fam_lower
            self.op_fut, self.fam_fut = "rect+", fam_upper
        else:
            self.op_past, self.fam_past = "rect+", fam_upper
            self.op_fut, self.fam_fut = "rect-", fam_lower
        self.wq = w ** (1.0 / q)

    def _m(self, f, op, fam):
        mf = maximal.maximal_field(self.grid, f, op, self.gamma, fam)
        if not mf.covered.all():
            raise DegenerateMeasure("maximal operator leaves cells uncovered; "
                                    "enlarge the box family")
        return mf.values

    def __call__(self, f: np.ndarray) -> np.ndarray:
        q = self.q
        first = (self._m(f ** (q - 1.0) * self.wq, self.op_past, self.fam_past)
                 / self.wq) ** (1.0 / (q - 1.0))
        second = self.wq * self._m(f / self.wq, self.op_fut, self.fam_fut)
        return first + second


def operator_norm_estimate(grid: SpaceTimeGrid, T, q: float, seed: int = 0,
                           n_seeds: int = 32) -> float:
    """Twice the largest ||Tf||_q/||f||_q ratio over seeded positive fields
    plus the constant field; a safety margin, not a certified norm."""
    rng = np.random.default_rng(seed)
    shape = (grid.space.n, grid.nt)
    best = 0.0
    fields = [np.ones(shape)]
    for _ in range(n_seeds):
        fields.append(rng.random(shape) + 1e-3)
    for f in fields:
        best = max(best, _lq_norm(grid, T(f), q) / _lq_norm(grid, f, q))
    return 2.0 * best


def _neumann_series(grid, T, g, q, That, tol, max_terms):
    """phi = sum_{i>=1} (2 That)^-i T^i g; returns (phi, n_terms)."""
    c = 1.0 / (2.0 * That)
    y = g.copy()
    phi = np.zeros_like(g)
    grow = 0
    prev = np.inf
    for i in range(1, max_terms + 1):
        y = T(y)
        term = c ** i * y
        phi += term
        tn = _lq_norm(grid, term, q)
        if tn >= prev:
            grow += 1
            if grow >= 3:
                raise Divergence("Neumann series terms growing")
        else:
            grow = 0
        prev = tn
        if tn < tol * max(_lq_norm(grid, phi, q), 1e-300):
            return phi, i
    warnings.warn("Neumann series hit the term cap before the tolerance",
                  stacklevel=2)
    return phi, max_terms


def _factorize_core(grid, w_values, q, gamma, fam_lower, fam_upper,
                    orientation, g, tol, max_terms, seed):
    T = _PairedOperator(grid, w_values, q, gamma, fam_lower, fam_upper, orientation)
    That = operator_norm_estimate(grid, T, q, seed=seed)
    if g is None:
        g = np.ones((grid.space.n, grid.nt))
        g /= _lq_norm(grid, g, q)
    try:
        phi, n_terms = _neumann_series(grid, T, g, q, That, tol, max_terms)
    except Divergence:
        That *= 4.0
        phi, n_terms = _neumann_series(grid, T, g, q, That, tol, max_terms)
    wq = w_values ** (1.0 / q)
    u = wq * phi ** (q - 1.0)
    v = phi / wq
    # certificates from T phi <= 2 That phi, termwise
    if orientation == "plus":
        m_u = T._m(u, "rect-", fam_lower)
        m_v = T._m(v, "rect+", fam_upper)
    else:
        m_u = T._m(u, "rect+", fam_upper)
        m_v = T._m(v, "rect-", fam_lower)
    cert = {
        "u_bound": (2.0 * That) ** (q - 1.0),
        "u_realized": float((m_u / u).max()),
        "v_bound": 2.0 * That,
        "v_realized": float((m_v / v).max()),
    }
    cert["holds"] = (cert["u_realized"] <= cert["u_bound"] * (1 + 1e-9)
                     and cert["v_realized"] <= cert["v_bound"] * (1 + 1e-9))
    return u, v, phi, That, n_terms, cert


def rdf_factorize(grid: SpaceTimeGrid, omega: WeightField, q: float,
                  gamma: float, adj, k_values=None, g=None, tol: float = 1e-10,
                  max_terms: int = 200, seed: int = 0) -> FactorizationResult:
    """Factorizes omega = u v^(1-q) with u in A_1^+ and v in A_1^-.

    Exponents q >= 2 run directly; q in (1, 2) factorizes the dual weight
    sigma = omega^(1-q') at q' with the orientation reversed and swaps the
    factors back, which keeps the inner exponent q - 1 >= 1 in both runs.
    """
    if not q > 1.0:
        raise ValueError("require q > 1")
    fam_lower = rectangle_family(grid, adj, gamma, k_values=k_values,
                                 require_parts=("lower",))
    fam_upper = rectangle_family(grid, adj, gamma, k_values=k_values,
                                 require_parts=("upper",))
    if q >= 2.0:
        u, v, phi, That, n_terms, cert = _factorize_core(
            grid, omega.values, q, gamma, fam_lower, fam_upper, "plus",
            g, tol, max_terms, seed)
        route = "direct"
    else:
        qp = q / (q - 1.0)
        sigma = omega.dual(q).values
        up, vp, phi, That, n_terms, cert = _factorize_core(
            grid, sigma, qp, gamma, fam_lower, fam_upper, "minus",
            g, tol, max_terms, seed)
        u, v = vp, up
        # core labels follow its own (u', v'); swap to match the final factors
        cert = {"u_bound": cert["v_bound"], "u_realized": cert["v_realized"],
                "v_bound": cert["u_bound"], "v_realized": cert["u_realized"],
                "holds": cert["holds"]}
        route = "dual"
    recon = u * v ** (1.0 - q)
    residual = float(np.max(np.abs(recon - omega.values) / omega.values))
    rect_lo = rectangle_family(grid, adj, gamma, k_values=k_values)
    a1u = a1_constant(grid, WeightField(u, preset="factor_u"), gamma, "plus", rect_lo).constant
    a1v = a1_constant(grid, WeightField(v, preset="factor_v"), gamma, "minus", rect_lo).constant
    return FactorizationResult(u=u, v=v, phi=phi, T_norm_est=That,
                               n_terms=n_terms, residual=residual,
                               a1_plus_const_u=a1u, a1_minus_const_v=a1v,
                               certificates=cert, route=route)


def compose_check(grid: SpaceTimeGrid, u: np.ndarray, v: np.ndarray, q: float,
                  gamma: float, family: BoxFamily):
    """A_q^+ constant of the recomposed weight u v^(1-q)."""
    from .weights import muckenhoupt_constant
    w = WeightField(u * v ** (1.0 - q), preset="composed")
    return muckenhoupt_constant(grid, w, q, gamma, "plus", family)


@dataclass
class CRConstruction:
    weight: WeightField
    epsilon: float
    maximal_values: np.ndarray
    a1_report: object


def measure_maximal(grid: SpaceTimeGrid, nu_mass: np.ndarray, op: str,
                    gamma: float, family: BoxFamily) -> maximal.MaximalField:
    """Lagged maximal of a nonnegative measure given as mass per cell:
    sup over containing boxes of nu(part)/lambda(part)."""
    if np.any(nu_mass < 0):
        raise DegenerateMeasure("measure must be nonnegative")
    density = nu_mass / grid.cell_measure()
    return maximal.maximal_field(grid, density, op, gamma, family)


def coifman_rochberg(grid: SpaceTimeGrid, nu_mass: np.ndarray, epsilon: float,
                     gamma: float, family_cyl: BoxFamily,
                     family_rect: BoxFamily | None = None) -> CRConstruction:
    """Builds (M^- nu)^epsilon as a candidate A_1^+ weight, epsilon in [0, 1).

    M^- is the backward cylinder maximal of the measure; cells where it
    vanishes (no family cylinder past them charges nu) make the power
    degenerate and are rejected.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("require epsilon in [0, 1)")
    mf = measure_maximal(grid, nu_mass, "cyl-", gamma, family_cyl)
    if not mf.covered.all():
        raise DegenerateMeasure("cylinder family leaves cells uncovered")
    if epsilon == 0.0:
        w = WeightField(np.ones((grid.space.n, grid.nt)), preset="cr(eps=0)")
    else:
        if np.any(mf.values <= 0):
            raise DegenerateMeasure("backward maximal vanishes somewhere; "
                                    "the epsilon power is not a weight")
        w = WeightField(mf.values ** epsilon, preset=f"cr(eps={epsilon})")
    rep = None
    if family_rect is not None:
        rep = a1_constant(grid, w, gamma, "plus", family_rect)
    return CRConstruction(weight=w, epsilon=epsilon, maximal_values=mf.values,
                          a1_report=rep)


def a1_decompose(grid: SpaceTimeGrid, omega: WeightField, kappa: float,
                 gamma_prime: float, family: BoxFamily):
    """Writes omega = phi * (M^- nu)^epsilon with nu = omega^(1+kappa) d lambda
    and epsilon = 1/(1+kappa); reports sup |log phi| as the distance of phi
    from a two-sided-bounded factor."""
    if kappa <= 0:
        raise ValueError("require kappa > 0")
    nu_mass = omega.values ** (1.0 + kappa) * grid.cell_measure()
    op = "cyl-" if family.mode == "cylinder" else "rect-"
    mf = measure_maximal(grid, nu_mass, op, gamma_prime, family)
    if not mf.covered.all() or np.any(mf.values <= 0):
        raise DegenerateMeasure("backward maximal of nu degenerate")
    eps = 1.0 / (1.0 + kappa)
    phi = omega.values / mf.values ** eps
    return {"phi": phi, "epsilon": eps, "sup_abs_log_phi": float(np.max(np.abs(np.log(phi)))),
            "maximal_values": mf.values}
