"""Finite quasi-metric measure spaces and their covering primitives.

A space is a finite point cloud with a symmetric pairwise distance matrix,
strictly positive per-point masses, and a declared quasi-triangle constant
K0.  Every sup-type quantity computed here (doubling ratio, minimal K0) is
a lower bound of the corresponding continuum supremum, since only finitely
many points/balls are scanned.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpace, NoChain


@dataclass(frozen=True)
class Ball:
    """Open ball: membership is strict, dist(center, y) < radius."""

    center: int
    radius: float


@dataclass
class PointCloudSpace:
    dist: np.ndarray          # (n, n) symmetric, zero diagonal
    masses: np.ndarray        # (n,) strictly positive
    quasi_K0: float = 1.0
    kind: str = "general"     # "euclidean_grid" or "general"
    coords: np.ndarray | None = None   # (n, dim) for euclidean kinds
    spacing: float = 0.0      # grid spacing (euclidean_grid), else min positive dist
    extent: float = 0.0

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.dist.ndim != 2 or self.dist.shape[0] != self.dist.shape[1]:
            raise InvalidSpace("distance matrix must be square")
        if self.dist.shape[0] != self.masses.shape[0]:
            raise InvalidSpace("masses length does not match point count")
        if self.n == 0:
            raise InvalidSpace("space must contain at least one point")
        if np.any(self.dist < 0):
            raise InvalidSpace("negative distance")
        if np.any(self.masses <= 0) or not np.all(np.isfinite(self.masses)):
            raise InvalidSpace("nonpositive mass")
        if self.spacing == 0.0:
            pos = self.dist[self.dist > 0]
            self.spacing = float(pos.min()) if pos.size else 0.0
        if self.extent == 0.0:
            self.extent = float(self.dist.max())

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def ball_members(self, ball: Ball) -> np.ndarray:
        """Point ids with dist(center, .) < radius (open ball)."""
        return np.flatnonzero(self.dist[ball.center] < ball.radius)

    def ball_measure(self, ball: Ball) -> float:
        return float(self.masses[self.ball_members(ball)].sum())


def euclidean_grid(dim: int, extent: float, n_cells: int) -> PointCloudSpace:
    """Uniform grid of cell centers on [0, extent]^dim with the sup metric.

    Each point carries mass (extent / n_cells)^dim so the total mass equals
    the volume of the box.
    """
    h = extent / n_cells
    axes = [np.arange(n_cells) * h + h / 2 for _ in range(dim)]
    coords = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    diffs = np.abs(coords[:, None, :] - coords[None, :, :])
    dist = diffs.max(axis=2)
    masses = np.full(coords.shape[0], h ** dim)
    return PointCloudSpace(
        dist=dist, masses=masses, quasi_K0=1.0, kind="euclidean_grid",
        coords=coords, spacing=h, extent=extent,
    )


def from_points(points, masses=None, metric: str = "euclidean_sup",
                K0: float = 1.0) -> PointCloudSpace:
    coords = np.atleast_2d(np.asarray(points, dtype=float))
    if coords.shape[0] == 1 and coords.shape[1] > 1 and np.asarray(points).ndim == 1:
        coords = coords.T
    diffs = np.abs(coords[:, None, :] - coords[None, :, :])
    if metric == "euclidean_sup":
        dist = diffs.max(axis=2)
    elif metric == "euclidean_l2":
        dist = np.sqrt((diffs ** 2).sum(axis=2))
    else:
        raise InvalidSpace(f"unknown metric {metric!r}")
    if masses is None:
        masses = np.ones(coords.shape[0])
    return PointCloudSpace(dist=dist, masses=np.asarray(masses, dtype=float),
                           quasi_K0=K0, kind="general", coords=coords)


def from_matrix(dist, masses, K0: float = 1.0) -> PointCloudSpace:
    return PointCloudSpace(dist=np.asarray(dist, dtype=float),
                           masses=np.asarray(masses, dtype=float), quasi_K0=K0)


def load_space(spec: dict) -> PointCloudSpace:
    """Build a space from the JSON point-cloud schema or the grid shorthand."""
    if "grid" in spec:
        g = spec["grid"]
        return euclidean_grid(int(g["dim"]), float(g["extent"]), int(g["n_cells"]))
    K0 = float(spec.get("K0", 1.0))
    masses = spec.get("masses")
    d = spec.get("dist", "euclidean_sup")
    if d == "matrix":
        return from_matrix(spec["matrix"], masses, K0)
    return from_points(spec["points"], masses, metric=d, K0=K0)


def load_space_file(path) -> PointCloudSpace:
    with open(path) as fh:
        return load_space(json.load(fh))


@dataclass
class ValidationReport:
    min_K0: float
    is_symmetric: bool
    declared_K0: float

    @property
    def K0_ok(self) -> bool:
        return self.declared_K0 >= self.min_K0 - 1e-12


def validate_space(space: PointCloudSpace) -> ValidationReport:
    """Exhaustive triple scan for the smallest admissible quasi-triangle
    constant.  0/0 triples count as 1."""
    D = space.dist
    n = space.n
    is_sym = bool(np.allclose(D, D.T, atol=0.0))
    if np.any(np.diag(D) != 0):
        raise InvalidSpace("nonzero diagonal distance")
    min_K0 = 1.0
    for k in range(n):
        denom = D[:, k][:, None] + D[k, :][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0, D / np.where(denom > 0, denom, 1.0), 1.0)
        bad = (denom == 0) & (D > 0)
        if np.any(bad):
            raise InvalidSpace("zero denominator with positive distance (coincident points)")
        min_K0 = max(min_K0, float(ratio.max()))
    return ValidationReport(min_K0=min_K0, is_symmetric=is_sym,
                            declared_K0=space.quasi_K0)


def doubling_constant(space: PointCloudSpace, centers=None, radii=None) -> float:
    """max over sampled (x, r) of mu(B(x, 2r)) / mu(B(x, r)).

    Lower bound of the true doubling constant: only the given sample of
    centers and the geometric radius ladder are scanned.
    """
    if centers is None:
        centers = range(space.n)
    if radii is None:
        lo = max(space.spacing, 1e-9) * 1.001
        hi = max(space.extent / 2, lo * 2)
        radii = lo * 2.0 ** np.arange(0, int(np.log2(hi / lo)) + 1)
    radii = np.asarray(list(radii), dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise InvalidSpace("radii ladder must be nonempty and positive")
    best = 1.0
    for x in centers:
        row = space.dist[x]
        for r in radii:
            small = space.masses[row < r].sum()
            big = space.masses[row < 2 * r].sum()
            best = max(best, float(big / small))
    return best


@dataclass
class VitaliCover:
    selected: list = field(default_factory=list)   # disjoint sub-family of Balls
    dilation: float = 5.0


def vitali_cover(space: PointCloudSpace, balls: list[Ball]) -> VitaliCover:
    """Greedy largest-radius-first disjoint subfamily.

    Every input ball shares a member with a selected ball of at least its
    radius, hence lies in the 5*K0^2 dilation of that selected ball.
    Disjointness is of member sets.  Ties broken by lowest center id, then
    input order.
    """
    dilation = 5.0 * space.quasi_K0 ** 2
    order = sorted(range(len(balls)),
                   key=lambda i: (-balls[i].radius, balls[i].center, i))
    selected = []
    covered = np.zeros(space.n, dtype=bool)
    for i in order:
        mem = space.ball_members(balls[i])
        if not covered[mem].any():
            selected.append(balls[i])
            covered[mem] = True
    return VitaliCover(selected=selected, dilation=dilation)


@dataclass
class GeodesicChain:
    chain: list            # point ids, chain[0] = x, chain[-1] = y
    links: list            # Ball D_i between consecutive chain points
    dilation: float        # Lambda = 4 K0^2
    step: float            # s = r / (2 K0 Ktilde)


def geodesic_chain(space: PointCloudSpace, x: int, y: int, r: float,
                   Ktilde: float = 1.0) -> GeodesicChain:
    """Chain of bounded steps from x to y whose distance to y drops by at
    least s = r/(2 K0 Ktilde) each step; link balls D_i of radius r/(2 K0).

    On a discrete grid the exact step bound Ktilde*s may fall between grid
    points, so one grid spacing of slack is allowed on the step size (the
    monotone decrease stays exact).
    """
    if Ktilde < 1.0 or r <= 0:
        raise ValueError("require Ktilde >= 1 and r > 0")
    K0 = space.quasi_K0
    s = r / (2.0 * K0 * Ktilde)
    slack = space.spacing
    link_r = r / (2.0 * K0)
    lam = 4.0 * K0 ** 2
    D = space.dist

    if x == y or D[x, y] < s:
        return GeodesicChain(chain=[x, y], links=[Ball(x, link_r)],
                             dilation=lam, step=s)

    chain = [x]
    cur = x
    max_steps = int(D[x, y] / s) + 2
    while D[cur, y] > Ktilde * s + slack:
        cand = np.flatnonzero((D[cur] <= Ktilde * s + slack)
                              & (D[:, y] <= D[cur, y] - s))
        if cand.size == 0:
            raise NoChain(f"no monotone step from point {cur} toward {y} at s={s}")
        nxt = int(cand[np.argmin(D[cand, y])])
        chain.append(nxt)
        cur = nxt
        if len(chain) > max_steps:
            raise NoChain("chain exceeded the N <= rho(x,y)/s + 1 budget")
    chain.append(y)
    links = [Ball(chain[i + 1], link_r) for i in range(len(chain) - 1)]
    return GeodesicChain(chain=chain, links=links, dilation=lam, step=s)
