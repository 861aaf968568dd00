"""Hierarchical dyadic cube systems and adjacent (shifted) systems.

Cubes at level k partition the space, nest across levels, and sit between
two center balls of radii c1*delta^k and C1*delta^k (times the system's
length scale).  The Euclidean fast path uses exact translated dyadic grids
with delta = 1/2 and a constant absolute shift of extent/3 per axis, which
keeps every shifted hierarchy nested and puts shifted cube boundaries at
distance >= side/3 from unshifted ones at every level.

All four invariants are re-verified exhaustively after construction; the
builders never return an unverified system.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageFailure, InvariantViolation
from .space import Ball, PointCloudSpace


@dataclass
class Level:
    k: int
    centers: np.ndarray          # alpha -> point id of z_alpha^k
    assign: np.ndarray           # point id -> alpha
    parent: np.ndarray           # alpha -> alpha at level k-1 (-1 at the top)


@dataclass
class DyadicSystem:
    delta: float
    c0: float
    C0: float
    k_min: int
    k_max: int
    scale: float                 # edge length at level k is scale * delta^k
    levels: dict[int, Level]
    tau: int = 0
    shift: np.ndarray | None = None
    c1: float = 0.0              # c0 / (3 K0^2), set by the builder
    C1: float = 0.0              # 2 K0 C0, set by the builder

    def edge_length(self, k: int) -> float:
        return self.scale * self.delta ** k

    def n_cubes(self, k: int) -> int:
        return len(self.levels[k].centers)

    def cube_members(self, k: int, alpha: int) -> np.ndarray:
        return np.flatnonzero(self.levels[k].assign == alpha)

    def cube_of_point(self, k: int, i: int) -> int:
        return int(self.levels[k].assign[i])

    def cube_diam(self, space: PointCloudSpace, k: int, alpha: int) -> float:
        mem = self.cube_members(k, alpha)
        return float(space.dist[np.ix_(mem, mem)].max())

    def to_json_dict(self) -> dict:
        return {
            "delta": self.delta, "scale": self.scale, "tau": self.tau,
            "levels": {
                str(k): {
                    "centers": lv.centers.tolist(),
                    "cubes": [self.cube_members(k, a).tolist()
                              for a in range(len(lv.centers))],
                    "parent": lv.parent.tolist(),
                }
                for k, lv in self.levels.items()
            },
        }


def _verify(space: PointCloudSpace, sys_: DyadicSystem, c1: float, C1: float):
    D = space.dist
    for k in range(sys_.k_min, sys_.k_max + 1):
        lv = sys_.levels[k]
        ek = sys_.edge_length(k)
        z = lv.centers
        if len(z) > 1:
            sep = D[np.ix_(z, z)].copy()
            np.fill_diagonal(sep, np.inf)
            if sep.min() < sys_.c0 * ek - 1e-12:
                raise InvariantViolation(k, int(sep.min(axis=None).argmin()), "net_separation")
        for a in range(len(z)):
            mem = np.flatnonzero(lv.assign == a)
            if mem.size == 0:
                raise InvariantViolation(k, a, "empty_cube")
            inner = np.flatnonzero(D[z[a]] < c1 * ek)
            if not np.isin(inner, mem).all():
                raise InvariantViolation(k, a, "inner_sandwich")
            if D[z[a], mem].max() >= C1 * ek:
                raise InvariantViolation(k, a, "outer_sandwich")
        if k > sys_.k_min:
            up = sys_.levels[k - 1]
            if not np.array_equal(lv.parent[lv.assign], up.assign):
                raise InvariantViolation(k, -1, "nesting")


def _attach_verified(space, sys_: DyadicSystem):
    sys_.c1 = sys_.c0 / (3.0 * space.quasi_K0 ** 2)
    sys_.C1 = 2.0 * space.quasi_K0 * sys_.C0
    _verify(space, sys_, sys_.c1, sys_.C1)
    return sys_


def _fast_path_levels(space: PointCloudSpace, delta: float, k_range, shift: np.ndarray):
    coords = space.coords
    dim = coords.shape[1]
    extent = space.extent
    k_min, k_max = k_range
    levels: dict[int, Level] = {}
    prev_key_to_alpha = None
    prev_assign = None
    for k in range(k_min, k_max + 1):
        side = extent * delta ** k
        idx = np.floor((coords - shift[None, :]) / side).astype(np.int64)
        keys = [tuple(row) for row in idx]
        uniq = sorted(set(keys))
        key_to_alpha = {kk: a for a, kk in enumerate(uniq)}
        assign = np.array([key_to_alpha[kk] for kk in keys], dtype=np.int64)
        centers = np.empty(len(uniq), dtype=np.int64)
        for a in range(len(uniq)):
            mem = np.flatnonzero(assign == a)
            mid = (coords[mem].min(axis=0) + coords[mem].max(axis=0)) / 2.0
            off = np.abs(coords[mem] - mid[None, :]).max(axis=1)
            centers[a] = mem[np.argmin(off)]
        if prev_key_to_alpha is None:
            parent = np.full(len(uniq), -1, dtype=np.int64)
        else:
            # translation-nested grids: any member determines the parent
            parent = np.empty(len(uniq), dtype=np.int64)
            for a in range(len(uniq)):
                mem0 = np.flatnonzero(assign == a)[0]
                parent[a] = prev_assign[mem0]
        levels[k] = Level(k=k, centers=centers, assign=assign, parent=parent)
        prev_key_to_alpha = key_to_alpha
        prev_assign = assign
    return levels


def _greedy_net(space: PointCloudSpace, sep: float, seeds: np.ndarray, order: np.ndarray):
    """Maximal sep-separated set containing `seeds`, scanning `order`."""
    chosen = list(seeds)
    for i in order:
        if i in seeds:
            continue
        if all(space.dist[i, j] >= sep for j in chosen):
            chosen.append(int(i))
    return np.array(chosen, dtype=np.int64)


def build_dyadic(space: PointCloudSpace, delta: float = 0.5, c0: float | None = None,
                 C0: float | None = None, k_range: tuple[int, int] = (0, 3),
                 tau: int = 0, shift: np.ndarray | None = None,
                 order: np.ndarray | None = None) -> DyadicSystem:
    """Construct a dyadic cube system; verifies all invariants before returning.

    Euclidean grids take the exact shifted-dyadic fast path (delta = 1/2 by
    convention there); other spaces use nested greedy nets with top-down
    parent-consistent membership.
    """
    k_min, k_max = k_range
    if space.kind == "euclidean_grid" and space.coords is not None:
        dim = space.coords.shape[1]
        if shift is None:
            shift = np.zeros(dim)
        sys_ = DyadicSystem(delta=delta, c0=0.5, C0=0.6, k_min=k_min, k_max=k_max,
                            scale=space.extent,
                            levels=_fast_path_levels(space, delta, k_range, shift),
                            tau=tau, shift=shift)
        return _attach_verified(space, sys_)

    if c0 is None:
        c0 = space.extent
    if C0 is None:
        C0 = space.extent
    if c0 > C0:
        raise ValueError("require c0 <= C0")
    K0 = space.quasi_K0
    if 12.0 * K0 ** 3 * C0 * delta > c0:
        warnings.warn("sufficient condition 12*K0^3*C0*delta <= c0 violated; "
                      "invariants are still verified post-build", stacklevel=2)
    if order is None:
        order = np.arange(space.n)
    levels: dict[int, Level] = {}
    prev_centers = np.array([], dtype=np.int64)
    prev_assign = None
    for k in range(k_min, k_max + 1):
        sepk = c0 * delta ** k
        centers = _greedy_net(space, sepk, prev_centers, order)
        assign = np.empty(space.n, dtype=np.int64)
        parent = np.empty(len(centers), dtype=np.int64)
        if prev_assign is None:
            for i in range(space.n):
                d = space.dist[i, centers]
                assign[i] = int(np.lexsort((centers, d))[0])
            parent[:] = -1
        else:
            # candidates restricted to centers sitting in the point's parent cube
            cen_parent = prev_assign[centers]
            for i in range(space.n):
                cand = np.flatnonzero(cen_parent == prev_assign[i])
                d = space.dist[i, centers[cand]]
                assign[i] = int(cand[np.lexsort((centers[cand], d))[0]])
            parent[:] = cen_parent
        levels[k] = Level(k=k, centers=centers, assign=assign, parent=parent)
        prev_centers, prev_assign = centers, assign
    sys_ = DyadicSystem(delta=delta, c0=c0, C0=C0, k_min=k_min, k_max=k_max,
                        scale=1.0, levels=levels, tau=tau)
    return _attach_verified(space, sys_)


@dataclass
class AdjacentSystem:
    grids: list
    location_const: float = 0.0
    r_min: float = 0.0
    r_max: float = 0.0

    @property
    def K(self) -> int:
        return len(self.grids)


def _axis_shifts(dim: int, extent: float):
    shifts = []
    for mask in range(2 ** dim):
        shifts.append(np.array([(extent / 3.0) if (mask >> a) & 1 else 0.0
                                for a in range(dim)]))
    return shifts


def build_adjacent(space: PointCloudSpace, delta: float = 0.5,
                   k_range: tuple[int, int] = (0, 3), n_sample_balls: int = 100,
                   seed: int = 0, K: int = 4, c0=None, C0=None) -> AdjacentSystem:
    """K dyadic grids such that sampled balls are each inside some cube.

    Euclidean fast path: 2^dim grids shifted by extent/3 per axis.  General
    spaces: greedy nets started from K rotated point orders; coverage is an
    empirical check over sampled balls, not a construction guarantee.
    """
    if space.kind == "euclidean_grid" and space.coords is not None:
        dim = space.coords.shape[1]
        grids = [build_dyadic(space, delta, k_range=k_range, tau=t, shift=s)
                 for t, s in enumerate(_axis_shifts(dim, space.extent))]
    else:
        K0 = space.quasi_K0
        if 96.0 * K0 ** 6 * delta > 1.0:
            warnings.warn("sufficient condition 96*K0^6*delta <= 1 violated; "
                          "coverage is checked empirically", stacklevel=2)
        grids = []
        base = np.arange(space.n)
        for t in range(K):
            order = np.roll(base, -(t * space.n) // max(K, 1))
            grids.append(build_dyadic(space, delta, c0=c0, C0=C0,
                                      k_range=k_range, tau=t, order=order))
    adj = AdjacentSystem(grids=grids)
    adj.r_min = grids[0].edge_length(grids[0].k_max) / 6.0
    adj.r_max = grids[0].edge_length(grids[0].k_min) / 3.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_sample_balls):
        c = int(rng.integers(space.n))
        r = float(np.exp(rng.uniform(np.log(adj.r_min), np.log(adj.r_max))))
        ball = Ball(c, r)
        tau, k, alpha = locate_ball(adj, space, ball)
        diam = grids[tau].cube_diam(space, k, alpha)
        worst = max(worst, diam / r)
    adj.location_const = worst
    return adj


def locate_ball(adj: AdjacentSystem, space: PointCloudSpace, ball: Ball):
    """Smallest cube (tau, k, alpha), over all grids, whose member set
    contains the ball's member set."""
    if ball.radius < adj.r_min:
        raise CoverageFailure(f"radius {ball.radius} below covered range "
                              f"[{adj.r_min}, {adj.r_max}]")
    mem = space.ball_members(ball)
    g0 = adj.grids[0]
    for k in range(g0.k_max, g0.k_min - 1, -1):
        for tau, grid in enumerate(adj.grids):
            alpha = grid.cube_of_point(k, ball.center)
            if np.isin(mem, grid.cube_members(k, alpha)).all():
                return tau, k, alpha
    raise CoverageFailure(f"no cube contains ball(center={ball.center}, r={ball.radius})")
