import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_maximal
from parweight import maximal
from parweight.errors import CoverageMismatch
from parweight.pargeo import cylinder_family, rectangle_family

GAMMA = 0.25


@pytest.fixture(scope="module")
def small_fam(grid, adj):
    return rectangle_family(grid, adj, GAMMA, k_values=[1], time_stride=4)


def test_maximal_field_matches_naive(grid, small_fam, rng):
    f = rng.random((grid.space.n, grid.nt))
    mf = maximal.maximal_field(grid, f, "rect+", GAMMA, small_fam)
    vals, covered = naive_maximal(grid, f, "upper", GAMMA, small_fam)
    assert np.array_equal(mf.covered, covered)
    assert np.allclose(mf.values[covered], vals[covered], rtol=1e-13)


def test_maximal_constant_field_is_one(grid, rect_fam):
    mf = maximal.maximal_field(grid, np.ones((grid.space.n, grid.nt)),
                               "rect-", GAMMA, rect_fam)
    assert np.all(mf.values[mf.covered] == 1.0)
    assert mf.covered.all()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.1, 10.0))
def test_scaling_and_sublinearity(grid, small_fam, seed, c):
    rng = np.random.default_rng(seed)
    f = rng.random((grid.space.n, grid.nt))
    g = rng.random((grid.space.n, grid.nt))
    mf = maximal.maximal_field(grid, f, "rect+", GAMMA, small_fam).values
    mg = maximal.maximal_field(grid, g, "rect+", GAMMA, small_fam).values
    mcf = maximal.maximal_field(grid, c * f, "rect+", GAMMA, small_fam).values
    msum = maximal.maximal_field(grid, f + g, "rect+", GAMMA, small_fam).values
    assert np.allclose(mcf, c * mf, rtol=1e-12)
    assert np.all(msum <= mf + mg + 1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_monotonicity(grid, small_fam, seed):
    rng = np.random.default_rng(seed)
    f = rng.random((grid.space.n, grid.nt))
    g = f + rng.random((grid.space.n, grid.nt))
    fam = cylinder_family(grid, GAMMA, edges=[0.5], center_stride=2,
                          time_stride=2)
    mf = maximal.maximal_field(grid, f, "cyl+", GAMMA, fam).values
    mg = maximal.maximal_field(grid, g, "cyl+", GAMMA, fam).values
    assert np.all(mf <= mg + 1e-12)


def test_restricted_operator_subset(grid, adj):
    fam = rectangle_family(grid, adj, GAMMA, k_values=[1, 2])
    f = np.ones((grid.space.n, grid.nt))
    full = maximal.maximal_field(grid, f, "rect+", GAMMA, fam)
    restr = maximal.maximal_field(grid, f, "rect+", GAMMA, fam, restrict=(0, 1))
    assert restr.covered.sum() <= full.covered.sum()
    assert np.all(restr.values <= full.values + 1e-12)


def test_weak_le_strong_chebyshev(grid, rect_fam, exp_weight):
    q = 2.0
    testset = maximal.make_testset(grid, rect_fam, seed=3)
    weak = maximal.weak_type_ratio(grid, exp_weight, q, GAMMA, "rect+",
                                   rect_fam, testset)
    strong = maximal.strong_type_ratio(grid, exp_weight, q, GAMMA, "rect+",
                                       rect_fam, testset)
    assert 0 < weak <= strong ** q + 1e-12
    assert np.isfinite(strong)


def test_zero_field_skipped_with_warning(grid, rect_fam, exp_weight):
    z = np.zeros((grid.space.n, grid.nt))
    with pytest.warns(UserWarning, match="zero"):
        val = maximal.weak_type_ratio(grid, exp_weight, 2.0, GAMMA, "rect+",
                                      rect_fam, [z])
    assert val == 0.0


def test_equivalence_constant_field_exact_one(grid, adj):
    f = np.ones((grid.space.n, grid.nt))
    for g in (0.0, GAMMA):
        res = maximal.maximal_equivalence_check(grid, f, g, adj,
                                                k_values=[1, 2])
        assert res["c_fwd"] == 1.0 and res["c_bwd"] == 1.0


def test_equivalence_random_fields_finite(grid, adj, rng):
    for _ in range(5):
        f = rng.random((grid.space.n, grid.nt)) + 0.1
        res = maximal.maximal_equivalence_check(grid, f, GAMMA, adj,
                                                k_values=[1, 2])
        assert np.isfinite(res["c_fwd"]) and res["c_fwd"] > 0
        assert np.isfinite(res["c_bwd"]) and res["c_bwd"] > 0


def test_snapped_lag(grid):
    lp = 4 * grid.dt
    assert maximal.snapped_lag(grid, 0.3, lp) <= 0.3
    assert maximal.snapped_lag(grid, 0.0, lp) == 0.0
    snapped = maximal.snapped_lag(grid, 0.3, lp)
    assert grid.is_aligned(snapped * lp)
