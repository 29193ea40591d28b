import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zomd.rng import RngStream
from zomd.sampling import (
    Direction,
    Scheme,
    sample_direction,
    sample_directions,
    surface_normal,
    uniform_draws_needed,
)

SPHERES = [Scheme.L1_SPHERE, Scheme.L2_SPHERE, Scheme.LINF_SPHERE]
ALL = list(Scheme)


def _batch(scheme, n, count, seed=0, stream=0):
    return sample_directions(scheme, n, RngStream(seed, stream), count)


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_l1_sphere_unit_l1_norm(n):
    E = _batch(Scheme.L1_SPHERE, n, 2000)
    np.testing.assert_allclose(np.abs(E).sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_l2_sphere_unit_l2_norm(n):
    E = _batch(Scheme.L2_SPHERE, n, 2000)
    np.testing.assert_allclose((E * E).sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_cube_surface_on_boundary(n):
    E = _batch(Scheme.LINF_SPHERE, n, 2000)
    m = np.abs(E).max(axis=1)
    np.testing.assert_array_equal(m, np.ones(len(E)))
    # the pinned face coordinate is exactly +-1
    hits = np.sum(np.abs(E) == 1.0, axis=1)
    assert np.all(hits >= 1)


def test_balls_stay_inside():
    B1 = _batch(Scheme.L1_BALL, 5, 4000)
    assert np.abs(B1).sum(axis=1).max() <= 1.0 + 1e-12
    Binf = _batch(Scheme.LINF_BALL, 5, 4000)
    assert np.abs(Binf).max() <= 1.0 + 1e-12


def test_rademacher_entries_are_signs():
    Z = _batch(Scheme.RADEMACHER, 6, 3000)
    assert set(np.unique(Z)) == {-1.0, 1.0}


def test_coordinate_single_scaled_entry():
    n = 4
    Z = _batch(Scheme.COORDINATE, n, 3000)
    np.testing.assert_allclose((Z * Z).sum(axis=1), float(n), atol=1e-12)
    assert np.all(np.count_nonzero(Z, axis=1) == 1)
    # every coordinate gets visited
    assert set(np.nonzero(Z)[1].tolist()) == set(range(n))


def test_scaled_gaussian_norm():
    n = 9
    Z = _batch(Scheme.SCALED_GAUSSIAN, n, 3000)
    np.testing.assert_allclose((Z * Z).sum(axis=1), float(n), atol=1e-9)


# ------------------------------------------------------------------- moments

def test_l1_sphere_second_moments():
    n, count = 5, 400000
    E = _batch(Scheme.L1_SPHERE, n, count, seed=101)
    want = 2.0 / (n * (n + 1))
    m2 = (E * E).mean(axis=0)
    se = (E * E).std(axis=0) / math.sqrt(count)
    assert np.all(np.abs(m2 - want) < 5 * se)
    cross = E[:, 0] * E[:, 1]
    assert abs(cross.mean()) < 5 * cross.std() / math.sqrt(count)


def test_l2_sphere_covariance_is_identity_over_n():
    n, count = 6, 300000
    E = _batch(Scheme.L2_SPHERE, n, count, seed=102)
    cov = E.T @ E / count
    assert np.linalg.norm(cov - np.eye(n) / n) < 5e-3


def test_cube_surface_second_moment():
    n, count = 6, 300000
    E = _batch(Scheme.LINF_SPHERE, n, count, seed=103)
    want = 1.0 / 3.0 + 2.0 / (3.0 * n)
    m2 = (E * E).mean(axis=0)
    se = (E * E).std(axis=0) / math.sqrt(count)
    assert np.all(np.abs(m2 - want) < 5 * se)


@pytest.mark.parametrize("scheme", [Scheme.RADEMACHER, Scheme.SCALED_GAUSSIAN,
                                    Scheme.COORDINATE])
def test_z_kinds_have_identity_second_moment(scheme):
    n, count = 4, 200000
    Z = _batch(scheme, n, count, seed=104)
    cov = Z.T @ Z / count
    assert np.max(np.abs(cov - np.eye(n))) < 5e-2


@pytest.mark.parametrize("n", [4, 16, 64])
def test_l2_sphere_max_coordinate_moment_bound(n):
    count = 10**6 if n <= 16 else 400000
    E = _batch(Scheme.L2_SPHERE, n, count, seed=105)
    minf2 = (np.abs(E).max(axis=1) ** 2).mean()
    assert minf2 <= 4.0 * math.log(n) / n


@pytest.mark.parametrize("n", [4, 16, 64])
@pytest.mark.parametrize("qbar", [2.0, 4.0])
def test_l2_sphere_q_norm_moment_bound(n, qbar):
    E = _batch(Scheme.L2_SPHERE, n, 200000, seed=106)
    mq2 = (np.sum(np.abs(E) ** qbar, axis=1) ** (2.0 / qbar)).mean()
    assert mq2 <= (qbar - 1.0) * n ** (2.0 / qbar - 1.0) + 1e-9


def test_ball_draws_fill_the_volume():
    # radii of l1-ball draws follow u^(1/n): mass near the boundary grows with n
    for n, lo in ((2, 0.4), (8, 0.8)):
        B = _batch(Scheme.L1_BALL, n, 50000, seed=107)
        frac = np.mean(np.abs(B).sum(axis=1) > 0.5)
        assert frac > lo


# ------------------------------------------------------------ surface_normal

def test_normal_l1_sign_pattern():
    d = Direction(np.array([0.5, -0.5]), Scheme.L1_SPHERE)
    np.testing.assert_allclose(surface_normal(d),
                               np.array([1.0, -1.0]) / math.sqrt(2.0))


def test_normal_l1_zero_coordinate_counts_positive():
    d = Direction(np.array([0.0, -1.0]), Scheme.L1_SPHERE)
    np.testing.assert_allclose(surface_normal(d),
                               np.array([1.0, -1.0]) / math.sqrt(2.0))


def test_normal_l2_is_the_point_itself():
    d = Direction(np.array([0.0, 1.0, 0.0]), Scheme.L2_SPHERE)
    np.testing.assert_array_equal(surface_normal(d), d.coords)


def test_normal_cube_basis_at_largest_entry():
    d = Direction(np.array([0.3, -1.0, 0.7]), Scheme.LINF_SPHERE)
    np.testing.assert_array_equal(surface_normal(d), [0.0, 0.0, 1.0])
    d = Direction(np.array([1.0, 0.2, -0.4]), Scheme.LINF_SPHERE)
    np.testing.assert_array_equal(surface_normal(d), [1.0, 0.0, 0.0])


def test_normal_cube_tie_breaks_to_first_index():
    d = Direction(np.array([0.7, 0.7, -0.1]), Scheme.LINF_SPHERE)
    np.testing.assert_array_equal(surface_normal(d), [1.0, 0.0, 0.0])


def test_normal_rejects_ball_schemes():
    d = Direction(np.array([0.1, 0.1]), Scheme.L1_BALL)
    with pytest.raises(ValueError):
        surface_normal(d)


# ------------------------------------------------------------- odds and ends

def test_dimension_must_be_at_least_two():
    with pytest.raises(ValueError):
        sample_direction(Scheme.L2_SPHERE, 1, RngStream(0))


def test_single_draw_matches_batch_head():
    for scheme in ALL:
        one = sample_direction(scheme, 5, RngStream(3, 1))
        batch = _batch(scheme, 5, 4, seed=3, stream=1)
        np.testing.assert_array_equal(one.coords, batch[0])


def test_draw_budget_is_fixed_per_scheme():
    for scheme in ALL:
        rng = RngStream(12)
        sample_direction(scheme, 7, rng)
        assert rng.counter == uniform_draws_needed(scheme, 7), scheme


def test_string_names_accepted():
    a = sample_direction("l1_sphere", 3, RngStream(4))
    b = sample_direction(Scheme.L1_SPHERE, 3, RngStream(4))
    np.testing.assert_array_equal(a.coords, b.coords)


@given(seed=st.integers(0, 2**32), n=st.integers(2, 12),
       scheme=st.sampled_from(SPHERES))
@settings(max_examples=60, deadline=None)
def test_sphere_membership_property(seed, n, scheme):
    e = sample_direction(scheme, n, RngStream(seed)).coords
    if scheme == Scheme.L1_SPHERE:
        assert abs(np.abs(e).sum() - 1.0) < 1e-12
    elif scheme == Scheme.L2_SPHERE:
        assert abs(e @ e - 1.0) < 1e-12
    else:
        assert np.abs(e).max() == 1.0
    nrm = surface_normal(Direction(e, scheme))
    assert abs(nrm @ nrm - 1.0) < 1e-12
