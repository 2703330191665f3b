import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import gamma

from s3paneitz.quadrature import (
    MAX_RES, MIN_RES, NORTH, S3_VOLUME, gauss_grid, integrate_sphere, reflect,
    reflection_closure, sphere_grid,
)


def sphere_moment(alpha):
    """int_{S^3} x^alpha dmu by the Gamma-function formula (zero for odd alpha)."""
    alpha = np.asarray(alpha)
    if np.any(alpha % 2):
        return 0.0
    b = (alpha + 1) / 2.0
    return 2.0 * np.prod(gamma(b)) / gamma(b.sum())


def test_gauss_weights_sum_and_second_moment():
    g = gauss_grid(37)
    assert g.weights.sum() == pytest.approx(np.pi / 2, abs=1e-14)
    assert g.integrate(g.nodes**2) == pytest.approx(np.pi / 8, abs=1e-14)


def test_gauss_grid_is_mirror_symmetric_bitwise():
    g = gauss_grid(64)
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    assert np.array_equal(g.weights, g.weights[::-1])
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("n", [0, 1, -3])
def test_gauss_grid_rejects_tiny_sizes(n):
    with pytest.raises(ValueError):
        gauss_grid(n)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 40), data=st.data())
def test_gauss_rule_exact_up_to_degree_2n_minus_1(n, data):
    deg = data.draw(st.integers(0, 2 * n - 1))
    coef = np.random.default_rng(deg + 100 * n).normal(size=deg + 1)
    p = np.polynomial.Polynomial(coef)
    ref, _ = integrate.quad(lambda t: p(t) * np.sqrt(1 - t * t), -1, 1,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    g = gauss_grid(n)
    assert g.integrate(p(g.nodes)) == pytest.approx(ref, abs=1e-11 * max(1, np.abs(coef).sum()))


def test_sphere_grid_shape_norms_and_volume():
    g = sphere_grid(8)
    assert g.size == 2 * 8**3
    assert np.max(np.abs(np.linalg.norm(g.points, axis=1) - 1)) <= 1e-12
    assert g.weights.sum() == pytest.approx(S3_VOLUME, rel=1e-14)


@pytest.mark.parametrize("alpha", [(2, 0, 0, 0), (0, 0, 0, 2), (2, 2, 0, 0), (4, 0, 2, 2),
                                   (1, 0, 0, 0), (0, 3, 2, 0), (6, 0, 0, 8), (2, 2, 2, 2)])
def test_sphere_grid_integrates_monomials_exactly(alpha):
    g = sphere_grid(8)
    vals = np.prod(g.points ** np.asarray(alpha), axis=1)
    assert integrate_sphere(vals, g) == pytest.approx(sphere_moment(alpha), abs=1e-13)


def test_sphere_grid_closed_under_coordinate_reflections():
    g = sphere_grid(6)
    key = {tuple(np.round(p, 12)) for p in g.points}
    for i in range(4):
        e = np.eye(4)[i]
        assert all(tuple(np.round(p, 12)) in key for p in reflect(g.points, e))


@pytest.mark.parametrize("res", [MIN_RES - 1, MAX_RES + 1])
def test_sphere_grid_resolution_bounds(res):
    with pytest.raises(ValueError):
        sphere_grid(res)


def test_integrate_rejects_length_mismatch():
    g = sphere_grid(4)
    with pytest.raises(ValueError):
        g.integrate(np.ones(g.size - 1))


def test_reflection_closure_keeps_mass_and_exactness():
    rng = np.random.default_rng(1)
    u = rng.normal(size=4)
    u /= np.linalg.norm(u)
    g = reflection_closure(sphere_grid(6), u)
    assert g.weights.sum() == pytest.approx(S3_VOLUME, rel=1e-13)
    alpha = (2, 0, 2, 0)
    vals = np.prod(g.points ** np.asarray(alpha), axis=1)
    assert g.integrate(vals) == pytest.approx(sphere_moment(alpha), abs=1e-12)
    # closed under the reflection
    from scipy.spatial import cKDTree
    d, idx = cKDTree(g.points).query(reflect(g.points, u))
    assert d.max() < 1e-9
    assert np.allclose(g.weights[idx], g.weights, rtol=1e-12)


def test_reflection_closure_merges_points_on_the_mirror():
    g = sphere_grid(4)
    closed = reflection_closure(g, NORTH)
    assert closed.size == g.size
    assert np.allclose(np.sort(closed.weights), np.sort(g.weights))
