import warnings

import numpy as np
import pytest
import sympy as sp

from s3paneitz.paneitz import (
    EPS_MAX, GREEN_SUP, LAMBDA0, UnderResolvedWarning, energy, energy_direct,
    energy_eps, green_kernel, inverse_l6_norm, neumann_kernel, nn_energy_of_green,
    paneitz_apply, paneitz_eigenvalue, paneitz_quotient, paneitz_spectrum,
    psi_derivative, resolvent_multipliers, sharp_bound, spectral_resolvent_kernel,
    spectrum_table, truncated_green, weighted_q_functional,
)
from s3paneitz.quadrature import S3_VOLUME, gauss_grid
from s3paneitz.zonal import (
    SpectralZonal, ZonalFunction, from_spectral, funk_hecke_multipliers, is_monotone,
    to_spectral, zonal,
)

GRID = gauss_grid(256)


def fd_laplacian(f, h=1e-2):
    """Zonal Laplace-Beltrami in theta, f'' + 2 cot(theta) f', 4th-order stencils."""
    def lap(theta):
        d1 = (-f(theta + 2 * h) + 8 * f(theta + h) - 8 * f(theta - h) + f(theta - 2 * h)) / (12 * h)
        d2 = (-f(theta + 2 * h) + 16 * f(theta + h) - 30 * f(theta)
              + 16 * f(theta - h) - f(theta - 2 * h)) / (12 * h * h)
        return d2 + 2 * np.cos(theta) / np.sin(theta) * d1
    return lap


@pytest.mark.parametrize("l, expected", [(1, 105 / 16), (2, 945 / 16)])
def test_eigenvalues_against_finite_difference_oracle(l, expected):
    y = lambda th: np.sin((l + 1) * th) / np.sin(th)  # noqa: E731  U_l(cos theta)
    lap = fd_laplacian(y)
    lap2 = fd_laplacian(lap)
    th = np.array([0.7, 1.3, 2.1])
    ratio = (lap2(th) + 0.5 * lap(th) - 15 / 16 * y(th)) / y(th)
    assert np.allclose(ratio, expected, rtol=1e-6)
    assert paneitz_eigenvalue(l) == expected


def test_first_eigenvalue_is_negative():
    assert paneitz_eigenvalue(0) == LAMBDA0 == -15 / 16
    lam = paneitz_spectrum(10).eigenvalues
    assert np.all(lam[1:] > 0) and np.all(np.diff(lam) > 0)


def test_spectrum_table_rows():
    rows = spectrum_table(3, [0.1])
    assert rows[0][:2] == [0, -0.9375]
    assert rows[1][2] == pytest.approx(-1 / (105 / 16 + 0.1))


def test_paneitz_apply_diagonal():
    c = SpectralZonal(np.ones(4))
    assert np.allclose(paneitz_apply(c).coeffs, paneitz_eigenvalue(np.arange(4)))


def test_energy_spectral_matches_direct_quadrature():
    f = zonal(lambda t: np.exp(0.7 * t) + t**3, gauss_grid(64))
    assert energy(f, L=63) == pytest.approx(energy_direct(f), rel=1e-9)


def test_energy_of_constants_and_sharp_bound():
    one = ZonalFunction(GRID, np.full(GRID.size, 2.0))
    assert energy(one) == pytest.approx(-15 / 16 * 4 * S3_VOLUME, rel=1e-13)
    rep = paneitz_quotient(one)
    assert rep.quotient == pytest.approx(sharp_bound(), rel=1e-12)
    assert paneitz_quotient(one, eps=0.2).quotient == pytest.approx(sharp_bound(0.2), rel=1e-12)
    assert sharp_bound() == pytest.approx(-15 / 16 * S3_VOLUME ** (4 / 3))


def test_quotient_is_scale_invariant():
    f = zonal(lambda t: 2 + t, GRID)
    a = paneitz_quotient(f, 0.1).quotient
    b = paneitz_quotient(f.with_values(3.7 * f.values), 0.1).quotient
    assert a == pytest.approx(b, rel=1e-12)


def test_under_resolved_energy_warns():
    f = zonal(lambda t: np.abs(t) + 1, GRID)
    with pytest.warns(UnderResolvedWarning):
        energy(f, L=8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        energy(zonal(lambda t: 1 + t, GRID), L=8)


@pytest.mark.parametrize("eps", [-0.1, EPS_MAX, 1.0])
def test_eps_range_is_enforced(eps):
    f = zonal(lambda t: 2 + t, GRID)
    with pytest.raises(ValueError):
        energy_eps(f, eps)
    with pytest.raises(ValueError):
        neumann_kernel(eps)


def test_positivity_is_required():
    with pytest.raises(ValueError):
        inverse_l6_norm(zonal(lambda t: t, GRID))


def test_green_profile_is_half_angle_sine():
    k = green_kernel(GRID)
    th = np.linspace(0, np.pi, 2001)
    assert np.max(np.abs(k(np.cos(th)) - np.sin(th / 2) / (4 * np.pi))) < 1e-15
    assert k(-1.0) == pytest.approx(GREEN_SUP)


def test_green_profile_is_annihilated_by_paneitz_away_from_pole():
    th = sp.symbols("theta", positive=True)
    psi = sp.sin(th / 2) / (4 * sp.pi)
    lap = lambda f: sp.diff(f, th, 2) + 2 * sp.cot(th) * sp.diff(f, th)  # noqa: E731
    p = lap(lap(psi)) + lap(psi) / 2 - sp.Rational(15, 16) * psi
    assert sp.simplify(p) == 0
    # psi'' = -psi / 4 is the one-dimensional identity behind it
    assert sp.simplify(sp.diff(psi, th, 2) + psi / 4) == 0


def test_psi_derivative_against_closed_form():
    k = green_kernel(GRID)
    th = np.array([0.0, 0.5, 2.0, np.pi])
    assert np.allclose(psi_derivative(k, th), np.cos(th / 2) / (8 * np.pi), atol=1e-10)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_resolvent_dual_paths_agree(eps):
    kn = neumann_kernel(eps)
    ks = spectral_resolvent_kernel(eps)
    assert kn.truncation <= 1e-10
    assert np.max(np.abs(kn.values - ks.values)) <= 1e-8
    assert is_monotone(ks.values, increasing=False, strict=True)
    assert abs(psi_derivative(ks, np.pi)[0]) <= 1e-6


def test_resolvent_kernel_multipliers():
    eps = 0.1
    ks = spectral_resolvent_kernel(eps)
    mu = funk_hecke_multipliers(ks, 10)
    assert np.allclose(mu, resolvent_multipliers(eps, 10), rtol=1e-12)
    # recomputed from samples rather than the cached spectrum
    ks_free = type(ks)(ks.grid, ks.values, "cusp", ks.func, None)
    assert np.allclose(funk_hecke_multipliers(ks_free, 10), resolvent_multipliers(eps, 10),
                       rtol=1e-9, atol=1e-12)


def test_neumann_truncation_bound_shrinks_with_terms():
    b = [neumann_kernel(0.2, J=j).truncation for j in (1, 3, 6)]
    assert b[0] > b[1] > b[2]


def test_green_energy_decays_with_truncation_degree():
    e = [abs(nn_energy_of_green(L, GRID)) for L in (16, 32, 64, 128)]
    assert all(b < a for a, b in zip(e, e[1:]))
    assert e[-1] <= 0.01 * 15 / 16 * S3_VOLUME
    with pytest.raises(ValueError):
        nn_energy_of_green(3)


def test_truncated_green_matches_profile():
    g = truncated_green(64, GRID)
    # the series converges like L^-3 pointwise to |x - N| / 8 pi
    assert np.max(np.abs(g.values - np.sqrt(1 - GRID.nodes) / (4 * np.sqrt(2) * np.pi))) < 1e-3


def test_weighted_q_functional_for_constants():
    rho = ZonalFunction(GRID, np.ones(GRID.size))
    chi = ZonalFunction(GRID, np.full(GRID.size, 2.0))
    expected = -2 * (2 * S3_VOLUME) ** (1 / 3) * (-15 / 16 * S3_VOLUME)
    assert weighted_q_functional(rho, chi) == pytest.approx(expected, rel=1e-12)


def test_energy_matches_spectral_sum_of_synthesized_function():
    rng = np.random.default_rng(0)
    c = rng.normal(size=9)
    f = from_spectral(SpectralZonal(c), GRID)
    assert energy(f) == pytest.approx(np.sum(paneitz_eigenvalue(np.arange(9)) * c * c), rel=1e-11)
    assert np.allclose(to_spectral(f, 8).coeffs, c, atol=1e-12)
