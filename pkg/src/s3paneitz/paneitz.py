"""Paneitz operator P = Delta^2 + Delta/2 - 15/16 on the round S^3.

On degree-l harmonics Delta acts as -l(l+2), so P is diagonal with
eigenvalue b^2 - b/2 - 15/16, b = l(l+2).  The kernel K = ||x-y||/(8 pi)
is minus the Green's function, and K_eps = -G_{P+eps} has multipliers
-1/(lambda_l + eps).
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .quadrature import S2_AREA, S3_VOLUME, Grid1D, gauss_grid
from .zonal import (
    SpectralZonal, ZonalKernel, convolve, derivatives, evaluate_series,
    funk_hecke_multipliers, kernel, kernel_from_multipliers, l2_norm,
    require_positive, to_spectral, _series_from_multipliers, chebyshev_u,
)

LAMBDA0 = -15.0 / 16.0
EPS_MAX = 15.0 / 16.0
DEFAULT_DEGREE = 64
DEFAULT_GRID = 256
GREEN_SUP = 1.0 / (4.0 * np.pi)  # k(-1)


class UnderResolvedWarning(UserWarning):
    pass


def laplacian_eigenvalue(l):
    """Magnitude b_l = l(l+2) of the degree-l Laplacian eigenvalue."""
    l = np.asarray(l, dtype=float)
    return l * (l + 2.0)


def paneitz_eigenvalue(l):
    b = laplacian_eigenvalue(l)
    lam = b * b - 0.5 * b - 15.0 / 16.0
    return float(lam) if lam.ndim == 0 else lam


@dataclass(frozen=True)
class PaneitzSpectrum:
    eigenvalues: np.ndarray

    @property
    def L(self):
        return len(self.eigenvalues) - 1


def paneitz_spectrum(L):
    return PaneitzSpectrum(paneitz_eigenvalue(np.arange(int(L) + 1)))


def paneitz_apply(c):
    return SpectralZonal(paneitz_eigenvalue(np.arange(c.L + 1)) * c.coeffs)


def _check_eps(eps, allow_zero=True):
    lo_ok = eps >= 0 if allow_zero else eps > 0
    if not (lo_ok and eps < EPS_MAX):
        bound = "[0" if allow_zero else "(0"
        raise ValueError(f"eps must lie in {bound}, 15/16), got {eps}")


def energy(f, L=DEFAULT_DEGREE, tol=1e-8):
    """E(f) = sum lambda_l a_l^2 over degrees <= L.

    Warns with UnderResolvedWarning when the part of the energy above the
    degree cap exceeds ``tol`` relative to max(1, |E|).
    """
    a = to_spectral(f).coeffs
    L = min(int(L), len(a) - 1)
    lam = paneitz_eigenvalue(np.arange(len(a)))
    contrib = lam * a * a
    e = float(contrib[:L + 1].sum())
    tail = abs(float(contrib[L + 1:].sum()))
    if tail > tol * max(1.0, abs(e)):
        warnings.warn(f"energy above degree {L} is {tail:.2e}", UnderResolvedWarning,
                      stacklevel=2)
    return e


def energy_direct(f):
    """Quadrature of (Delta f)^2 - |grad f|^2 / 2 - 15/16 f^2.

    Derivatives come from the degree n-1 interpolant; the zonal gradient
    satisfies |grad f|^2 = (1 - t^2) f'(t)^2.
    """
    d1, d2 = derivatives(f)
    t = f.t
    lap = (1.0 - t**2) * d2 - 3.0 * t * d1
    grad2 = (1.0 - t**2) * d1**2
    dens = lap**2 - 0.5 * grad2 - 15.0 / 16.0 * f.values**2
    return S2_AREA * f.grid.integrate(dens)


def energy_eps(f, eps, L=DEFAULT_DEGREE):
    _check_eps(eps)
    return energy(f, L) + eps * l2_norm(f) ** 2


def inverse_l6_norm(f):
    require_positive(f)
    return float((S2_AREA * f.grid.integrate(f.values ** -6.0)) ** (1.0 / 6.0))


@dataclass(frozen=True)
class EnergyReport:
    E: float
    E_eps: float
    quotient: float
    l2: float
    inv_l6: float


def paneitz_quotient(f, eps=0.0, L=DEFAULT_DEGREE):
    """||f^{-1}||_{L^6}^2 E_eps(f) with its components."""
    require_positive(f)
    _check_eps(eps)
    e = energy(f, L)
    l2 = l2_norm(f)
    e_eps = e + eps * l2 * l2
    inv6 = inverse_l6_norm(f)
    return EnergyReport(e, e_eps, e_eps * inv6 * inv6, l2, inv6)


def sharp_bound(eps=0.0):
    """-(15/16 - eps) |S^3|^{4/3}."""
    return -(15.0 / 16.0 - eps) * S3_VOLUME ** (4.0 / 3.0)


# ---------------------------------------------------------------------------
# Green's kernel and the perturbed resolvent


def green_profile(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt(np.clip(1.0 - t, 0.0, None)) / (4.0 * np.sqrt(2.0) * np.pi)


def green_kernel(grid=None):
    """k(t) = sqrt(1 - t) / (4 sqrt(2) pi), the profile of ||x - y|| / (8 pi)."""
    return kernel(green_profile, grid or gauss_grid(DEFAULT_GRID), "cusp")


def psi_profile(k):
    """theta -> k(cos theta) on [0, pi]."""
    return lambda theta: k(np.cos(np.asarray(theta, dtype=float)))


def psi_derivative(k, theta, h=1e-3):
    """d/dtheta of psi with a fourth-order stencil kept inside [0, pi].

    Central differences are used in the interior; within 2h of an endpoint
    the stencil is one-sided, so the value at pi does not rely on the even
    extension of psi.
    """
    psi = psi_profile(k)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.empty_like(theta)
    for i, th in enumerate(theta):
        if th + 2 * h > np.pi:
            x = th - h * np.arange(5)
            c = -np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / 12.0
        elif th - 2 * h < 0.0:
            x = th + h * np.arange(5)
            c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        else:
            x = th + h * np.array([-2.0, -1.0, 1.0, 2.0])
            c = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
        out[i] = np.dot(c, psi(x)) / h
    return out


def resolvent_multipliers(eps, L):
    lam = paneitz_eigenvalue(np.arange(int(L) + 1))
    return -1.0 / (lam + eps)


def neumann_kernel(eps, J=None, grid=None, L=DEFAULT_DEGREE, tail_tol=1e-10):
    """Partial sum k + eps k*k + ... + eps^J k^{*(J+1)} of the resolvent series.

    Each power is one more call to ``convolve``.  Since k >= 0 the sup norm
    of T_k is int k = 16/15, so the dropped tail is bounded by
    ||k||_inf q^{J+1} / (1 - q) with q = 16 eps / 15; with ``J=None`` the
    smallest J meeting ``tail_tol`` is used.  The bound is stored in
    ``truncation``.
    """
    _check_eps(eps, allow_zero=False)
    q = eps * 16.0 / 15.0
    def tail(j):
        return GREEN_SUP * q ** (j + 1) / (1.0 - q)
    if J is None:
        J = 0
        while tail(J) > tail_tol:
            J += 1
    k = green_kernel(grid)
    power = k
    smooth = None
    for j in range(1, J + 1):
        power = convolve(k, power, L)
        term = eps ** j * power.spectrum
        smooth = term if smooth is None else smooth + term
    series = kernel_from_multipliers(smooth, k.grid) if smooth is not None else None

    def func(t):
        v = green_profile(t)
        return v if series is None else v + series.func(t)

    return ZonalKernel(k.grid, func(k.grid.nodes), "cusp", func, None, tail(J))


def spectral_resolvent_kernel(eps, L=DEFAULT_DEGREE, grid=None):
    """k_eps synthesized from its multipliers -1/(lambda_l + eps).

    The cusp is carried by the exact Green profile; only the difference
    k_eps - k, whose multipliers eps / (lambda_l (lambda_l + eps)) decay like
    l^{-8}, is expanded in U_l up to degree ``L``.  ``truncation`` bounds the
    sup norm of the dropped degrees.
    """
    _check_eps(eps, allow_zero=False)
    grid = grid or gauss_grid(DEFAULT_GRID)
    lam = paneitz_eigenvalue(np.arange(L + 1))
    diff = eps / (lam * (lam + eps))
    c = _series_from_multipliers(diff)

    def func(t):
        t = np.asarray(t, dtype=float)
        series = (chebyshev_u(t.ravel(), L) @ c).reshape(t.shape)
        return green_profile(t) + series

    # |U_l| <= l + 1; the multiplier tail is bounded termwise
    ls = np.arange(L + 1, L + 20001, dtype=float)
    lt = paneitz_eigenvalue(ls)
    bound = float(np.sum(eps / (lt * (lt + eps)) * (ls + 1) ** 2 / S3_VOLUME))
    mu = -1.0 / (lam + eps)
    return ZonalKernel(grid, func(grid.nodes), "cusp", func, mu, bound)


def nn_energy_of_green(L, grid=None):
    """E of the degree-L truncation of the zonal function x -> K(N, x).

    Coefficients come from quadrature of the closed-form profile, so the
    result is independent of the Paneitz eigenvalue identity for T_K.
    """
    if L < 4:
        raise ValueError("nn_energy_of_green needs L >= 4")
    k = green_kernel(grid)
    mu = funk_hecke_multipliers(k, L)
    a = mu * (np.arange(L + 1) + 1) / (np.pi * np.sqrt(2.0))
    return float(np.sum(paneitz_eigenvalue(np.arange(L + 1)) * a * a))


def truncated_green(L, grid=None):
    """Zonal samples of the degree-L truncation of K(N, .)."""
    from .zonal import from_spectral
    k = green_kernel(grid)
    mu = funk_hecke_multipliers(k, L)
    a = mu * (np.arange(L + 1) + 1) / (np.pi * np.sqrt(2.0))
    return from_spectral(SpectralZonal(a), k.grid)


def weighted_q_functional(rho, chi, L=DEFAULT_DEGREE):
    """-2 (int chi rho^{-6})^{1/3} int P rho . rho on the round S^3."""
    require_positive(rho, "rho")
    require_positive(chi, "chi")
    if rho.grid is not chi.grid and not np.array_equal(rho.t, chi.t):
        raise ValueError("rho and chi must share a grid")
    m = S2_AREA * rho.grid.integrate(chi.values * rho.values ** -6.0)
    return -2.0 * m ** (1.0 / 3.0) * energy(rho, L)


def spectrum_table(L, eps_list=()):
    """Rows (l, lambda_l, mu_l(eps) for each eps)."""
    rows = []
    for l in range(int(L) + 1):
        lam = paneitz_eigenvalue(l)
        rows.append([l, lam] + [-1.0 / (lam + e) for e in eps_list])
    return rows
