"""Randomized verification suites with measured margins.

Each suite returns a SuiteResult whose ``metrics`` hold the measured
quantities and whose ``passed`` flag compares them with the thresholds
recorded alongside.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .paneitz import (
    green_kernel, neumann_kernel, nn_energy_of_green, paneitz_eigenvalue,
    psi_derivative, spectral_resolvent_kernel,
)
from .quadrature import S3_VOLUME, gauss_grid, reflection_closure, sphere_grid
from .rearrange import (
    HalfSpace, kernel_matrix, on_sphere, polarize, riesz_gap,
    symmetrize_sphere, symmetrize_zonal,
)
from .solver import (
    CONSTANT_MINIMIZER, kazdan_warner_residual, minimize_perturbed,
    random_positive_zonal,
)
from .zonal import (
    ZonalFunction, convolve, funk_hecke_multipliers, is_monotone, kernel,
    min_difference,
)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": self.passed,
                "metrics": self.metrics, "thresholds": self.thresholds}


def random_increasing_kernel(rng, grid, degree=4):
    """k(t) = c + int_{-1}^t q(s)^2 ds with q a random polynomial.

    k' = q^2 >= 0, so k is non-decreasing; c > 0 keeps it positive.
    """
    q = rng.normal(size=degree + 1)
    prim = npoly.polyint(npoly.polymul(q, q), lbnd=-1.0)
    prim[0] += rng.random()
    return kernel(lambda t: npoly.polyval(t, prim), grid)


def random_unit_vector(rng, dim=4):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_field(rng, grid):
    """Independent uniform samples on [0, 1)."""
    return rng.random(grid.size)


def random_bumps(rng, grid, n=3):
    """Sum of ``n`` bumps c exp(kappa x.p) with random c, kappa and p."""
    v = np.zeros(grid.size)
    for _ in range(n):
        p = random_unit_vector(rng)
        v += rng.random() * np.exp(rng.uniform(0.0, 3.0) * (grid.points @ p))
    return v


def green_suite(grid=None, L=16):
    """Multipliers of the Green kernel and its polar profile."""
    grid = grid or gauss_grid(256)
    k = green_kernel(grid)
    mu = funk_hecke_multipliers(k, L)
    lam = paneitz_eigenvalue(np.arange(L + 1))
    theta = np.linspace(0.0, np.pi, 1001)
    psi_err = np.max(np.abs(k(np.cos(theta)) - np.sin(theta / 2) / (4 * np.pi)))
    m = {"mu0_error": abs(mu[0] - 16.0 / 15.0),
         "mu_lambda_error": float(np.max(np.abs(mu * lam + 1.0))),
         "psi_error": float(psi_err)}
    th = {"mu0_error": 1e-10, "mu_lambda_error": 1e-8, "psi_error": 1e-12}
    return SuiteResult("psi", all(m[key] <= th[key] for key in th), m, th)


def kernel_suite(eps_list=(0.05, 0.1, 0.2), grid=None, L=64):
    """Neumann vs spectral k_eps, strict decrease, flat end at theta = pi."""
    grid = grid or gauss_grid(256)
    m = {}
    ok = True
    for eps in eps_list:
        kn = neumann_kernel(eps, grid=grid, L=L)
        ks = spectral_resolvent_kernel(eps, L=L, grid=grid)
        dist = float(np.max(np.abs(kn.values - ks.values)))
        decreasing = is_monotone(ks.values, increasing=False, strict=True)
        slope = float(abs(psi_derivative(ks, np.pi)[0]))
        m[str(eps)] = {"sup_distance": dist, "tail_bound": kn.truncation,
                       "strictly_decreasing": decreasing,
                       "min_decrease": min_difference(ks.values, increasing=False),
                       "psi_slope_at_pi": slope}
        ok &= dist <= 1e-8 and kn.truncation <= 1e-10 and decreasing and slope <= 1e-6
    th = {"sup_distance": 1e-8, "tail_bound": 1e-10, "psi_slope_at_pi": 1e-6}
    return SuiteResult("kernel", bool(ok), m, th)


def rearrangement_suite(n_functions=100, n_halfspaces=20, seed=0, grid=None, res=6):
    """Equimeasurability, L^p preservation, idempotence and polarization."""
    rng = np.random.default_rng(seed)
    grid = grid or gauss_grid(256)
    eq_err = lp_err = 0.0
    idem = True
    for _ in range(n_functions):
        f = ZonalFunction(grid, np.exp(rng.normal() * random_positive_zonal(rng, grid).values)
                          - rng.random() * 2.0)
        r = symmetrize_zonal(f)
        levels = np.unique(f.values)
        above_f = np.array([np.sum(grid.measure[f.values > s]) for s in levels])
        above_r = np.array([r.measure_above(s) for s in levels])
        eq_err = max(eq_err, float(np.max(np.abs(above_f - above_r))))
        for p in (1, 2, 6):
            direct = np.sum(grid.measure * np.abs(f.values) ** p) ** (1.0 / p)
            lp_err = max(lp_err, abs(r.lp_norm(p) - direct) / direct)
        once = r.symmetrized
        idem &= np.array_equal(symmetrize_zonal(once).symmetrized.values, once.values)
    target = gauss_grid(64)
    pol_err = 0.0
    base = sphere_grid(res)
    for _ in range(n_halfspaces):
        H = HalfSpace(random_unit_vector(rng))
        g = reflection_closure(base, H.normal)
        vals = rng.normal(size=g.size)
        fh = polarize(vals, g, H)
        a = symmetrize_sphere(vals, g, target).symmetrized.values
        b = symmetrize_sphere(fh, g, target).symmetrized.values
        pol_err = max(pol_err, float(np.max(np.abs(a - b))))
    m = {"equimeasurability_error": eq_err, "lp_relative_error": float(lp_err),
         "idempotent": bool(idem), "polarization_error": pol_err}
    th = {"equimeasurability_error": 1e-12, "lp_relative_error": 1e-12,
          "polarization_error": 0.0}
    ok = eq_err <= 1e-12 and lp_err <= 1e-12 and idem and pol_err == 0.0
    return SuiteResult("rearrange", bool(ok), m, th)


def riesz_suite(n_pairs=200, res=8, seed=0):
    """Riesz gaps for random nonnegative pairs and increasing kernels.

    Each pair is drawn on the product grid, half of them as iid samples and
    half as sums of random exponential bumps.  The pre-symmetrized check
    reuses f*, g* lifted back onto the grid.
    """
    rng = np.random.default_rng(seed)
    grid = sphere_grid(res)
    t_grid = gauss_grid(64)
    min_gap = np.inf
    sym_gap = 0.0
    for i in range(n_pairs):
        k = random_increasing_kernel(rng, t_grid)
        mat = kernel_matrix(k, grid)
        draw = random_field if i % 2 else random_bumps
        f, g = draw(rng, grid), draw(rng, grid)
        min_gap = min(min_gap, riesz_gap(k, f, g, grid, mat))
        fs = on_sphere(symmetrize_sphere(f, grid), grid)
        gs = on_sphere(symmetrize_sphere(g, grid), grid)
        sym_gap = max(sym_gap, abs(riesz_gap(k, fs, gs, grid, mat)))
    m = {"min_gap": float(min_gap), "max_symmetrized_gap": float(sym_gap)}
    th = {"min_gap": -1e-6, "max_symmetrized_gap": 1e-8}
    return SuiteResult("riesz", bool(min_gap >= -1e-6 and sym_gap <= 1e-8), m, th)


def convolution_suite(n_pairs=100, seed=0, grid=None, L=64):
    """Convolutions of random increasing kernels stay increasing."""
    rng = np.random.default_rng(seed)
    grid = grid or gauss_grid(256)
    worst = np.inf
    for _ in range(n_pairs):
        k1 = random_increasing_kernel(rng, grid)
        k2 = random_increasing_kernel(rng, grid)
        worst = min(worst, min_difference(convolve(k1, k2, L).values))
    m = {"min_difference": float(worst)}
    th = {"min_difference": -1e-9}
    return SuiteResult("convolution", bool(worst >= -1e-9), m, th)


def green_energy_suite(degrees=(16, 32, 64, 128)):
    """|E(Pi_L K)| decreasing in L and small at the top degree."""
    grid = gauss_grid(max(256, 2 * max(degrees)))
    e = [abs(nn_energy_of_green(L, grid)) for L in degrees]
    bound = 0.01 * (15.0 / 16.0) * S3_VOLUME
    ok = all(b < a for a, b in zip(e, e[1:])) and e[-1] <= bound
    m = {"abs_energy": dict(zip(map(str, degrees), e))}
    return SuiteResult("green", bool(ok), m, {"top_degree_bound": bound})


def kw_suite(eps_list=(0.05, 0.1, 0.2), seed=0, grid=None):
    """KW residuals vanish on solutions and not on the family chi = 1 + t/2."""
    grid = grid or gauss_grid(256)
    rng = np.random.default_rng(seed)
    one = ZonalFunction(grid, np.ones(grid.size))
    worst = kazdan_warner_residual(one, one).max_abs
    worst = max(worst, kazdan_warner_residual(
        one.with_values(np.full(grid.size, CONSTANT_MINIMIZER)), one).max_abs)
    for eps in eps_list:
        r = minimize_perturbed(eps, random_positive_zonal(rng, grid), tol=1e-12,
                               max_iter=2000)
        chi = r.u.with_values(r.s + eps * r.u.values ** 8)
        worst = max(worst, kazdan_warner_residual(r.u, chi).max_abs)
    nonsol = kazdan_warner_residual(one, ZonalFunction(grid, 1.0 + grid.nodes / 2.0)).max_abs
    m = {"max_on_solutions": worst, "non_solution": nonsol}
    th = {"max_on_solutions": 1e-8, "non_solution": 0.1}
    return SuiteResult("kw", bool(worst <= 1e-8 and nonsol >= 0.1), m, th)


SUITES = {
    "riesz": riesz_suite,
    "convolution": convolution_suite,
    "kernel": kernel_suite,
    "psi": green_suite,
    "green": green_energy_suite,
    "kw": kw_suite,
    "rearrange": rearrangement_suite,
}
