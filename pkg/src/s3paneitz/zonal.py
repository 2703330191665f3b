"""Zonal harmonic analysis on S^3.

Degree-l zonal harmonics on S^3 are Chebyshev polynomials of the second
kind U_l(t), t = x.N.  With

    int_{S^3} U_l(x.N) U_m(x.N) dmu = 4 pi * (pi / 2) delta_lm = 2 pi^2 delta_lm

the orthonormal basis is Y_l = U_l / (pi sqrt 2).  Spectral coefficients
a_l = int f Y_l dmu therefore satisfy Parseval, ||f||_2^2 = sum a_l^2.

An invariant kernel k(x.y) acts on degree-l harmonics by the Funk-Hecke
multiplier

    mu_l(k) = 4 pi / (l + 1) * int_{-1}^{1} k(t) U_l(t) (1 - t^2)^{1/2} dt,

and its profile is recovered as k(t) = sum_l mu_l (l + 1) / (2 pi^2) U_l(t).
"""
import csv
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .quadrature import NORTH, S2_AREA, S3_VOLUME, Grid1D, gauss_grid

BASIS_SCALE = 1.0 / (np.pi * np.sqrt(2.0))
MONOTONE_TOL = 1e-9
STRICT_TOL = 1e-12


class ResolutionError(ValueError):
    """Requested accuracy is out of reach at the given degree cap."""


def chebyshev_u(t, L, derivatives=0):
    """U_0..U_L at ``t`` via the three-term recurrence.

    Returns an array of shape (len(t), L + 1), or a tuple of such arrays
    (U, U', U'') up to the requested derivative order.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = [np.zeros((t.size, L + 1)) for _ in range(derivatives + 1)]
    u = out[0]
    u[:, 0] = 1.0
    if L >= 1:
        u[:, 1] = 2.0 * t
    for l in range(1, L):
        u[:, l + 1] = 2.0 * t * u[:, l] - u[:, l - 1]
    if derivatives >= 1:
        d1 = out[1]
        if L >= 1:
            d1[:, 1] = 2.0
        for l in range(1, L):
            d1[:, l + 1] = 2.0 * u[:, l] + 2.0 * t * d1[:, l] - d1[:, l - 1]
    if derivatives >= 2:
        d2 = out[2]
        for l in range(1, L):
            d2[:, l + 1] = 4.0 * d1[:, l] + 2.0 * t * d2[:, l] - d2[:, l - 1]
    return out[0] if derivatives == 0 else tuple(out)


@lru_cache(maxsize=32)
def _theta_rule(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w


@dataclass(frozen=True, eq=False)
class ZonalFunction:
    """Samples phi(t_i) of a function f(x) = phi(x.pole) on a Grid1D."""

    grid: Grid1D
    values: np.ndarray
    pole: np.ndarray = NORTH

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("zonal samples must be finite")
        v.setflags(write=False)
        pole = np.array(self.pole, dtype=float)
        if abs(np.linalg.norm(pole) - 1.0) > 1e-12:
            raise ValueError("pole must be a unit 4-vector")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "pole", pole)

    @property
    def t(self):
        return self.grid.nodes

    @property
    def is_positive(self):
        return bool(self.values.min() > 0.0)

    def with_values(self, values):
        return replace(self, values=values)

    def __call__(self, t):
        """Evaluate the degree n-1 polynomial interpolant at ``t``."""
        return evaluate_series(to_spectral(self).coeffs, t)


def require_positive(f, name="function"):
    if not f.is_positive:
        raise ValueError(
            f"{name} must be strictly positive (min = {f.values.min():.3g})")
    return f


def zonal(func, grid, pole=NORTH):
    """Sample the profile ``func`` on ``grid``."""
    return ZonalFunction(grid, func(grid.nodes), pole)


@dataclass(frozen=True)
class SpectralZonal:
    """Orthonormal zonal-harmonic coefficients a_0..a_L."""

    coeffs: np.ndarray

    @property
    def L(self):
        return len(self.coeffs) - 1


def _basis(grid, L):
    return chebyshev_u(grid.nodes, L) * BASIS_SCALE


def to_spectral(f, L=None):
    n = f.grid.size
    L = n - 1 if L is None else int(L)
    if not 0 <= L < n:
        raise ResolutionError(f"degree cap {L} needs a grid with more than {L} nodes")
    w = f.grid.measure * f.values
    return SpectralZonal(_basis(f.grid, L).T @ w)


def from_spectral(c, grid, pole=NORTH):
    return ZonalFunction(grid, _basis(grid, c.L) @ c.coeffs, pole)


def evaluate_series(coeffs, t):
    """Sum a_l Y_l(t) at arbitrary points in [-1, 1]."""
    t = np.asarray(t, dtype=float)
    vals = chebyshev_u(t.ravel(), len(coeffs) - 1) @ coeffs * BASIS_SCALE
    return vals.reshape(t.shape)


def derivatives(f, L=None):
    """First and second t-derivatives of the interpolant at the grid nodes."""
    c = to_spectral(f, L)
    _, d1, d2 = chebyshev_u(f.t, c.L, derivatives=2)
    return d1 @ c.coeffs * BASIS_SCALE, d2 @ c.coeffs * BASIS_SCALE


def zonal_laplacian(f, L=None):
    """Laplace-Beltrami of the zonal lift: (1 - t^2) phi'' - 3 t phi'."""
    d1, d2 = derivatives(f, L)
    t = f.t
    return f.with_values((1.0 - t**2) * d2 - 3.0 * t * d1)


def l2_norm(f):
    return float(np.sqrt(S2_AREA * f.grid.integrate(f.values**2)))


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True, eq=False)
class ZonalKernel:
    """Profile k(t) of the invariant kernel K(x, y) = k(x.y).

    ``values`` are samples on ``grid``.  ``func`` is an exact evaluator when
    one is known (closed forms, band-limited series); otherwise evaluation
    interpolates the samples linearly.  ``spectrum`` caches multipliers
    that are known exactly for l < len(spectrum).  ``endpoint`` is
    "bounded" or "cusp" (square-root cusp at t = 1).  ``truncation`` is a
    sup-norm bound on anything dropped while building the kernel.
    """

    grid: Grid1D
    values: np.ndarray
    endpoint: str = "bounded"
    func: object = None
    spectrum: np.ndarray | None = None
    truncation: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,) or not np.all(np.isfinite(v)):
            raise ValueError("kernel samples must be finite, one per grid node")
        if self.endpoint not in ("bounded", "cusp"):
            raise ValueError(f"unknown endpoint tag {self.endpoint!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self):
        return self.grid.nodes

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        if self.func is not None:
            return self.func(t)
        return np.interp(t, self.grid.nodes, self.values)


def kernel(func, grid, endpoint="bounded"):
    """Kernel with an exact profile evaluator, tabulated on ``grid``."""
    return ZonalKernel(grid, func(grid.nodes), endpoint, func)


def constant_kernel(grid, c=1.0):
    return kernel(lambda t: np.full(np.shape(t), float(c)), grid)


def funk_hecke_multipliers(k, L, m=None):
    """mu_0..mu_L of ``k``.

    Exactly known multipliers are taken from ``k.spectrum``.  The rest come
    from Gauss-Legendre quadrature in the polar angle theta when an exact
    profile is available: the substitution t = cos(theta) turns the
    square-root cusp at t = 1 into the smooth sin(theta/2), and the default
    4x oversampling relative to the sample grid resolves it to machine
    precision.  Sample-only kernels fall back to the grid rule.
    """
    L = int(L)
    mu = np.empty(L + 1)
    known = 0
    if k.spectrum is not None:
        known = min(len(k.spectrum), L + 1)
        mu[:known] = k.spectrum[:known]
    if known == L + 1:
        return mu
    ls = np.arange(known, L + 1)
    if k.func is not None:
        m = m or max(4 * k.grid.size, 2 * L + 64)
        theta, w = _theta_rule(m)
        prof = k.func(np.cos(theta)) * np.sin(theta) * w
        mu[known:] = (S2_AREA / (ls + 1)) * (
            np.sin(np.outer(ls + 1, theta)) @ prof)
    else:
        u = chebyshev_u(k.t, L)[:, known:]
        mu[known:] = (S2_AREA / (ls + 1)) * (u.T @ (k.grid.weights * k.values))
    return mu


def funk_hecke_multiplier(k, l):
    """Eigenvalue of T_k on degree-``l`` spherical harmonics."""
    return float(funk_hecke_multipliers(k, l)[l])


def _series_from_multipliers(mu):
    ls = np.arange(len(mu))
    return mu * (ls + 1) / S3_VOLUME  # coefficients of U_l


def kernel_from_multipliers(mu, grid):
    """Band-limited kernel with the given multipliers."""
    mu = np.array(mu, dtype=float)
    c = _series_from_multipliers(mu)

    def func(t):
        t = np.asarray(t, dtype=float)
        return (chebyshev_u(t.ravel(), len(c) - 1) @ c).reshape(t.shape)

    return ZonalKernel(grid, func(grid.nodes), "bounded", func, mu)


def _reduced_double_integral(outer, inner, t, n_quad):
    """int_{S^3} outer(x.y) inner(y.z) dmu(y) for x.z = t.

    With y = cos(a) x + sin(a) w, w a unit vector orthogonal to x,

        y.z = t cos(a) + sqrt(1 - t^2) sin(a) s,   s = w.e,

    and the S^2 average over w reduces to 2 pi int_{-1}^{1} ds.  The polar
    range is split at a = arccos(t) where the inner profile may have its
    cusp, and the inner variable is refined near s = 1 with s = 1 - 2 v^2.
    """
    xg, wg = np.polynomial.legendre.leggauss(n_quad)
    theta_t = np.arccos(np.clip(t, -1.0, 1.0))
    a_nodes, a_w = [], []
    for lo, hi in ((0.0, theta_t), (theta_t, np.pi)):
        if hi - lo > 0:
            a_nodes.append(0.5 * (hi - lo) * (xg + 1.0) + lo)
            a_w.append(0.5 * (hi - lo) * wg)
    a = np.concatenate(a_nodes)
    wa = np.concatenate(a_w)
    # s in [-1, 0]: plain Gauss; s in [0, 1]: s = 1 - 2 v^2, v in [0, 1/sqrt 2]
    s1 = 0.5 * (xg - 1.0)
    w1 = 0.5 * wg
    vmax = 1.0 / np.sqrt(2.0)
    v = 0.5 * vmax * (xg + 1.0)
    s2 = 1.0 - 2.0 * v**2
    w2 = 0.5 * vmax * wg * 4.0 * v
    s = np.concatenate([s1, s2])
    ws = np.concatenate([w1, w2])
    arg = t * np.cos(a)[:, None] + np.sqrt(max(0.0, 1.0 - t * t)) * np.sin(a)[:, None] * s
    inner_vals = inner(np.clip(arg, -1.0, 1.0)) @ ws
    return float(2.0 * np.pi * np.sum(wa * np.sin(a) ** 2 * outer(np.cos(a)) * inner_vals))


def apply_kernel(k, f, L=64, method="spectral", tol=None, n_quad=96):
    """T_k f for a zonal ``f``; the result is zonal about the same pole.

    The spectral path multiplies coefficients by mu_l(k) up to degree ``L``.
    When ``tol`` is given, a coefficient tail of ``f`` above ``L`` larger
    than ``tol`` (relative, in L^2) raises ResolutionError.  The direct
    path evaluates the reduced double integral at every node.
    """
    if method == "direct":
        interp = f.__call__
        vals = [_reduced_double_integral(k, interp, ti, n_quad) for ti in f.t]
        return f.with_values(np.array(vals))
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    full = to_spectral(f).coeffs
    L = min(int(L), f.grid.size - 1)
    if tol is not None:
        tail = np.linalg.norm(full[L + 1:])
        if tail > tol * max(np.linalg.norm(full), 1e-300):
            raise ResolutionError(
                f"degree cap {L} drops a relative coefficient tail of "
                f"{tail / np.linalg.norm(full):.2e} > {tol:.1e}")
    mu = funk_hecke_multipliers(k, L)
    return from_spectral(SpectralZonal(mu * full[:L + 1]), f.grid, f.pole)


def convolve(k1, k2, L=64, method="spectral", n_quad=96):
    """Profile of K_{k1} * K_{k2}, tabulated on the grid of ``k1``.

    ``spectral`` multiplies multipliers degree by degree (exact for
    band-limited kernels up to ``L``); ``direct`` integrates the reduced
    double integral at each node and serves as the independent oracle.
    """
    if method == "spectral":
        mu = funk_hecke_multipliers(k1, L) * funk_hecke_multipliers(k2, L)
        return kernel_from_multipliers(mu, k1.grid)
    if method == "direct":
        vals = np.array([_reduced_double_integral(k1, k2, ti, n_quad) for ti in k1.t])
        return ZonalKernel(k1.grid, vals, "bounded")
    raise ValueError(f"unknown method {method!r}")


def lift_zonal(f, grid, pole=None):
    """Values of phi(x.pole) at the points of a SphereGrid."""
    pole = f.pole if pole is None else np.asarray(pole, dtype=float)
    if abs(np.linalg.norm(pole) - 1.0) > 1e-12:
        raise ValueError("pole must be a unit 4-vector")
    t = grid.points @ pole
    over = np.max(np.abs(t)) - 1.0
    if over > 1e-12:
        raise ValueError(f"dot products leave [-1, 1] by {over:.2e}")
    return f(np.clip(t, -1.0, 1.0))


# ---------------------------------------------------------------------------
# monotonicity certificates


def is_monotone(values, increasing=True, strict=False):
    """One-sided finite-difference certificate on ascending sample nodes."""
    d = np.diff(np.asarray(values, dtype=float))
    if not increasing:
        d = -d
    if strict:
        return bool(np.all(d > STRICT_TOL))
    return bool(np.all(d >= -MONOTONE_TOL))


def min_difference(values, increasing=True):
    d = np.diff(np.asarray(values, dtype=float))
    return float((d if increasing else -d).min())


# ---------------------------------------------------------------------------
# CSV interchange


def write_profile_csv(path_or_file, t, values, header=("t [1]", "k(t) [1]")):
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for ti, vi in zip(t, values):
            w.writerow([repr(float(ti)), repr(float(vi))])
    finally:
        if own:
            fh.close()


def write_kernel_csv(path_or_file, k):
    write_profile_csv(path_or_file, k.t, k.values)


def read_kernel_csv(path, grid=None, endpoint="bounded"):
    """Load a two-column (t, k(t)) table.

    If the abscissae coincide with a Gauss grid of the same size the samples
    are used as they are; otherwise they are interpolated linearly onto
    ``grid`` (default: 256 nodes).
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    data = np.array([[float(x) for x in r[:2]] for r in rows[1:]])
    order = np.argsort(data[:, 0])
    t, v = data[order, 0], data[order, 1]
    native = gauss_grid(len(t)) if len(t) >= 2 else None
    if grid is None and native is not None and np.allclose(native.nodes, t, atol=1e-14):
        return ZonalKernel(native, v, endpoint)
    grid = grid or gauss_grid(256)
    return ZonalKernel(grid, np.interp(grid.nodes, t, v), endpoint)
