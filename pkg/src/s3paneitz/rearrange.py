"""Symmetric decreasing rearrangement, polarization and the Riesz form on S^3.

A weighted sample set {(f_i, m_i)} has an exact rearrangement: the step
function about N that takes the sorted values f_(1) >= f_(2) >= ... on
consecutive geodesic caps of measure m_(1), m_(2), ...  That representative
is equimeasurable with the samples by construction.  Sampling it on a
target grid uses quantile matching: the target cell with cumulative cap
mass interval [M_{j-1}, M_j] gets the value whose interval contains the
midpoint (M_{j-1} + M_j) / 2.  Sampled outputs are therefore always input
values, and a sample set that is already non-decreasing in t is returned
unchanged.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .quadrature import NORTH, S2_AREA, gauss_grid, reflect
from .zonal import ZonalFunction, funk_hecke_multipliers, is_monotone


def cap_measure(c):
    """|{x in S^3 : x.N > c}| = 2 pi (theta - sin theta cos theta), theta = arccos c."""
    theta = np.arccos(np.clip(c, -1.0, 1.0))
    return 2.0 * np.pi * (theta - np.sin(theta) * np.cos(theta))


def _cap_level(mass):
    """Inverse of cap_measure by bisection in theta (vectorized)."""
    mass = np.asarray(mass, dtype=float)
    lo = np.zeros_like(mass)
    hi = np.full_like(mass, np.pi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        small = 2.0 * np.pi * (mid - np.sin(mid) * np.cos(mid)) < mass
        lo = np.where(small, mid, lo)
        hi = np.where(small, hi, mid)
    return np.cos(0.5 * (lo + hi))


def step_coefficients(levels, masses, L):
    """Exact Y_0..Y_L coefficients of the zonal step function about N.

    ``levels[j]`` is taken on the shell between cumulative cap masses
    sum(masses[:j]) and sum(masses[:j+1]).  With t = cos(theta),
    Y_l(t) (1 - t^2)^{1/2} dt integrates in closed form because
    U_l(cos theta) sin theta = sin((l + 1) theta).
    """
    theta = np.arccos(_cap_level(np.cumsum(masses)))
    theta[-1] = np.pi
    edges = np.concatenate([[0.0], theta])
    l = np.arange(int(L) + 1)[:, None]
    safe = np.maximum(l, 1)

    def prim(x):
        # int_0^x sin((l+1) a) sin(a) da
        head = np.where(l == 0, 0.5 * x, 0.5 * np.sin(l * x) / safe)
        return head - 0.5 * np.sin((l + 2) * x) / (l + 2)

    shell = np.diff(prim(edges[None, :]), axis=1)
    return S2_AREA / (np.pi * np.sqrt(2.0)) * shell @ np.asarray(levels, dtype=float)


def descending_order(values):
    """Indices sorting ``values`` descending, ties in original index order."""
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def measure_above(values, masses, s):
    values = np.asarray(values)
    return float(np.sum(np.asarray(masses)[values > s]))


def distribution_table(values, masses, levels=None):
    """Pairs (s, |f > s|) at the distinct sample values (or ``levels``)."""
    values = np.asarray(values, dtype=float)
    masses = np.asarray(masses, dtype=float)
    levels = np.unique(values) if levels is None else np.asarray(levels, dtype=float)
    order = np.argsort(values, kind="stable")
    v, m = values[order], masses[order]
    tail = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
    idx = np.searchsorted(v, levels, side="right")
    return np.column_stack([levels, tail[idx]])


@dataclass(frozen=True, eq=False)
class RearrangementResult:
    """Exact step representative of f* plus its quantile-matched samples.

    ``levels`` and ``masses`` list the rearranged values (descending) and
    the measure each one occupies; ``order`` is the permutation of the
    input samples that produced them; ``cap_bounds[k]`` is the t-value
    where the cap holding levels[:k+1] ends.
    """

    symmetrized: ZonalFunction
    levels: np.ndarray
    masses: np.ndarray
    order: np.ndarray
    cap_bounds: np.ndarray

    def measure_above(self, s):
        return measure_above(self.levels, self.masses, s)

    def distribution_table(self, levels=None):
        return distribution_table(self.levels, self.masses, levels)

    def coefficients(self, L):
        """Exact zonal-harmonic coefficients of the step representative."""
        return step_coefficients(self.levels, self.masses, L)

    def lp_norm(self, p):
        return float(np.sum(self.masses * np.abs(self.levels) ** p) ** (1.0 / p))

    def __call__(self, t):
        """Evaluate the step representative at t."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(-self.cap_bounds, -t, side="right")
        return self.levels[np.minimum(k, len(self.levels) - 1)]

    def sample(self, cell_masses):
        """Quantile-matched values for target cells listed from N southwards."""
        cum_in = np.cumsum(self.masses)
        cum_out = np.cumsum(cell_masses)
        mid = cum_out - 0.5 * np.asarray(cell_masses)
        k = np.searchsorted(cum_in, mid, side="right")
        return self.levels[np.minimum(k, len(self.levels) - 1)]


def _rearrange(values, masses, target, cell_masses):
    values = np.asarray(values, dtype=float)
    masses = np.asarray(masses, dtype=float)
    order = descending_order(values)
    levels = values[order]
    m = masses[order]
    bounds = _cap_level(np.cumsum(m))
    bounds[-1] = -1.0
    res = RearrangementResult(None, levels, m, order, bounds)
    # target nodes ascend in t while caps fill from N
    samples = res.sample(np.asarray(cell_masses)[::-1])[::-1]
    object.__setattr__(res, "symmetrized", ZonalFunction(target, samples, NORTH))
    return res


def symmetrize_zonal(f):
    """f* of a zonal function (any pole), sampled on the same grid about N."""
    return _rearrange(f.values, f.grid.measure, f.grid, f.grid.measure)


def symmetrize_sphere(values, grid, target=None):
    """f* of point values on a SphereGrid.

    Product grids sample f* ring by ring on their polar rule, so the result
    lifts back onto the same points (see ``on_sphere``).  Grids without ring
    structure need a ``target`` Grid1D (default: 64 Gauss nodes).
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.weights.shape:
        raise ValueError(f"expected {grid.size} values, got shape {values.shape}")
    if target is None and grid.polar is not None:
        ring_mass = np.bincount(grid.ring, weights=grid.weights, minlength=grid.polar.size)
        return _rearrange(values, grid.weights, grid.polar, ring_mass)
    target = target or gauss_grid(64)
    return _rearrange(values, grid.weights, target, target.measure)


def on_sphere(result, grid):
    """Values of f* at the points of ``grid``.

    Ring-structured grids reuse the quantile-matched ring samples; other
    grids evaluate the step representative pointwise.
    """
    if grid.polar is not None and result.symmetrized.grid is grid.polar:
        return result.symmetrized.values[grid.ring]
    return result(grid.points @ NORTH)


@dataclass(frozen=True)
class HalfSpace:
    """H = {x : x.u >= 0} with inner unit normal u."""

    normal: np.ndarray

    def __post_init__(self):
        u = np.array(self.normal, dtype=float)
        if u.shape != (4,) or abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("half-space normal must be a unit 4-vector")
        object.__setattr__(self, "normal", u)


def reflection_partner(grid, normal, tol=1e-9):
    """Index of R x for each point; raises if the grid is not closed under R."""
    tree = cKDTree(grid.points)
    dist, idx = tree.query(reflect(grid.points, normal))
    if dist.max() > tol:
        raise ValueError(
            f"grid is not closed under this reflection (mismatch {dist.max():.2e})")
    w = grid.weights
    if np.max(np.abs(w[idx] - w)) > 1e-12 * w.max():
        raise ValueError("reflection does not preserve the grid weights")
    return idx


def polarize(values, grid, H, tol=1e-9):
    """Two-point rearrangement f_H: larger value on the H side of each pair."""
    values = np.asarray(values, dtype=float)
    partner = reflection_partner(grid, H.normal, tol)
    other = values[partner]
    inside = grid.points @ H.normal >= 0.0
    return np.where(inside, np.maximum(values, other), np.minimum(values, other))


def kernel_matrix(k, grid):
    """k(x_a . x_b) over all point pairs of ``grid``."""
    m = k(np.clip(grid.points @ grid.points.T, -1.0, 1.0))
    if not np.all(np.isfinite(m)):
        raise ValueError("Riesz form needs a bounded kernel")
    return m


def riesz_form(k, f, g, grid, matrix=None):
    """Double quadrature of int int k(x.y) f(x) g(y)."""
    m = kernel_matrix(k, grid) if matrix is None else matrix
    wf = grid.weights * np.asarray(f, dtype=float)
    wg = grid.weights * np.asarray(g, dtype=float)
    return float(wf @ m @ wg)


def riesz_form_zonal(k, a, b):
    """int int k(x.y) f(x) g(y) for f, g zonal about one pole: sum mu_l a_l b_l."""
    L = min(len(a), len(b)) - 1
    return float(np.sum(funk_hecke_multipliers(k, L) * a[:L + 1] * b[:L + 1]))


def ring_profile(values, grid):
    """Per-ring values (ascending t) if ``values`` are constant on every ring, else None."""
    if grid.polar is None:
        return None
    values = np.asarray(values, dtype=float)
    prof = values[np.unique(grid.ring, return_index=True)[1]]
    return prof if np.array_equal(prof[grid.ring], values) else None


def _shell_coefficients(values, grid, L):
    prof = ring_profile(values, grid)
    mass = np.bincount(grid.ring, weights=grid.weights, minlength=grid.polar.size)
    return step_coefficients(prof[::-1], mass[::-1], L)


def riesz_gap(k, f, g, grid, matrix=None, L=64):
    """Riesz form of (f*, g*) minus that of (f, g), for an increasing kernel.

    f* and g* enter through their exact step representatives, whose form is
    the spectral sum over degrees <= L.  When f and g are both constant on
    the rings of a product grid they are read as step functions on the
    corresponding shells, the same representation; otherwise their form is
    the double quadrature.
    """
    if not is_monotone(k.values, increasing=True):
        raise ValueError("riesz_gap needs a kernel certified increasing")
    fs = symmetrize_sphere(f, grid).coefficients(L)
    gs = symmetrize_sphere(g, grid).coefficients(L)
    if ring_profile(f, grid) is not None and ring_profile(g, grid) is not None:
        base = riesz_form_zonal(k, _shell_coefficients(f, grid, L),
                                _shell_coefficients(g, grid, L))
    else:
        base = riesz_form(k, f, g, grid, matrix)
    return riesz_form_zonal(k, fs, gs) - base
