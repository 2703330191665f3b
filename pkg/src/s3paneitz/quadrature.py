"""Quadrature on the interval (zonal reduction) and on the full 3-sphere.

A zonal integral over S^3 reduces to the interval through t = x.N:

    int_{S^3} phi(x.N) dmu = 4 pi int_{-1}^{1} phi(t) (1 - t^2)^{1/2} dt

so the 1D rule is Gauss quadrature for the Chebyshev weight of the second
kind.  Its nodes and weights are available in closed form:

    t_i = cos(i pi / (n + 1)),   w_i = pi / (n + 1) * sin^2(i pi / (n + 1))

The full-sphere grid is a product of that polar rule with a Gauss-Legendre
x azimuthal rule on S^2.  All measures are absolute, |S^3| = 2 pi^2.
"""
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

S3_VOLUME = 2.0 * np.pi**2
S2_AREA = 4.0 * np.pi
NORTH = np.array([0.0, 0.0, 0.0, 1.0])

MIN_RES = 4
MAX_RES = 17  # 2 * 17**3 = 9826 points


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Gauss rule for int_{-1}^{1} f(t) (1 - t^2)^{1/2} dt."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return len(self.nodes)

    @property
    def theta(self):
        """Polar angles arccos(t), decreasing with the node index."""
        return np.arccos(self.nodes)

    @property
    def measure(self):
        """Absolute S^3 measure carried by each node (4 pi w_i)."""
        return S2_AREA * self.weights

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def gauss_grid(n):
    """Closed-form Gauss rule with ``n`` nodes, ascending in t.

    Exact for polynomials of degree <= 2n - 1 against (1 - t^2)^{1/2}.
    Nodes and weights are symmetrized so that t -> -t maps the grid onto
    itself bit for bit.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"gauss_grid needs n >= 2, got {n}")
    i = np.arange(n, 0, -1)
    theta = i * np.pi / (n + 1)
    t = np.cos(theta)
    w = np.pi / (n + 1) * np.sin(theta) ** 2
    t = 0.5 * (t - t[::-1])
    w = 0.5 * (w + w[::-1])
    return Grid1D(_frozen(t), _frozen(w))


def integrate_zonal(f):
    """Integral over S^3 of the zonal lift of ``f`` (a ZonalFunction)."""
    return S2_AREA * f.grid.integrate(f.values)


def _s2_rule(res):
    z, wz = np.polynomial.legendre.leggauss(res)
    m = 2 * res
    phi = (np.arange(m) + 0.5) * 2.0 * np.pi / m
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1.0 - zz**2)
    pts = np.stack([r * np.cos(pp), r * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    w = np.repeat(wz * (2.0 * np.pi / m), m)
    return pts, w


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Weighted point set on S^3 with weights summing to 2 pi^2.

    ``ring`` holds, for product grids, the index of the polar node each
    point sits on (-1 when the grid has no ring structure).
    """

    points: np.ndarray
    weights: np.ndarray
    res: int
    ring: np.ndarray
    polar: Grid1D | None = None

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise ValueError(
                f"expected {self.size} values, got shape {values.shape}")
        return float(np.dot(self.weights, values))


def sphere_grid(res):
    """Product grid: ``res`` polar Gauss nodes x (res GL x 2 res azimuth) on S^2.

    Point count is 2 res^3.  The rule integrates exactly every polynomial
    in x of degree <= 2 res - 1, and the grid is closed under x_i -> -x_i
    for every coordinate with matching weights.
    """
    res = int(res)
    if not MIN_RES <= res <= MAX_RES:
        raise ValueError(f"res must lie in [{MIN_RES}, {MAX_RES}], got {res}")
    polar = gauss_grid(res)
    s2_pts, s2_w = _s2_rule(res)
    t = np.repeat(polar.nodes, len(s2_w))
    r = np.sqrt(1.0 - t**2)
    omega = np.tile(s2_pts, (res, 1))
    pts = np.column_stack([r[:, None] * omega, t])
    w = np.outer(polar.weights, s2_w).ravel()
    ring = np.repeat(np.arange(res), len(s2_w))
    return SphereGrid(_frozen(pts), _frozen(w), res, ring, polar)


def integrate_sphere(values, grid):
    return grid.integrate(values)


def reflect(points, normal):
    """Reflection across the hyperplane orthogonal to ``normal``."""
    normal = np.asarray(normal, dtype=float)
    return points - 2.0 * np.outer(points @ normal, normal)


def reflection_closure(grid, normal, tol=1e-9):
    """Average of ``grid`` and its mirror image under the reflection in ``normal``.

    The result is again an exact rule of the same degree (reflections
    preserve polynomial degree), and it is closed under the reflection with
    reflection-invariant weights.  Points closer than ``tol`` are merged.
    """
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    pts = np.vstack([grid.points, reflect(grid.points, normal)])
    w = np.concatenate([grid.weights, grid.weights]) / 2.0
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                     shape=(len(pts), len(pts)))
    _, label = connected_components(adj, directed=False)
    keep = np.unique(label, return_index=True)[1]
    merged_w = np.bincount(label, weights=w)[label[keep]]
    return SphereGrid(_frozen(pts[keep]), _frozen(merged_w), grid.res,
                      np.full(len(keep), -1), None)
