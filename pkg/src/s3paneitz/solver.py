"""The perturbed extremal problem and its verification tools.

For 0 < eps < 15/16 the iteration

    u_{n+1} = c_n * T_{k_eps}((u_n^*)^{-7}),   ||u_{n+1}^{-1}||_{L^6} = 1,

symmetrizes, inverts the power, applies the resolvent kernel and rescales.
(u^*)^{-7} is largest at the south pole and k_eps grows with geodesic
distance, so the output is again radially decreasing about N.  At a fixed
point u solves P u + eps u = -s u^{-7} with s = -E_eps(u).
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from .paneitz import (
    DEFAULT_DEGREE, DEFAULT_GRID, _check_eps, energy, energy_eps,
    inverse_l6_norm, paneitz_apply, paneitz_eigenvalue, paneitz_quotient,
    resolvent_multipliers, sharp_bound, truncated_green,
)
from .quadrature import S2_AREA, S3_VOLUME, gauss_grid
from .rearrange import symmetrize_zonal
from .zonal import (
    SpectralZonal, ZonalFunction, _basis, derivatives, from_spectral,
    is_monotone, require_positive, to_spectral,
)

CONSTANT_MINIMIZER = S3_VOLUME ** (1.0 / 6.0)


def s_epsilon_reference(eps):
    """(15/16 - eps) |S^3|^{4/3} for 0 <= eps <= 15/16."""
    if not 0.0 <= eps <= 15.0 / 16.0:
        raise ValueError(f"eps must lie in [0, 15/16], got {eps}")
    return (15.0 / 16.0 - eps) * S3_VOLUME ** (4.0 / 3.0)


def normalize(f):
    """Rescale a positive function so that ||f^{-1}||_{L^6} = 1."""
    return f.with_values(f.values * inverse_l6_norm(f))


def chop(c, rel=None):
    """Zero coefficients at the round-off level of the transform.

    P multiplies degree l by ~l^4, so transform noise of order
    n * machine eps in otherwise vanishing coefficients would dominate a
    residual.  Coefficients below ``rel`` (default n * eps) times the
    largest are set to zero.
    """
    a = np.array(c.coeffs, dtype=float)
    rel = len(a) * np.finfo(float).eps if rel is None else rel
    a[np.abs(a) <= rel * np.max(np.abs(a))] = 0.0
    return SpectralZonal(a)


def euler_lagrange_residual(u, eps, s, L=DEFAULT_DEGREE):
    """Weighted L^2 norm of P u + eps u + s u^{-7}.

    P u is applied to the chopped degree-L coefficients of u.
    """
    require_positive(u, "u")
    c = chop(to_spectral(u, min(L, u.grid.size - 1)))
    pu = from_spectral(paneitz_apply(c), u.grid)
    r = pu.values + eps * u.values + s * u.values ** -7.0
    return float(np.sqrt(S2_AREA * u.grid.integrate(r * r)))


def random_positive_zonal(rng, grid, degree=8, amplitude=1.0):
    """exp(g) with g a random band-limited zonal function, sup |g| <= amplitude.

    The realized amplitude is drawn uniformly from (0, amplitude].
    """
    c = rng.normal(size=degree + 1)
    c[0] = 0.0
    g = from_spectral(SpectralZonal(c), grid).values
    scale = amplitude * (1.0 - rng.random()) / np.max(np.abs(g))
    return ZonalFunction(grid, np.exp(scale * g))


# ---------------------------------------------------------------------------
# fixed-point iteration


@dataclass
class IterationRecord:
    iteration: int
    s_estimate: float
    quotient: float
    sup_dist_mean: float
    sup_dist_constant: float
    sup_change: float
    holder_lhs: float
    holder_rhs: float
    inv_l6: float


@dataclass
class MinimizerReport:
    eps: float
    u: ZonalFunction
    s: float
    converged: bool
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    contraction: float = float("nan")

    @property
    def s_reference(self):
        return s_epsilon_reference(self.eps)

    @property
    def s_relative_error(self):
        return abs(self.s - self.s_reference) / self.s_reference

    @property
    def sup_dist_constant(self):
        return float(np.max(np.abs(self.u.values - CONSTANT_MINIMIZER)))

    @property
    def symmetric_decreasing(self):
        return is_monotone(self.u.values, increasing=True)

    def to_dict(self):
        return {
            "eps": self.eps,
            "converged": self.converged,
            "iterations": self.iterations,
            "s": self.s,
            "s_reference": self.s_reference,
            "s_relative_error": self.s_relative_error,
            "euler_lagrange_residual": self.residual,
            "sup_dist_constant": self.sup_dist_constant,
            "contraction": self.contraction,
            "trace": [asdict(r) for r in self.history],
        }


def _sup_dist_mean(u):
    mean = S2_AREA * u.grid.integrate(u.values) / S3_VOLUME
    return float(np.max(np.abs(u.values - mean)))


def minimize_perturbed(eps, init, tol=1e-10, max_iter=500, L=DEFAULT_DEGREE):
    """Run the symmetrize / resolvent / normalize iteration from ``init``.

    Stops when the sup-norm change between iterates is at most ``tol``.
    The trace records, for each new iterate u_n, s_n = -E_eps(u_n), the
    Paneitz quotient, the sup distances to its mean and to the constant
    minimizer, the sup change, and both sides of the Holder bound
    alpha ||v^{-1}||_6 >= ||(u^*)^{-1}||_6^7 with alpha = int (u^*)^{-7} v,
    v = T_{k_eps}((u^*)^{-7}).
    ``contraction`` is the geometric mean ratio of successive changes over
    the last ten steps.
    """
    _check_eps(eps, allow_zero=False)
    require_positive(init, "initial guess")
    grid = init.grid
    L = min(int(L), grid.size - 1)
    mu = resolvent_multipliers(eps, L)
    u = normalize(init)
    history = []
    changes = []
    converged = False
    n = 0
    for n in range(1, max_iter + 1):
        ustar = symmetrize_zonal(u).symmetrized
        h = ustar.values ** -7.0
        coeffs = to_spectral(ustar.with_values(h), L).coeffs
        v = from_spectral(SpectralZonal(mu * coeffs), grid)
        if not v.is_positive:
            raise FloatingPointError(
                f"iterate {n} lost positivity (min {v.values.min():.3e})")
        alpha = S2_AREA * grid.integrate(h * v.values)
        inv_v = inverse_l6_norm(v)
        holder_rhs = inverse_l6_norm(ustar) ** 7
        new = ZonalFunction(grid, v.values * inv_v)
        change = float(np.max(np.abs(new.values - u.values)))
        changes.append(change)
        u = new
        q = paneitz_quotient(u, eps, L)
        history.append(IterationRecord(
            n, -q.E_eps, q.quotient, _sup_dist_mean(u),
            float(np.max(np.abs(u.values - CONSTANT_MINIMIZER))),
            change, alpha * inv_v, holder_rhs, q.inv_l6))
        if change <= tol:
            converged = True
            break
    s = -energy_eps(u, eps, L)
    tail = [c for c in changes[-11:] if c > 0]
    contraction = float(np.exp(np.mean(np.diff(np.log(tail))))) if len(tail) > 2 else 0.0
    return MinimizerReport(eps, u, s, converged, n,
                           euler_lagrange_residual(u, eps, s, L), history, contraction)


def iteration_map(u, eps, L=DEFAULT_DEGREE):
    """One step of the iteration (without bookkeeping)."""
    L = min(int(L), u.grid.size - 1)
    ustar = symmetrize_zonal(u).symmetrized
    coeffs = to_spectral(ustar.with_values(ustar.values ** -7.0), L).coeffs
    v = from_spectral(SpectralZonal(resolvent_multipliers(eps, L) * coeffs), u.grid)
    return normalize(v)


# ---------------------------------------------------------------------------
# Kazdan-Warner


@dataclass
class KWReport:
    residuals: np.ndarray

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.residuals)))

    def to_dict(self):
        return {"residuals": [float(r) for r in self.residuals], "max_abs": self.max_abs}


def kazdan_warner_residual(rho, chi, pole=None):
    """r_i = int <grad chi, grad x_i> rho^{-6} for the four coordinates.

    For data zonal about p, <grad chi, grad x_i> = chi'(t)(p_i - t x_i);
    averaging over each level set t = x.p replaces x_i by t p_i, so

        r_i = p_i * 4 pi int chi'(t) (1 - t^2) rho(t)^{-6} (1 - t^2)^{1/2} dt.
    """
    require_positive(rho, "rho")
    require_positive(chi, "chi")
    pole = chi.pole if pole is None else np.asarray(pole, dtype=float)
    if abs(np.linalg.norm(pole) - 1.0) > 1e-12:
        raise ValueError("pole must be a unit 4-vector")
    dchi, _ = derivatives(chi)
    t = chi.t
    r = S2_AREA * chi.grid.integrate(dchi * (1.0 - t**2) * rho.values ** -6.0)
    return KWReport(pole * r)


# ---------------------------------------------------------------------------
# Newton probe of the Liouville question


@dataclass
class ProbeRun:
    seed: int
    status: str
    iterations: int
    s: float
    sup_dist_mean: float
    residual: float

    def to_dict(self):
        return asdict(self)


@dataclass
class ProbeReport:
    eps: float
    runs: list

    @property
    def counts(self):
        out = {"constant": 0, "nonconstant": 0, "diverged": 0}
        for r in self.runs:
            out[r.status] += 1
        return out

    def to_dict(self):
        return {"eps": self.eps, "counts": self.counts,
                "runs": [r.to_dict() for r in self.runs]}


def newton_solve(u0, eps, L=DEFAULT_DEGREE, tol=1e-13, max_iter=100):
    """Damped Newton for P u + eps u + s u^{-7} = 0 with ||u^{-1}||_6 = 1.

    Unknowns are the coefficients a_0..a_L of u and the scalar s.  The
    equations are the Galerkin projections onto Y_0..Y_L plus the norm
    constraint; the Jacobian blocks are P + eps - 7 s u^{-8} (projected),
    the column u^{-7} and the row -6 u^{-7}.  The system is scaled row-wise
    by 1/(lambda_l + eps) so the merit ||F|| is not dominated by the top
    degrees.  Globalization is pseudo-transient continuation: the
    coefficient block gets an extra I / dt, with dt grown by the ratio of
    successive merits (pure Newton once dt is large).  A step that loses
    positivity or more than doubles the merit is rejected and dt cut by 4.

    Returns (u, s, iterations, converged).
    """
    grid = u0.grid
    L = min(int(L), grid.size - 1)
    B = _basis(grid, L)
    W = grid.measure
    lam = paneitz_eigenvalue(np.arange(L + 1)) + eps
    u0 = normalize(u0)
    a = to_spectral(u0, L).coeffs
    s = -energy_eps(u0, eps, L)

    def residual(a, s):
        u = B @ a
        if u.min() <= 0:
            return None, u
        r = a + s * (B.T @ (W * u ** -7.0)) / lam
        g = W @ u ** -6.0 - 1.0
        return np.append(r, g), u

    F, u = residual(a, s)
    if F is None:
        return None, s, 0, False
    dt = 1.0
    for it in range(1, max_iter + 1):
        J = np.zeros((L + 2, L + 2))
        J[:L + 1, :L + 1] = (1.0 + 1.0 / dt) * np.eye(L + 1) - 7.0 * s * ((B.T * (W * u ** -8.0)) @ B) / lam[:, None]
        J[:L + 1, L + 1] = B.T @ (W * u ** -7.0) / lam
        J[L + 1, :L + 1] = -6.0 * (W * u ** -7.0) @ B
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return ZonalFunction(grid, u), s, it, False
        norm0 = np.linalg.norm(F)
        Fn, un = residual(a + step[:-1], s + step[-1])
        if Fn is None or np.linalg.norm(Fn) > 2.0 * norm0:
            dt *= 0.25
            if dt < 1e-10:
                return ZonalFunction(grid, u), s, it, False
            continue
        a = a + step[:-1]
        s = s + step[-1]
        F, u = Fn, un
        dt = min(dt * norm0 / np.linalg.norm(F), 1e12)
        if np.linalg.norm(F) <= tol:
            return ZonalFunction(grid, u), s, it, True
    return ZonalFunction(grid, u), s, max_iter, False


def conjecture_probe(eps, n_seeds=20, seed=0, grid=None, L=DEFAULT_DEGREE,
                     const_tol=1e-6, residual_tol=1e-8, include_constant=False):
    """Newton runs from random positive starts, classified by their limit.

    A run counts as converged only when Newton converges and the pointwise
    Euler-Lagrange residual is at most ``residual_tol``; its limit is
    "constant" when the sup distance to its mean is at most ``const_tol``.
    """
    _check_eps(eps, allow_zero=False)
    grid = grid or gauss_grid(DEFAULT_GRID)
    runs = []
    starts = []
    if include_constant:
        starts.append((-1, ZonalFunction(grid, np.ones(grid.size))))
    for i in range(n_seeds):
        rng = np.random.default_rng([seed, i])
        starts.append((i, random_positive_zonal(rng, grid)))
    for i, u0 in starts:
        u, s, its, ok = newton_solve(u0, eps, L)
        if u is None or not u.is_positive:
            runs.append(ProbeRun(i, "diverged", its, float(s), float("nan"), float("nan")))
            continue
        res = euler_lagrange_residual(u, eps, s, L)
        dist = _sup_dist_mean(u)
        if not ok or not res <= residual_tol:
            status = "diverged"
        else:
            status = "constant" if dist <= const_tol else "nonconstant"
        runs.append(ProbeRun(i, status, its, float(s), dist, res))
    return ProbeReport(eps, runs)


# ---------------------------------------------------------------------------
# sharp inequality sweep


@dataclass
class SweepReport:
    eps: float
    bound: float
    quotients: np.ndarray
    labels: list
    tol: float

    @property
    def argmin(self):
        return int(np.argmin(self.quotients))

    @property
    def minimum(self):
        return float(self.quotients.min())

    @property
    def margin(self):
        return self.minimum - self.bound

    @property
    def violations(self):
        return int(np.sum(self.quotients < self.bound - self.tol * abs(self.bound)))

    def to_dict(self):
        return {
            "eps": self.eps, "bound": self.bound, "samples": len(self.quotients),
            "minimum": self.minimum, "argmin": self.argmin,
            "argmin_label": self.labels[self.argmin], "margin": self.margin,
            "violations": self.violations, "tolerance": self.tol,
        }


def inequality_sweep(n_samples=500, eps=0.0, seed=0, grid=None, generator="random",
                     degree=8, amplitude=1.0, delta=1e-4, L=DEFAULT_DEGREE, tol=1e-10):
    """Paneitz quotients of the constant plus ``n_samples`` positive test functions.

    ``generator`` is "random" (exp of random band-limited zonal functions)
    or "near-green" (degree-L truncations of K(N, .) lifted by a small
    positive ``delta``, with random degree caps).  A violation is a quotient
    below the bound by more than ``tol`` relative.
    """
    _check_eps(eps)
    grid = grid or gauss_grid(DEFAULT_GRID)
    rng = np.random.default_rng(seed)
    samples = [("constant", ZonalFunction(grid, np.ones(grid.size)))]
    for i in range(n_samples):
        if generator == "random":
            f = random_positive_zonal(rng, grid, degree, amplitude)
        elif generator == "near-green":
            cap = int(rng.integers(16, L + 1))
            g = truncated_green(cap, grid)
            lift = delta + max(0.0, -g.values.min())
            f = g.with_values(g.values + lift)
        else:
            raise ValueError(f"unknown generator {generator!r}")
        if not f.is_positive:
            raise ValueError(f"generator produced a non-positive sample ({i})")
        samples.append((f"{generator}-{i}", f))
    q = np.array([paneitz_quotient(f, eps, L).quotient for _, f in samples])
    return SweepReport(eps, sharp_bound(eps), q, [lab for lab, _ in samples], tol)
