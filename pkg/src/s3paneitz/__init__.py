"""Numerics for the Paneitz operator on the round 3-sphere.

Zonal harmonic analysis, the Green's kernel and its resolvent
perturbations, symmetric decreasing rearrangement, and solvers and
verification suites for the sharp Paneitz energy inequality.
"""
__version__ = "0.1.0"

from .paneitz import (  # noqa: F401
    energy, green_kernel, neumann_kernel, paneitz_eigenvalue, paneitz_quotient,
    sharp_bound, spectral_resolvent_kernel,
)
from .quadrature import gauss_grid, sphere_grid  # noqa: F401
from .rearrange import polarize, riesz_gap, symmetrize_sphere, symmetrize_zonal  # noqa: F401
from .solver import (  # noqa: F401
    conjecture_probe, euler_lagrange_residual, inequality_sweep,
    kazdan_warner_residual, minimize_perturbed, s_epsilon_reference,
)
from .zonal import ZonalFunction, ZonalKernel, convolve, funk_hecke_multipliers  # noqa: F401
