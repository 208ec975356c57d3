"""Stereographic transport between R^3 and S^3 minus the North pole."""

import numpy as np

from . import s3harmonics as sh
from .paneitz import paneitz_apply

POLE_TOL = 1e-14


class PoleError(ValueError):
    pass


def stereo(xi):
    """pi(xi) = xi' / (1 - xi_4)."""
    xi = np.asarray(xi, dtype=np.float64)
    den = 1.0 - xi[..., 3]
    if np.any(den <= POLE_TOL):
        raise PoleError("the North pole has no image under stereographic projection")
    return xi[..., :3] / den[..., None]


def stereo_inv(x):
    """pi^{-1}(x) = (2x, |x|^2 - 1) / (1 + |x|^2)."""
    x = np.asarray(x, dtype=np.float64)
    r2 = np.sum(x * x, axis=-1)
    den = 1.0 + r2
    return np.concatenate([2.0 * x / den[..., None], ((r2 - 1.0) / den)[..., None]], axis=-1)


def w0(x):
    """log(2 / (1 + |x|^2))."""
    x = np.asarray(x, dtype=np.float64)
    return np.log(2.0) - np.log1p(np.sum(x * x, axis=-1))


def w0_on_sphere(xi4):
    """w0 o pi written on the sphere: log(1 - xi_4)."""
    return np.log1p(-np.asarray(xi4, dtype=np.float64))


def radius_on_sphere(xi4):
    """|pi(xi)| as a function of xi_4 alone, sqrt((1 + xi4) / (1 - xi4))."""
    xi4 = np.asarray(xi4, dtype=np.float64)
    return np.sqrt((1.0 + xi4) / (1.0 - xi4))


def grid_radius(grid):
    """|pi(xi)| at each grid node; cot(psi / 2) on our parametrisation."""
    return np.broadcast_to((1.0 / np.tan(0.5 * grid.psi))[:, None, None], grid.shape)


def grid_euclidean_points(grid):
    """pi(xi) at the grid nodes, array grid.shape + (3,)."""
    P, T, F = np.meshgrid(grid.psi, grid.theta, grid.phi, indexing="ij")
    r = 1.0 / np.tan(0.5 * P)
    return np.stack([r * np.sin(T) * np.cos(F), r * np.sin(T) * np.sin(F), r * np.cos(T)], axis=-1)


def sphere_integral_of_euclidean(values, grid):
    """Quadrature of pre-transported values (h o pi) e^{-n w0 o pi} over S^3."""
    v = np.asarray(values, dtype=np.float64).reshape(grid.shape)
    bad = ~np.isfinite(v)
    if np.any(bad):
        i, j, p = np.argwhere(bad)[0]
        raise FloatingPointError(f"non-finite integrand at node psi={grid.psi[i]:.6g}, theta={grid.theta[j]:.6g}, phi={grid.phi[p]:.6g}")
    return sh.integrate(v, grid)


def transport_log_integrand(log_h_on_sphere, grid, n=3):
    """(h o pi) e^{-n w0 o pi} from log h given on the grid, evaluated in log space."""
    return np.exp(log_h_on_sphere - n * w0_on_sphere(grid.xi4))


def spherical_solution(lam, x0, x):
    """u_{lam,x0}(x) = log(2 lam / (1 + lam^2 |x - x0|^2))."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    d = np.asarray(x, dtype=np.float64) - np.asarray(x0, dtype=np.float64)
    return np.log(2.0 * lam) - np.log1p(lam * lam * np.sum(d * d, axis=-1))


def branson_transport(c, t, x):
    """e^{n w0(x)} (P v)(pi^{-1}(x)), equal to (-Delta)^{n/2}(v o pi^{-1})(x)."""
    Pv = paneitz_apply(c, t)
    xi = stereo_inv(x)
    return np.exp(t.n * w0(x)) * sh.evaluate(Pv, xi)
