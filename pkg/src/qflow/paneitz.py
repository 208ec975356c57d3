"""Spectral multipliers of the round-sphere GJMS operator and related norms.

Eigenvalues of -Laplace-Beltrami on S^n are taken as ``lam_l = l (l + n - 1)``.
With that convention the operator multiplier

    mu_l = (lam_l + ((n-1)/2)^2)^(1/2) * prod_{k=0}^{(n-3)/2} (lam_l + k (n-k-1))

telescopes to Gamma(l + n) / Gamma(l); both forms are computed and compared.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specialfun import _check_odd_dimension


def eigenvalues(n, L):
    l = np.arange(L + 1, dtype=np.float64)
    return l * (l + n - 1)


def multiplier_product(n, L):
    """mu_l from the defining product (the primary route)."""
    lam = eigenvalues(n, L)
    mu = np.sqrt(lam + ((n - 1) / 2.0) ** 2)
    for k in range((n - 3) // 2 + 1):
        mu = mu * (lam + k * (n - k - 1))
    return mu


def multiplier_gamma(n, L):
    """Gamma(l + n) / Gamma(l) via log-gamma; entry 0 set to 0."""
    out = np.zeros(L + 1)
    for l in range(1, L + 1):
        out[l] = math.exp(math.lgamma(l + n) - math.lgamma(l))
    return out


@dataclass(frozen=True, eq=False)
class MultiplierTable:
    n: int
    L: int
    mu: np.ndarray

    @property
    def lam(self):
        return eigenvalues(self.n, self.L)


@lru_cache(maxsize=None)
def multiplier_table(n, L):
    _check_odd_dimension(n)
    mu = multiplier_product(n, L)
    mu[0] = 0.0
    mu.setflags(write=False)
    return MultiplierTable(n, L, mu)


def _per_coeff(c, t):
    if c.L != t.L:
        raise ValueError(f"truncation mismatch: coefficients L={c.L}, table L={t.L}")
    return t.mu[c.degrees]


def paneitz_apply(c, t):
    return c.with_coeffs(c.coeffs * _per_coeff(c, t))


def paneitz_sqrt_apply(c, t):
    return c.with_coeffs(c.coeffs * np.sqrt(_per_coeff(c, t)))


def laplace_power_apply(c, r, n=3):
    """(-Laplace-Beltrami)^r, i.e. multiplication by lam_l^r with lam_0^r = 0."""
    if not r > 0:
        raise ValueError(f"power must be positive, got {r!r}")
    lam = eigenvalues(n, c.L)
    return c.with_coeffs(c.coeffs * lam[c.degrees] ** r)


def hdot_n_norm(c, t):
    """||P u||_{L^2}."""
    return float(np.sqrt(np.sum((_per_coeff(c, t) * c.coeffs) ** 2)))


def hdot_half_seminorm_sq(c, t):
    """||P^{1/2} u||^2_{L^2} = sum mu_l c^2."""
    return float(np.sum(_per_coeff(c, t) * c.coeffs**2))


def h_half_norm(c, t):
    return float(np.sqrt(np.sum(c.coeffs**2) + hdot_half_seminorm_sq(c, t)))


class IncompatibleRHS(ValueError):
    pass


def spectral_solve(f, t, mean_tol=1e-10):
    """Solve P u = f for mean-free u; refuses right-hand sides with a mean component."""
    mu = _per_coeff(f, t)
    deg = f.degrees
    if np.any(np.abs(f.coeffs[deg == 0]) > mean_tol):
        raise IncompatibleRHS(f"right-hand side has l=0 component {f.coeffs[deg == 0][0]:.3e}; P annihilates constants")
    u = np.zeros_like(f.coeffs)
    nz = deg > 0
    u[nz] = f.coeffs[nz] / mu[nz]
    return f.with_coeffs(u)
