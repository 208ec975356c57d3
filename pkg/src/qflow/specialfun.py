"""Scalar special functions and the geometric constants of the round sphere."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


def _check_odd_dimension(n):
    if int(n) != n or n < 3 or n % 2 == 0:
        raise ValueError(f"dimension must be an odd integer >= 3, got {n!r}")


def gegenbauer(alpha, degree, x):
    """Gegenbauer polynomial C_degree^alpha(x) by upward three-term recurrence.

    ``x`` may be a scalar or an array with entries in [-1, 1].
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a non-negative integer, got {degree!r}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("x must lie in [-1, 1]")
    val = kernels.gegenbauer_table(float(alpha), int(degree), xa.reshape(-1))[int(degree)]
    return float(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


def assoc_legendre(l, m, x):
    """Unnormalized associated Legendre function P_l^m(x), Condon-Shortley phase included."""
    if int(l) != l or int(m) != m or not 0 <= m <= l:
        raise ValueError(f"need integers 0 <= m <= l, got l={l!r}, m={m!r}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("x must lie in [-1, 1]")
    val = kernels.legendre_table(int(l), xa.reshape(-1))[int(l), int(m)]
    return float(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


@dataclass(frozen=True)
class Constants:
    n: int
    sphere_area: float
    gamma_n: float

    @property
    def factorial_nm1(self):
        return factorial(self.n - 1)

    @property
    def factorial_n(self):
        return factorial(self.n)


def factorial(k):
    """k! through log-gamma, rounded back to the integer it represents."""
    return float(round(math.exp(math.lgamma(k + 1))))


def sphere_area(n):
    """|S^n| = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    return 2.0 * math.exp(0.5 * (n + 1) * math.log(math.pi) - math.lgamma(0.5 * (n + 1)))


def constants(n):
    _check_odd_dimension(n)
    area = sphere_area(n)
    return Constants(n=int(n), sphere_area=area, gamma_n=factorial(n - 1) / 2.0 * area)
