"""Real hyperspherical harmonics on S^3: grids, transforms, pointwise evaluation.

Coordinates on S^3 subset R^4::

    xi = (sin psi sin theta cos phi, sin psi sin theta sin phi, sin psi cos theta, cos psi)

so the North pole N = (0, 0, 0, 1) sits at psi = 0.  The volume element is
``sin^2 psi sin theta dpsi dtheta dphi``.

Basis: ``Y_lkm = A_lk sin^k(psi) C^{k+1}_{l-k}(cos psi) S_km(theta, phi)`` with
``S_km`` a real S^2 harmonic.  ``A_lk`` and the S^2 constants are fixed by
enforcing unit norm under an exact Gauss rule (see :func:`_norms`).  Zonal
functions use ``Z_l = A_l0 U_l(cos psi) / sqrt(4 pi)``.

Coefficient vectors are flat, ordered l-major, then k, then m from -k to k.
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import kernels

S3_AREA = 2.0 * math.pi**2
FULL_L_MAX = 96


class ResolutionError(ValueError):
    """Grid too coarse for the requested truncation degree."""


# ---------------------------------------------------------------------------
# index bookkeeping


@lru_cache(maxsize=None)
def harmonic_index(L, zonal=False):
    """Arrays (l, k, m) of the coefficient layout for truncation ``L``."""
    if zonal:
        l = np.arange(L + 1)
        z = np.zeros_like(l)
        return l, z, z.copy()
    ls, ks, ms = [], [], []
    for l in range(L + 1):
        for k in range(l + 1):
            for m in range(-k, k + 1):
                ls.append(l)
                ks.append(k)
                ms.append(m)
    out = np.array(ls), np.array(ks), np.array(ms)
    for a in out:
        a.setflags(write=False)
    return out


def n_coeffs(L, zonal=False):
    return L + 1 if zonal else (L + 1) * (L + 2) * (2 * L + 3) // 6


@dataclass(frozen=True, eq=False)
class HarmonicCoeffs:
    """Truncated coefficients in the L^2-orthonormal real basis."""

    L: int
    zonal: bool
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.shape != (n_coeffs(self.L, self.zonal),):
            raise ValueError(f"expected {n_coeffs(self.L, self.zonal)} coefficients for L={self.L}, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L, zonal=False):
        return cls(L, zonal, np.zeros(n_coeffs(L, zonal)))

    @classmethod
    def unit(cls, L, l, k=0, m=0, zonal=False):
        c = np.zeros(n_coeffs(L, zonal))
        c[index_of(L, l, k, m, zonal)] = 1.0
        return cls(L, zonal, c)

    @property
    def degrees(self):
        return harmonic_index(self.L, self.zonal)[0]

    def with_coeffs(self, coeffs):
        return replace(self, coeffs=coeffs)

    def to_full(self):
        if not self.zonal:
            return self
        c = np.zeros(n_coeffs(self.L))
        for l in range(self.L + 1):
            c[index_of(self.L, l, 0, 0)] = self.coeffs[l]
        return HarmonicCoeffs(self.L, False, c)

    def dense(self):
        """Array d[l, k, m + L] (zero outside the index set)."""
        full = self.to_full()
        l, k, m = harmonic_index(self.L)
        d = np.zeros((self.L + 1, self.L + 1, 2 * self.L + 1))
        d[l, k, m + self.L] = full.coeffs
        return d

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, s):
        return self.with_coeffs(self.coeffs * float(s))

    __rmul__ = __mul__

    def dot(self, other):
        _check_compatible(self, other)
        return float(self.coeffs @ other.coeffs)


def _check_compatible(a, b):
    if a.L != b.L or a.zonal != b.zonal:
        raise ValueError(f"coefficient layouts differ: (L={a.L}, zonal={a.zonal}) vs (L={b.L}, zonal={b.zonal})")


def index_of(L, l, k=0, m=0, zonal=False):
    if not (0 <= l <= L and 0 <= k <= l and abs(m) <= k):
        raise ValueError(f"index (l={l}, k={k}, m={m}) outside truncation L={L}")
    if zonal:
        if k or m:
            raise ValueError("zonal layout only holds k = m = 0")
        return l
    base = l * (l + 1) * (2 * l + 1) // 6
    return base + k * k + (m + k)


def from_dense(d, L):
    l, k, m = harmonic_index(L)
    return HarmonicCoeffs(L, False, d[l, k, m + L])


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Product Gauss grid on S^3.

    ``w_psi`` integrates against sin^2 psi dpsi, ``w_theta`` against
    sin theta dtheta, ``w_phi`` against dphi.  For zonal grids the theta/phi
    factors are a single node carrying the full 4 pi of S^2.
    """

    zonal: bool
    psi: np.ndarray
    w_psi: np.ndarray
    theta: np.ndarray
    w_theta: np.ndarray
    phi: np.ndarray
    w_phi: np.ndarray

    @property
    def n_psi(self):
        return self.psi.size

    @property
    def n_theta(self):
        return self.theta.size

    @property
    def n_phi(self):
        return self.phi.size

    @property
    def shape(self):
        return (self.n_psi, self.n_theta, self.n_phi)

    @property
    def L(self):
        """Largest degree whose pairwise products the grid integrates exactly."""
        if self.zonal:
            return self.n_psi - 1
        return min(self.n_psi - 1, self.n_theta - 1, (self.n_phi - 1) // 2)

    @property
    def weights(self):
        return (self.w_psi[:, None, None] * self.w_theta[None, :, None] * self.w_phi[None, None, :]).reshape(-1)

    @property
    def nodes(self):
        """(N, 3) array of (psi, theta, phi)."""
        P, T, F = np.meshgrid(self.psi, self.theta, self.phi, indexing="ij")
        return np.stack([P.ravel(), T.ravel(), F.ravel()], axis=1)

    @property
    def xi4(self):
        """Fourth embedding coordinate cos(psi) at every node, grid-shaped."""
        return np.broadcast_to(np.cos(self.psi)[:, None, None], self.shape)

    def points(self):
        """Embedded nodes xi in R^4, array of shape grid.shape + (4,)."""
        P, T, F = np.meshgrid(self.psi, self.theta, self.phi, indexing="ij")
        return sphere_point(P, T, F)


def _cheb2_rule(n):
    """Gauss-Chebyshev (2nd kind) in x = cos psi, weights for sin^2 psi dpsi."""
    j = np.arange(1, n + 1)
    psi = j * np.pi / (n + 1)
    w = np.pi / (n + 1) * np.sin(psi) ** 2
    return psi, w


def make_grid(L, zonal=False, n_psi=None):
    """Grid integrating products of degree-L functions exactly.

    ``n_psi`` overrides the psi node count (default 2L + 2); extra psi nodes
    are useful when integrating non-band-limited densities.
    """
    if int(L) != L or L < 0:
        raise ValueError(f"L must be a non-negative integer, got {L!r}")
    n_psi = 2 * L + 2 if n_psi is None else int(n_psi)
    if n_psi < L + 1:
        raise ResolutionError(f"n_psi={n_psi} < L+1={L + 1}")
    psi, w_psi = _cheb2_rule(n_psi)
    if not zonal and L > FULL_L_MAX:
        raise ResolutionError(f"full grids are limited to L <= {FULL_L_MAX} (got {L}); use a zonal problem")
    if zonal:
        return SphereGrid(True, psi, w_psi, np.array([0.5 * np.pi]), np.array([2.0]), np.array([0.0]), np.array([2.0 * np.pi]))
    x, wt = np.polynomial.legendre.leggauss(L + 1)
    theta = np.arccos(x)[::-1]
    wt = wt[::-1].copy()
    n_phi = 2 * L + 1
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    return SphereGrid(False, psi, w_psi, theta, wt, phi, np.full(n_phi, 2.0 * np.pi / n_phi))


# ---------------------------------------------------------------------------
# basis tables


@lru_cache(maxsize=None)
def _norms(L):
    """(A[l, k], B[k, |m|]) frozen normalisation constants for truncation L.

    A makes sin^k C^{k+1}_{l-k} unit in L^2(sin^2 psi dpsi); B makes
    P_k^m(cos theta) unit in L^2(sin theta dtheta dphi) when paired with a
    phi-factor of mean square one.
    """
    psi, wpsi = _cheb2_rule(L + 2)
    raw = _psi_raw(L, psi)
    A = np.zeros((L + 1, L + 1))
    nrm = np.einsum("lki,i->lk", raw**2, wpsi)
    mask = np.tri(L + 1, dtype=bool)
    A[mask] = 1.0 / np.sqrt(nrm[mask])
    x, wx = np.polynomial.legendre.leggauss(L + 2)
    with np.errstate(over="ignore", invalid="ignore"):
        # unnormalised P_k^m overflows beyond k ~ 100; full grids stop at FULL_L_MAX
        P = kernels.legendre_table(L, x)
        pn = 2.0 * np.pi * np.einsum("kmi,i->km", P**2, wx)
    B = np.zeros((L + 1, L + 1))
    B[mask] = 1.0 / np.sqrt(pn[mask])
    A.setflags(write=False)
    B.setflags(write=False)
    return A, B


def _psi_raw(L, psi):
    psi = np.asarray(psi, dtype=np.float64)
    x = np.cos(psi)
    s = np.sin(psi)
    out = np.zeros((L + 1, L + 1) + psi.shape)
    sk = np.ones_like(psi)
    for k in range(L + 1):
        C = kernels.gegenbauer_table(float(k + 1), L - k, x.reshape(-1)).reshape((L - k + 1,) + psi.shape)
        out[k:, k] = sk * C
        sk = sk * s
    return out


def psi_table(L, psi):
    """Psi[l, k, ...] = A_lk sin^k psi C^{k+1}_{l-k}(cos psi)."""
    A, _ = _norms(L)
    raw = _psi_raw(L, psi)
    return raw * A.reshape(A.shape + (1,) * np.ndim(psi))


def theta_table(L, theta):
    """Theta[k, m + L, ...] = B_k|m| P_k^|m|(cos theta) (zero for |m| > k)."""
    _, B = _norms(L)
    theta = np.asarray(theta, dtype=np.float64)
    P = kernels.legendre_table(L, np.cos(theta).reshape(-1)).reshape((L + 1, L + 1) + theta.shape)
    P = P * B.reshape(B.shape + (1,) * theta.ndim)
    ms = np.abs(np.arange(-L, L + 1))
    return P[:, ms]


def phi_table(L, phi):
    """T[m + L, ...]: 1, sqrt2 cos(m phi) (m > 0), sqrt2 sin(|m| phi) (m < 0)."""
    phi = np.asarray(phi, dtype=np.float64)
    out = np.empty((2 * L + 1,) + phi.shape)
    out[L] = 1.0
    for m in range(1, L + 1):
        out[L + m] = math.sqrt(2.0) * np.cos(m * phi)
        out[L - m] = math.sqrt(2.0) * np.sin(m * phi)
    return out


def zonal_table(L, psi):
    """Z[l, ...] values of the zonal basis functions (includes the S^2 factor)."""
    A, _ = _norms(L)
    x = np.cos(np.asarray(psi, dtype=np.float64))
    U = kernels.gegenbauer_table(1.0, L, x.reshape(-1)).reshape((L + 1,) + x.shape)
    return U * (A[:, 0] / math.sqrt(4.0 * math.pi)).reshape((L + 1,) + (1,) * x.ndim)


@lru_cache(maxsize=32)
def _grid_tables(grid, L):
    if grid.zonal:
        return (zonal_table(L, grid.psi),)
    return psi_table(L, grid.psi), theta_table(L, grid.theta), phi_table(L, grid.phi)


def _tables(grid, L):
    return _grid_tables(grid, L)


def _check_resolution(grid, L, zonal):
    if not zonal and grid.zonal:
        raise ResolutionError("full (non-zonal) coefficients need a full grid")
    if grid.L < L:
        need = f"n_psi >= {L + 1}" if grid.zonal else f"n_psi >= {L + 1}, n_theta >= {L + 1}, n_phi >= {2 * L + 1}"
        raise ResolutionError(f"grid resolves degree {grid.L} < L={L}; need {need}")


# ---------------------------------------------------------------------------
# transforms


def synthesize(c, grid):
    """Values of sum c_lkm Y_lkm at the grid nodes (array of shape grid.shape)."""
    _check_resolution(grid, c.L, c.zonal)
    if grid.zonal:
        (Z,) = _tables(grid, c.L)
        return (c.coeffs @ Z).reshape(grid.shape)
    if c.zonal:
        Psi, _, _ = _tables(grid, c.L)
        f = (c.coeffs @ Psi[:, 0]) / math.sqrt(4.0 * math.pi)
        return np.broadcast_to(f[:, None, None], grid.shape).copy()
    Psi, Th, T = _tables(grid, c.L)
    d = c.dense()
    a = np.einsum("lkm,lki->ikm", d, Psi, optimize=True)
    b = np.einsum("ikm,kmj->ijm", a, Th, optimize=True)
    return np.einsum("ijm,mp->ijp", b, T, optimize=True)


def analyze(f, grid, L, zonal=None):
    """Quadrature projection onto the degree-<=L basis.

    ``zonal`` defaults to ``grid.zonal``; analysing on a full grid with
    ``zonal=True`` keeps only the k = m = 0 coefficients.
    """
    zonal = grid.zonal if zonal is None else zonal
    _check_resolution(grid, L, zonal)
    f = np.asarray(f, dtype=np.float64).reshape(grid.shape)
    if grid.zonal:
        (Z,) = _tables(grid, L)
        return HarmonicCoeffs(L, True, Z @ (grid.w_psi * 4.0 * math.pi * f[:, 0, 0]))
    Psi, Th, T = _tables(grid, L)
    F = np.einsum("ijp,mp,p->ijm", f, T, grid.w_phi, optimize=True)
    G = np.einsum("ijm,kmj,j->ikm", F, Th, grid.w_theta, optimize=True)
    d = np.einsum("ikm,lki,i->lkm", G, Psi, grid.w_psi, optimize=True)
    full = from_dense(d, L)
    if zonal:
        idx = [index_of(L, l) for l in range(L + 1)]
        return HarmonicCoeffs(L, True, full.coeffs[idx])
    return full


def integrate(f, grid):
    return float(grid.weights @ np.asarray(f, dtype=np.float64).reshape(-1))


def mean_value(f, grid):
    return integrate(f, grid) / S3_AREA


# ---------------------------------------------------------------------------
# pointwise evaluation


def sphere_point(psi, theta, phi):
    psi, theta, phi = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (psi, theta, phi)))
    sp = np.sin(psi)
    return np.stack(
        [sp * np.sin(theta) * np.cos(phi), sp * np.sin(theta) * np.sin(phi), sp * np.cos(theta), np.cos(psi)],
        axis=-1,
    )


def sphere_angles(xi):
    """Inverse of :func:`sphere_point`; returns (psi, theta, phi)."""
    xi = np.asarray(xi, dtype=np.float64)
    r3 = np.linalg.norm(xi[..., :3], axis=-1)
    psi = np.arctan2(r3, xi[..., 3])
    theta = np.arctan2(np.hypot(xi[..., 0], xi[..., 1]), xi[..., 2])
    phi = np.mod(np.arctan2(xi[..., 1], xi[..., 0]), 2.0 * np.pi)
    return psi, theta, phi


def evaluate_zonal(c, xi4):
    """Zonal expansion at points given by their fourth coordinate cos(psi)."""
    if not c.zonal:
        raise ValueError("evaluate_zonal needs zonal coefficients")
    A, _ = _norms(c.L)
    a = c.coeffs * A[:, 0] / math.sqrt(4.0 * math.pi)
    xi4 = np.clip(np.asarray(xi4, dtype=np.float64), -1.0, 1.0)
    return kernels.clenshaw_u(a, xi4)


def evaluate(c, xi):
    """sum c_lkm Y_lkm at arbitrary points xi in S^3 (array (..., 4))."""
    xi = np.asarray(xi, dtype=np.float64)
    if c.zonal:
        return evaluate_zonal(c, xi[..., 3])
    psi, theta, phi = sphere_angles(xi)
    shape = psi.shape
    psi, theta, phi = psi.ravel(), theta.ravel(), phi.ravel()
    Psi = psi_table(c.L, psi)
    Th = theta_table(c.L, theta)
    T = phi_table(c.L, phi)
    d = c.dense()
    a = np.einsum("lkm,lkp->kmp", d, Psi, optimize=True)
    return np.einsum("kmp,kmp,mp->p", a, Th, T, optimize=True).reshape(shape)


# ---------------------------------------------------------------------------
# coefficient dump


def dump_coeffs(c, path):
    """Text table with one ``l k m value`` row per coefficient (documented order)."""
    l, k, m = harmonic_index(c.L, c.zonal)
    with open(path, "w") as fh:
        fh.write(f"# L={c.L} zonal={int(c.zonal)}\n# l k m value\n")
        for row in zip(l, k, m, c.coeffs):
            fh.write(f"{row[0]} {row[1]} {row[2]} {row[3]:.17e}\n")


def load_coeffs(path):
    with open(path) as fh:
        header = fh.readline()
    fields = dict(tok.split("=") for tok in header.lstrip("#").split())
    L, zonal = int(fields["L"]), bool(int(fields["zonal"]))
    data = np.loadtxt(path, comments="#", ndmin=2)
    c = np.zeros(n_coeffs(L, zonal))
    for l, k, m, v in data:
        c[index_of(L, int(l), int(k), int(m), zonal)] = v
    return HarmonicCoeffs(L, zonal, c)
