"""The cut-off construction of u0 with u0 = log(1/|x|) outside B_1 and 0 on B_{1/2}.

Starting from ``v_0 = log(1/|x|)`` one integrates k times in x_1,
``v_j(x) = int_0^{x_1} v_{j-1}(t, xbar) dt``, and sets
``u0 = d^k/dx_1^k (chi v_k)`` for a cutoff chi vanishing on B_{1/2} and equal to
one outside B_1.  By Leibniz and ``d^{k-i} v_k = v_i``::

    u0 = sum_i binom(k, i) (d_1^i chi) v_i

For k >= 1, v_k carries a term like -(pi/2) sgn(x1) |xbar| x1^(k-1)/(k-1)!
along the x1 axis, so inside the shell u0 has a conical kink on that axis.

The k-fold integral collapses to a single Cauchy kernel integral
``v_j = x1^j/(j-1)! int_0^1 (1-s)^{j-1} v_0(s x1, xbar) ds`` which is evaluated
by composite Gauss-Legendre on panels graded geometrically toward s = 0, where
the logarithm is (nearly) singular for points close to the x_1 axis.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import jets, kernels

N_DIM = 3
C3 = 1.0 / math.pi**2


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# cutoff


@dataclass(frozen=True)
class Cutoff:
    """chi(x) = zeta((|x| - inner) / (outer - inner)), zeta(t) = h(t) / (h(t) + h(1 - t)), h(t) = exp(-1/t)."""

    inner: float = 0.5
    outer: float = 1.0

    def _tau(self, r):
        return (r - self.inner) / (self.outer - self.inner)

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        v = self.x1_derivatives(np.atleast_2d(x), 0)[0]
        return float(v[0]) if x.ndim == 1 else v.reshape(x.shape[:-1])

    def x1_derivatives(self, x, order):
        """Array (order + 1, ...) of d^j chi / dx_1^j, j = 0..order."""
        x = np.asarray(x, dtype=np.float64)
        r = np.linalg.norm(x, axis=-1)
        tau = self._tau(r)
        out = np.zeros((order + 1,) + r.shape)
        out[0][tau >= 1.0] = 1.0
        mid = (tau > 0.0) & (tau < 1.0)
        if np.any(mid):
            xm = x[mid]
            rho2 = np.sum(xm[:, 1:] ** 2, axis=-1)
            t1 = jets.variable(xm[:, 0], order)
            s = jets.sqrt(jets.mul(t1, t1) + jets.constant(rho2, order))
            tj = s / (self.outer - self.inner)
            tj[0] -= self.inner / (self.outer - self.inner)
            one_m = -tj
            one_m[0] += 1.0
            # chi = 1 / (1 + exp(1/tau - 1/(1 - tau)))
            with np.errstate(over="ignore", invalid="ignore"):
                expo = jets.recip(tj) - jets.recip(one_m)
                z = jets.logistic(-expo)
            # jet coefficients of expo overflow within ~1e-30 of the plateaus, where chi is flat to rounding
            flat = ~np.all(np.isfinite(z), axis=0)
            z[:, flat] = 0.0
            z[0, flat] = np.where(expo[0, flat] < 0, 1.0, 0.0)
            out[:, mid] = jets.derivatives(z)
        return out


# ---------------------------------------------------------------------------
# v_j chain


def graded_rule(q, levels=52):
    """Gauss-Legendre with q nodes on each of the panels [0, 2^-levels], ..., [1/2, 1]."""
    br = np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1, dtype=np.float64)])
    x, w = np.polynomial.legendre.leggauss(q)
    a, b = br[:-1, None], br[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return np.ascontiguousarray(nodes.ravel()), np.ascontiguousarray(weights.ravel())


_PROBES = np.array(
    [
        [1.0, 0.0, 0.0],
        [1.0, 1e-3, 0.0],
        [-0.8, 1e-6, 0.0],
        [0.3, 0.4, 0.2],
        [2.5, 0.1, -0.3],
        [0.7, 0.0, 0.5],
    ]
)


@dataclass
class VChain:
    k: int
    quad_tol: float
    nodes: np.ndarray
    weights: np.ndarray
    _memo: dict = field(default_factory=dict, repr=False)

    def values(self, x):
        """v_0..v_k at points x (array (..., 3)) -> array (k + 1, ...)."""
        x = np.asarray(x, dtype=np.float64)
        rho = np.linalg.norm(x[..., 1:], axis=-1)
        return kernels.cauchy_chain(x[..., 0], rho, self.k, self.nodes, self.weights)

    def v(self, j, x):
        """Scalar v_j(x), memoised per (x_1, |xbar|) line position."""
        if not 0 <= j <= self.k:
            raise ValueError(f"j={j} outside 0..{self.k}")
        x = np.asarray(x, dtype=np.float64)
        key = (float(x[0]), float(np.hypot(x[1], x[2])))
        vals = self._memo.get(key)
        if vals is None:
            vals = self.values(np.array([key[0], key[1], 0.0]))
            self._memo[key] = vals
        return float(vals[j])


def build_chain(k, quad_tol=1e-8, max_nodes=48):
    """Calibrate the panel rule until two consecutive orders agree to quad_tol."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    q = 8
    prev = None
    while q <= max_nodes:
        s, w = graded_rule(q)
        vals = kernels.cauchy_chain(_PROBES[:, 0], np.linalg.norm(_PROBES[:, 1:], axis=1), int(k), s, w)
        if prev is not None:
            err = np.max(np.abs(vals - prev) / np.maximum(1.0, np.abs(vals)))
            if err <= quad_tol:
                return VChain(int(k), quad_tol, s, w)
        prev = vals
        q += 8
    raise QuadratureError(f"v_j panels did not converge to {quad_tol:g} with {max_nodes} nodes per panel")


def u0_lemma22(chain, chi, x, shortcut=True):
    """Leibniz form of u0 at points x (array (..., 3) or a single point)."""
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    xs = np.atleast_2d(x)
    r = np.linalg.norm(xs, axis=-1)
    out = np.zeros(r.shape)
    if shortcut:
        outer = r >= chi.outer
        out[outer] = -np.log(r[outer])
        mid = (r > chi.inner) & ~outer
    else:
        mid = r > 0.0
    if np.any(mid):
        k = chain.k
        d = chi.x1_derivatives(xs[mid], k)
        v = chain.values(xs[mid])
        binom = np.array([math.comb(k, i) for i in range(k + 1)], dtype=np.float64)
        out[mid] = np.einsum("i,im,im->m", binom, d, v)
    return float(out[0]) if scalar else out.reshape(x.shape[:-1])


# ---------------------------------------------------------------------------
# independent high-precision finite-difference oracle


def _mp_chi(r, chi):
    tau = (r - chi.inner) / (chi.outer - chi.inner)
    if tau <= 0:
        return mpmath.mpf(0)
    if tau >= 1:
        return mpmath.mpf(1)
    return 1 / (1 + mpmath.exp(1 / tau - 1 / (1 - tau)))


def _mp_vk(k, x1, rho):
    if x1 == 0:
        return mpmath.mpf(0)
    f = lambda t: (x1 - t) ** (k - 1) * (-mpmath.log(t * t + rho * rho) / 2)
    return mpmath.quad(f, [0, x1]) / mpmath.factorial(k - 1)


def leibniz_fd_oracle(k, chi, x, h=2.5e-3, dps=50):
    """d^k/dx_1^k (chi v_k) by central differences (Richardson h, h/2) in extended precision."""
    with mpmath.workdps(dps):
        x1 = mpmath.mpf(float(x[0]))
        rho = mpmath.sqrt(mpmath.mpf(float(x[1])) ** 2 + mpmath.mpf(float(x[2])) ** 2)

        def F(a):
            return _mp_chi(mpmath.sqrt(a * a + rho * rho), chi) * _mp_vk(k, a, rho)

        def D(step):
            step = mpmath.mpf(step)
            acc = mpmath.mpf(0)
            for j in range(k + 1):
                acc += (-1) ** j * mpmath.binomial(k, j) * F(x1 + (mpmath.mpf(k) / 2 - j) * step)
            return acc / step**k

        d1, d2 = D(h), D(h / 2)
        return float((4 * d2 - d1) / 3)


# ---------------------------------------------------------------------------
# far-field decay of (-Delta)^{3/2} u0


def _ball_rule(chi, n_s, n_theta, n_phi):
    """Nodes/weights on B_outer in polar coordinates about the e_1 axis."""
    x, w = np.polynomial.legendre.leggauss(n_s)
    segs = [(0.0, chi.inner), (chi.inner, chi.outer)]
    s = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in segs])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in segs])
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = np.full(n_phi, 2.0 * np.pi / n_phi)
    S, C, P = np.meshgrid(s, ct, phi, indexing="ij")
    W = (ws[:, None, None] * S**2) * wt[None, :, None] * wp[None, None, :]
    st = np.sqrt(1.0 - C**2)
    y = np.stack([S * C, S * st * np.cos(P), S * st * np.sin(P)], axis=-1)
    return y.reshape(-1, 3), W.reshape(-1)


def cubed_half_laplacian_far(chain, chi, x, n_s=48, n_theta=64, n_phi=None):
    """(-Delta)^{3/2} u0 at |x| > 1 after moving every derivative onto the kernel.

    For x outside B_1 the only contribution comes from G = (chi - 1) v_k,
    supported in B_1::

        (-Delta)^{3/2} u0 (x) = -C3 (-1)^k int G(y) d^k_{y1} (-Delta_y |x-y|^{-4}) dy
                              = -C3 (-1)^k int G(y) d^k_{y1} (-12 |x-y|^{-6}) dy
    """
    x = np.asarray(x, dtype=np.float64)
    if np.linalg.norm(x) <= chi.outer:
        raise ValueError("far-field formula needs x outside the cutoff ball")
    if n_phi is None:
        n_phi = 1 if np.hypot(x[1], x[2]) == 0.0 else 32
    k = chain.k
    y, w = _ball_rule(chi, n_s, n_theta, n_phi)
    G = (chi.x1_derivatives(y, 0)[0] - 1.0) * chain.values(y)[k]
    dx1 = x[0] - y[:, 0]
    c2 = (x[1] - y[:, 1]) ** 2 + (x[2] - y[:, 2]) ** 2
    q = np.zeros((k + 1, y.shape[0]))
    q[0] = dx1**2 + c2
    if k >= 1:
        q[1] = -2.0 * dx1
    if k >= 2:
        q[2] = 1.0
    kern = jets.power(q, -3.0)[k] * math.factorial(k) * -12.0
    return -C3 * (-1.0) ** k * float(np.sum(w * G * kern))


@dataclass
class DecayReport:
    provider: str
    exponent: int
    radii: list
    values: list
    weighted: list
    ratios: list
    bounded: bool
    constant: float
    inconclusive: bool = False
    notes: str = ""


def decay_spotcheck(chain, chi, radii, provider="lemma22", direction=(1.0, 0.0, 0.0), rel_tol=1e-3, max_ratio=2.0):
    """Weighted far-field values |(-Delta)^{3/2} u0| |x|^(2n + k) along one ray.

    ``provider='half_w0'`` uses the closed form e^{3 w0} with weight |x|^{2n}.
    """
    radii = [float(r) for r in radii]
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    vals, inconclusive = [], False
    if provider == "half_w0":
        exponent = 2 * N_DIM
        for r in radii:
            vals.append(float((2.0 / (1.0 + r * r)) ** 3))
    elif provider == "lemma22":
        exponent = 2 * N_DIM + chain.k
        for r in radii:
            coarse = cubed_half_laplacian_far(chain, chi, r * d)
            fine = cubed_half_laplacian_far(chain, chi, r * d, n_s=72, n_theta=96)
            if abs(fine - coarse) > rel_tol * abs(fine):
                inconclusive = True
            vals.append(fine)
    else:
        raise ValueError(f"unknown provider {provider!r}")
    weighted = [abs(v) * r**exponent for v, r in zip(vals, radii)]
    ratios = [b / a if a > 0 else math.inf for a, b in zip(weighted, weighted[1:])]
    bounded = all(q <= max_ratio for q in ratios)
    return DecayReport(provider, exponent, radii, vals, weighted, ratios, bounded, max(weighted), inconclusive)
