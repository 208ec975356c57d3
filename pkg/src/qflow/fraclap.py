"""Pointwise R^3 oracles: half-Laplacian by singular integral, classical Laplacian,
fundamental solution of (-Delta)^{1/2}, and weighted decay checks.

The half-Laplacian is

    (-Delta)^{1/2} f(x) = C3 P.V. int (f(x) - f(y)) / |x - y|^4 dy,   C3 = 1 / pi^2,

integrated in spherical shells about x.  Inside the core radius r0 the
integrand is paired antipodally, ``2 f(x) - f(x + rho w) - f(x - rho w)``, which
removes the gradient term and leaves a bounded shell integrand.  Shells are
graded geometrically out to R = 1e3 (1 + |x|), with extra breakpoints at
distances near |x| so that structure around the origin is resolved; the
tail beyond R is closed analytically from the decay hint.
"""

import math
from dataclasses import dataclass

import numpy as np

C3 = 1.0 / math.pi**2


class ConvergenceError(RuntimeError):
    def __init__(self, msg, estimate, error):
        super().__init__(f"{msg} (estimate {estimate:.6e}, error {error:.2e})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class PointEvaluable:
    """A vectorised function R^3 -> R with what the singular integral needs to know.

    ``eval`` maps arrays (..., 3) to (...).  ``radial`` promises f depends on |x|
    only, which lets the azimuthal quadrature collapse to one node.
    """

    eval: object
    decay_hint: float = 1.0
    f_infinity: float = 0.0
    radial: bool = False

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# classical Laplacian


def classical_laplacian(f, x, h=1e-2):
    """(-Delta f)(x) by the 7-point stencil with one Richardson step (h, h/2).

    The step is scaled by max(1, |x|) pointwise.  Works on arrays (..., 3).
    """
    x = np.asarray(x, dtype=np.float64)
    step = h * np.maximum(1.0, np.linalg.norm(x, axis=-1))[..., None]
    f0 = f(x)

    def lap(hh):
        acc = -6.0 * f0
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            acc = acc + f(x + hh * e) + f(x - hh * e)
        return acc / hh[..., 0] ** 2

    return -(4.0 * lap(0.5 * step) - lap(step)) / 3.0


def minus_laplacian(f, f_infinity=0.0, decay_hint=2.0, h=1e-2):
    """PointEvaluable for -Delta f (stencil), carrying f's symmetry."""
    return PointEvaluable(lambda y: classical_laplacian(f, y, h), decay_hint, f_infinity, getattr(f, "radial", False))


# ---------------------------------------------------------------------------
# half Laplacian


def _frame(x):
    nx = np.linalg.norm(x)
    a = -x / nx if nx > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    b1 = np.cross(a, helper)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(a, b1)
    return a, b1, b2


def _gauss_panels(breaks, q):
    t, w = np.polynomial.legendre.leggauss(q)
    a, b = np.asarray(breaks[:-1])[:, None], np.asarray(breaks[1:])[:, None]
    return (0.5 * (b - a) * t + 0.5 * (a + b)).ravel(), (0.5 * (b - a) * w).ravel()


def _radial_breaks(r0, R, dist):
    br = {0.0, 0.25 * r0, 0.5 * r0, r0}
    r = r0
    while r < R:
        r *= 2.0
        br.add(min(r, R))
    d = r0
    while d < R:
        for c in (dist - d, dist + d):
            if r0 < c < R:
                br.add(c)
        d *= 2.0
    if r0 < dist < R:
        br.add(dist)
    return np.array(sorted(br))


def _angle_rule(q, levels, n_phi):
    """Directions (cos theta from axis a, phi) with theta panels graded toward 0."""
    br = np.concatenate([[0.0], np.pi * 2.0 ** -np.arange(levels, -1, -1, dtype=np.float64)])
    th, wth = _gauss_panels(br, q)
    wth = wth * np.sin(th)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    wphi = np.full(n_phi, 2.0 * np.pi / n_phi)
    return th, wth, phi, wphi


def _shell_means(f, x, frame, rho, th, wth, phi, wphi, paired, chunk=400_000):
    """int_{S^2} f(x + rho w) dw for each rho (paired: average with x - rho w)."""
    a, b1, b2 = frame
    ct, st = np.cos(th), np.sin(th)
    dirs = (ct[:, None, None] * a + st[:, None, None] * (np.cos(phi)[None, :, None] * b1 + np.sin(phi)[None, :, None] * b2)).reshape(-1, 3)
    wd = (wth[:, None] * wphi[None, :]).reshape(-1)
    out = np.empty(rho.size)
    per = max(1, chunk // dirs.shape[0])
    for i in range(0, rho.size, per):
        rr = rho[i : i + per]
        y = x + rr[:, None, None] * dirs[None, :, :]
        vals = f(y)
        if paired:
            vals = 0.5 * (vals + f(2.0 * x - y))
        out[i : i + per] = vals @ wd
    return out


def _half_lap_once(f, x, q, r0, R, levels, n_phi):
    frame = _frame(x)
    fx = float(f(x[None, :])[0])
    th, wth, phi, wphi = _angle_rule(q, levels, n_phi)
    breaks = _radial_breaks(r0, R, float(np.linalg.norm(x)))
    core = breaks[breaks <= r0]
    outer = breaks[breaks >= r0]
    rc, wc = _gauss_panels(core, q)
    ro, wo = _gauss_panels(outer, q)
    four_pi = 4.0 * math.pi
    mc = _shell_means(f, x, frame, rc, th, wth, phi, wphi, paired=True)
    mo = _shell_means(f, x, frame, ro, th, wth, phi, wphi, paired=False)
    total = np.sum(wc * (four_pi * fx - mc) / rc**2) + np.sum(wo * (four_pi * fx - mo) / ro**2)
    mR = _shell_means(f, x, frame, np.array([R]), th, wth, phi, wphi, paired=False)[0] / four_pi
    d = max(float(f.decay_hint), 1e-3)
    finf = float(f.f_infinity)
    total += four_pi * ((fx - finf) / R - (mR - finf) / ((d + 1.0) * R))
    return C3 * total


def half_laplacian(f, x, tol=1e-3, atol=1e-11, r0=1.0, n_phi=None, max_level=4, full_output=False):
    """(-Delta)^{1/2} f at a single point x, refined until two levels agree to tol (relative).

    ``f`` must be a :class:`PointEvaluable`.  Raises :class:`ConvergenceError`
    if the refinement ladder is exhausted.
    """
    x = np.asarray(x, dtype=np.float64).reshape(3)
    if f.decay_hint < 1:
        raise ValueError("decay_hint >= 1 required")
    if n_phi is None:
        n_phi = 1 if f.radial else 24
    R = 1e3 * (1.0 + float(np.linalg.norm(x)))
    ladder = [(8, 8), (12, 10), (16, 12), (24, 14), (32, 16)][: max_level + 1]
    prev, err = None, math.inf
    for q, levels in ladder:
        nphi = n_phi if f.radial else max(n_phi, 2 * q)
        val = _half_lap_once(f, x, q, r0, R, levels, nphi)
        if prev is not None:
            err = abs(val - prev)
            scale = max(abs(val), 1e-14)
            if err <= tol * scale or err < atol:
                return (val, err) if full_output else val
        prev = val
    raise ConvergenceError("half-Laplacian refinement did not converge", val, err)


def three_halves_laplacian(f, x, tol=1e-3, f_infinity_of_laplacian=0.0, decay_hint=2.0, **kw):
    """(-Delta)^{1/2} applied to the stencil -Delta f."""
    g = minus_laplacian(f, f_infinity=f_infinity_of_laplacian, decay_hint=decay_hint)
    return half_laplacian(g, x, tol=tol, **kw)


# ---------------------------------------------------------------------------
# fundamental solution and convolution test functions


def fundamental_solution(n, x):
    """Phi(x) = ((n-3)/2)! / (2 pi^((n+1)/2)) |x|^{-(n-1)}."""
    if int(n) != n or n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n!r}")
    x = np.asarray(x, dtype=np.float64)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ZeroDivisionError("fundamental solution is singular at the origin")
    c = math.factorial((n - 3) // 2) / (2.0 * math.pi ** ((n + 1) / 2))
    return c / r ** (n - 1)


def bump(r, a=1.0):
    """exp(1 - 1 / (1 - (r/a)^2)) on |r| < a, zero outside."""
    r = np.asarray(r, dtype=np.float64)
    t = (r / a) ** 2
    out = np.zeros_like(r)
    m = t < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m]))
    return out


def bump_potential(a=1.0, n_table=3001):
    """PointEvaluable for Phi * g with g = bump(|x|, a) (radial, decays like |x|^-2).

    (Phi * g)(r) = (1/pi) int_0^a g(s) (s/r) log|(r+s)/(r-s)| ds.  Tabulated by
    adaptive quadrature on [0, 1.5 a] and spline-interpolated; beyond that a
    fixed Gauss rule is exact to rounding since the integrand is smooth.
    """
    from scipy.integrate import quad
    from scipy.interpolate import CubicSpline

    def exact(r):
        if r == 0.0:
            return 2.0 / math.pi * quad(lambda s: float(bump(s, a)), 0.0, a, epsabs=1e-14, epsrel=1e-13)[0]
        g = lambda s: float(bump(s, a)) * (s / r) * math.log(abs((r + s) / (r - s))) if s != r else 0.0
        pts = [r] if r < a else None
        return quad(g, 0.0, a, points=pts, limit=200, epsabs=1e-14, epsrel=1e-12)[0] / math.pi

    rt = np.linspace(0.0, 1.5 * a, n_table)
    table = np.array([exact(float(r)) for r in rt])
    spline = CubicSpline(np.concatenate([-rt[:0:-1], rt]), np.concatenate([table[:0:-1], table]))
    s, ws = np.polynomial.legendre.leggauss(64)
    s = 0.5 * a * (s + 1.0)
    ws = 0.5 * a * ws * bump(s, a)

    def ev(x):
        r = np.linalg.norm(x, axis=-1)
        out = np.empty_like(r)
        near = r <= 1.5 * a
        out[near] = spline(r[near])
        rf = r[~near][..., None]
        out[~near] = np.sum(ws * (s / rf) * np.log((rf + s) / (rf - s)), axis=-1) / math.pi
        return out

    return PointEvaluable(ev, decay_hint=2.0, f_infinity=0.0, radial=True)


# ---------------------------------------------------------------------------
# Gaussian references


def gaussian():
    return PointEvaluable(lambda y: np.exp(-np.sum(y * y, axis=-1)), decay_hint=50.0, radial=True)


def gaussian_half_laplacian_fourier(r):
    """(-Delta)^{1/2} e^{-|x|^2} at radius r via the radial inverse Fourier integral.

    Fourier transform of e^{-|x|^2} is pi^{3/2} e^{-k^2/4}; the radial inverse
    transform of G(k) = k pi^{3/2} e^{-k^2/4} is (1/(2 pi^2 r)) int G(k) k sin(kr) dk.
    """
    from scipy.integrate import quad

    G = lambda k: k * math.pi**1.5 * math.exp(-k * k / 4.0)
    if r == 0.0:
        return quad(lambda k: G(k) * k * k, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)[0] / (2.0 * math.pi**2)
    return quad(lambda k: G(k) * k * math.sin(k * r), 0.0, 60.0, limit=400, epsabs=1e-13, epsrel=1e-12)[0] / (2.0 * math.pi**2 * r)


@dataclass
class DecayCheck:
    s: float
    radii: list
    values: list
    weighted: list
    ratios: list
    bounded: bool
    constant: float


def schwartz_decay_check(phi, s, radii=(5.0, 10.0, 20.0, 40.0), direction=(1.0, 0.0, 0.0), tol=1e-3, max_ratio=1.5):
    """|(-Delta)^s phi(x)| |x|^{3 + 2 s} along a ray for s in {1/2, 3/2}."""
    if s not in (0.5, 1.5):
        raise ValueError("only s = 1/2 and s = 3/2 are supported")
    d = np.asarray(direction, dtype=np.float64)
    d /= np.linalg.norm(d)
    g = phi if s == 0.5 else minus_laplacian(phi, decay_hint=phi.decay_hint)
    values = [half_laplacian(g, r * d, tol=tol) for r in radii]
    weighted = [abs(v) * r ** (3.0 + 2.0 * s) for v, r in zip(values, radii)]
    ratios = [b / a if a > 0 else (1.0 if b == 0 else math.inf) for a, b in zip(weighted, weighted[1:])]
    return DecayCheck(s, list(radii), values, weighted, ratios, all(q <= max_ratio for q in ratios), max(weighted))
