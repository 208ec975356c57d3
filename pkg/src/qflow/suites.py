"""Property and anchor suites shared by ``qflow verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` rows: a measured value, the
threshold it is compared against, and whether it gates the exit status.
Randomised suites take a seed and draw everything from one
``numpy.random.Generator``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import conformal
from . import fraclap as fl
from . import lemma22kit as lk
from . import s3harmonics as sh
from .paneitz import multiplier_gamma, multiplier_product, multiplier_table
from .problem import fibonacci_directions
from .solver import coercivity_margin
from .specialfun import constants


@dataclass
class Check:
    name: str
    measured: float
    threshold: float
    passed: bool
    relation: str = "<="
    gated: bool = True
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        tag = "" if self.gated else " (diagnostic)"
        return f"{status} {self.name}: measured {self.measured:.6g} {self.relation} {self.threshold:.6g}{tag}"

    def to_dict(self):
        return {
            "name": self.name,
            "measured": float(self.measured) if math.isfinite(self.measured) else repr(float(self.measured)),
            "threshold": float(self.threshold),
            "relation": self.relation,
            "passed": bool(self.passed),
            "gated": bool(self.gated),
            "detail": self.detail,
        }


def upper(name, measured, threshold, **kw):
    return Check(name, float(measured), float(threshold), bool(measured <= threshold), "<=", **kw)


def lower(name, measured, threshold, **kw):
    return Check(name, float(measured), float(threshold), bool(measured >= threshold), ">=", **kw)


def all_passed(checks):
    return all(c.passed for c in checks if c.gated)


# ---------------------------------------------------------------------------
# spherical solutions


def spherical_volume(lam, n_psi=256):
    """int e^{3 u_lam} dx by sphere quadrature of exp(3u(pi xi) - 3 w0(pi xi))."""
    g = sh.make_grid(0, zonal=True, n_psi=n_psi)
    x = conformal.grid_euclidean_points(g)
    log_i = 3.0 * conformal.spherical_solution(lam, np.zeros(3), x) - 3.0 * conformal.w0_on_sphere(g.xi4)
    return conformal.sphere_integral_of_euclidean(np.exp(log_i), g)


def spherical_pointwise(lam, x, tol=1e-4):
    """(lhs, rhs): oracle (-Delta)^{1/2}(-Delta u) and 2 e^{3u} at x."""
    f = fl.PointEvaluable(lambda y: conformal.spherical_solution(lam, np.zeros(3), y), decay_hint=1.0, radial=True)
    g = fl.minus_laplacian(f, decay_hint=2.0)
    lhs = fl.half_laplacian(g, x, tol=tol)
    rhs = 2.0 * math.exp(3.0 * float(conformal.spherical_solution(lam, np.zeros(3), np.asarray(x, dtype=float))))
    return lhs, rhs


def spherical_suite(lams=(0.5, 1.0, 2.0), points=((0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (0.0, 1.5, 0.0)), vol_tol=1e-8, pw_tol=1e-2):
    area = constants(3).sphere_area
    out = []
    for lam in lams:
        v = spherical_volume(lam)
        out.append(upper(f"spherical volume lambda={lam}", abs(v / area - 1.0), vol_tol))
    for lam in lams:
        for x in points:
            lhs, rhs = spherical_pointwise(lam, np.asarray(x, dtype=float))
            out.append(upper(f"spherical residual lambda={lam} x={tuple(x)}", abs(lhs - rhs) / abs(rhs), pw_tol, detail=f"lhs={lhs:.10g} rhs={rhs:.10g}"))
    return out


# ---------------------------------------------------------------------------
# multipliers, Poincare, coercivity


def multiplier_suite(ns=(3, 5, 7), lmax=64, tol=1e-10):
    out = []
    for n in ns:
        a = multiplier_product(n, lmax)[1:]
        b = multiplier_gamma(n, lmax)[1:]
        out.append(upper(f"mu_l = Gamma(l+n)/Gamma(l), n={n}, l<={lmax}", float(np.max(np.abs(a / b - 1.0))), tol))
    mu1 = float(multiplier_table(3, 1).mu[1])
    out.append(upper("mu_1 = 6 on S^3", abs(mu1 - 6.0), 4 * np.finfo(float).eps * 6))
    return out


def poincare_suite(seed=0, n_cases=500, lmax=512, tol=1e-12):
    """mu_l >= 1 for 1 <= l <= lmax, and ||w - mean||^2 <= ||P^{1/2} w||^2 on random zonal vectors (quadrature side)."""
    mu = multiplier_table(3, lmax).mu
    out = [lower(f"min mu_l over 1<=l<={lmax}", float(np.min(mu[1:])), 1.0)]
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_cases):
        L = int(rng.integers(1, 17))
        g = sh.make_grid(L, zonal=True)
        c = rng.standard_normal(L + 1) * rng.uniform(0.1, 10.0)
        w = sh.HarmonicCoeffs(L, True, c)
        f = sh.synthesize(w, g)
        lhs = sh.integrate((f - sh.mean_value(f, g)) ** 2, g)
        rhs = float(np.sum(multiplier_table(3, L).mu[w.degrees] * c**2))
        worst = min(worst, (rhs - lhs) / max(1.0, rhs))
    out.append(lower(f"Poincare margin over {n_cases} random instances", worst, -tol))
    return out


def coercivity_suite(n_alpha=50, tol=1e-12):
    alphas = np.linspace(-10.0, 2.0, n_alpha + 1, endpoint=False)[1:]
    err = max(abs(coercivity_margin(a, 3) - (2.0 - a) / 4.0) for a in alphas)
    return [upper(f"1/2 - alpha n gamma/(2|S|n!) = (2-alpha)/4 over {n_alpha} alphas", err, tol)]


# ---------------------------------------------------------------------------
# Beckner


def beckner_sides(w, grid):
    """(log mean exp(w - wbar), (1/(2|S|n!)) sum mu w^2) on S^3."""
    f = sh.synthesize(w, grid)
    f = f - sh.mean_value(f, grid)
    lhs = math.log1p(sh.mean_value(np.expm1(f), grid))
    rhs = float(np.sum(multiplier_table(3, w.L).mu[w.degrees] * w.coeffs**2)) / (2.0 * sh.S3_AREA * 6.0)
    return lhs, rhs


def random_mean_free(rng, L, zonal, hdot_max=3.0):
    n = sh.n_coeffs(L, zonal)
    c = rng.standard_normal(n)
    w = sh.HarmonicCoeffs(L, zonal, c)
    c[w.degrees == 0] = 0.0
    mu = multiplier_table(3, L).mu[w.degrees]
    c = c / np.maximum(mu, 1.0) ** rng.uniform(0.0, 0.5)
    norm = math.sqrt(float(np.sum(mu * c**2)))
    target = rng.uniform(0.0, hdot_max)
    return sh.HarmonicCoeffs(L, zonal, c * target / norm if norm > 0 else c)


def beckner_suite(seed=7, n_cases=200, tol=1e-10, ratio_tol=1e-3):
    """Random mean-free w (L <= 32 zonal, L <= 8 full) with Hdot^{3/2} norm <= 3."""
    rng = np.random.default_rng(seed)
    worst, passes = math.inf, 0
    for i in range(n_cases):
        zonal = i % 4 != 0
        L = int(rng.integers(1, 33 if zonal else 9))
        w = random_mean_free(rng, L, zonal)
        g = sh.make_grid(4 * L, zonal=zonal) if zonal else sh.make_grid(3 * L, zonal=False)
        lhs, rhs = beckner_sides(w, g)
        margin = rhs - lhs
        worst = min(worst, margin)
        passes += margin >= -tol
    out = [
        lower("Beckner margin (worst of random cases)", worst, -tol),
        lower("Beckner cases passing", passes, n_cases, detail=f"{passes}/{n_cases}"),
    ]
    g = sh.make_grid(16, zonal=True)
    for l, expect in ((1, 1.0), (2, 0.25)):
        for eps in (1e-2, 1e-3, 1e-4):
            w = sh.HarmonicCoeffs.unit(16, l, zonal=True) * eps
            lhs, rhs = beckner_sides(w, g)
            out.append(upper(f"Beckner sharpness l={l} eps={eps:g}: |ratio - {expect:g}|", abs(lhs / rhs - expect), ratio_tol, gated=(l == 1), detail=f"ratio={lhs / rhs:.9f}"))
    return out


# ---------------------------------------------------------------------------
# transforms


def transform_suite(seed=0, L=12, gram_L=6, tol=1e-10, gram_tol=1e-9):
    rng = np.random.default_rng(seed)
    out = []
    g = sh.make_grid(L)
    c = sh.HarmonicCoeffs(L, False, rng.standard_normal(sh.n_coeffs(L)))
    f = sh.synthesize(c, g)
    back = sh.analyze(f, g, L)
    out.append(upper(f"analyze(synthesize(c)) = c, L={L}", float(np.max(np.abs(back.coeffs - c.coeffs)) / np.max(np.abs(c.coeffs))), tol))
    l2 = sh.integrate(f**2, g)
    out.append(upper("Parseval relative error", abs(l2 / float(c.coeffs @ c.coeffs) - 1.0), tol))
    gg = sh.make_grid(gram_L)
    n = sh.n_coeffs(gram_L)
    Y = np.empty((n, gg.weights.size))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        Y[i] = sh.synthesize(sh.HarmonicCoeffs(gram_L, False, e), gg).reshape(-1)
    G = (Y * gg.weights) @ Y.T
    out.append(upper(f"Gram matrix - I, l<={gram_L}", float(np.max(np.abs(G - np.eye(n)))), gram_tol))
    return out


# ---------------------------------------------------------------------------
# appendix oracles


def fraclap_suite(conv_points=(0.0, 0.5, 2.0), conv_tol=5e-2, phi_tol=1e-6, decay_radii=(5.0, 10.0, 20.0, 40.0)):
    out = []
    gamma3 = constants(3).gamma_n
    logf = lambda y: -0.5 * np.log(np.sum(y * y, axis=-1))
    worst = 0.0
    for r in np.linspace(1.0, 10.0, 10):
        x = np.array([r, 0.0, 0.0]) / math.sqrt(1.0) if r < 5 else np.array([r, r, 0.0]) / math.sqrt(2.0)
        phi = float(fl.fundamental_solution(3, x))
        lap = float(fl.classical_laplacian(logf, x)) / gamma3
        worst = max(worst, abs(lap / phi - 1.0))
    out.append(upper("Phi = (1/gamma3)(-Delta) log(1/|x|) at 10 radii", worst, phi_tol))

    bp = fl.bump_potential()
    for r in conv_points:
        x = np.array([r, 0.0, 0.0])
        val = fl.half_laplacian(bp, x, tol=1e-6, atol=1e-8)
        ref = float(fl.bump(r))
        err = abs(val - ref) / ref if ref > 0 else abs(val)
        out.append(upper(f"(-Delta)^(1/2)(Phi*g) = g at |x|={r}", err, conv_tol, detail=f"value={val:.8g} g={ref:.8g}"))

    gauss = fl.gaussian()
    for r in (0.0, 1.0):
        val = fl.half_laplacian(gauss, np.array([r, 0.0, 0.0]), tol=1e-8)
        ref = fl.gaussian_half_laplacian_fourier(r)
        out.append(upper(f"Gaussian half-Laplacian vs Fourier at |x|={r}", abs(val / ref - 1.0), 1e-3))

    for s in (0.5, 1.5):
        rep = fl.schwartz_decay_check(gauss, s, decay_radii)
        out.append(upper(f"Gaussian decay s={s}: max successive ratio of |x|^(3+2s)|(-Delta)^s phi|", max(rep.ratios), 1.5, detail=f"weighted={[f'{v:.4g}' for v in rep.weighted]}"))
    return out


def chain_consistency(chain, rng, n_points=20, h=1e-3):
    """Richardson central difference of v_j in x1 against v_(j-1)."""
    d = rng.standard_normal((n_points, 3))
    x = d / np.linalg.norm(d, axis=1)[:, None] * rng.uniform(0.3, 3.0, n_points)[:, None]
    e1 = np.array([1.0, 0.0, 0.0])
    D = lambda s: (chain.values(x + s * e1) - chain.values(x - s * e1)) / (2.0 * s)
    fd = (4.0 * D(0.5 * h) - D(h)) / 3.0
    v = chain.values(x)
    return float(np.max(np.abs(fd[1:] - v[:-1]) / np.maximum(1.0, np.abs(v[:-1]))))


def lemma22_suite(seed=0, k=9, n_plateau=100, n_fd=20, plateau_tol=1e-7, fd_tol=1e-3, radii=(2.0, 4.0, 8.0)):
    rng = np.random.default_rng(seed)
    chain = lk.build_chain(k)
    chi = lk.Cutoff()
    half = n_plateau // 2
    d_out = rng.standard_normal((half, 3))
    d_out /= np.linalg.norm(d_out, axis=1)[:, None]
    x_out = d_out * rng.uniform(1.0, 10.0, half)[:, None]
    d_in = rng.standard_normal((n_plateau - half, 3))
    d_in /= np.linalg.norm(d_in, axis=1)[:, None]
    x_in = d_in * rng.uniform(0.0, 0.5, n_plateau - half)[:, None]
    # full Leibniz sums, no plateau short cut
    e_out = np.max(np.abs(lk.u0_lemma22(chain, chi, x_out, shortcut=False) + np.log(np.linalg.norm(x_out, axis=1))))
    e_in = np.max(np.abs(lk.u0_lemma22(chain, chi, x_in, shortcut=False)))
    out = [
        upper("u0 = log(1/|x|) for |x| >= 1 (max abs error)", e_out, plateau_tol),
        upper("u0 = 0 for |x| <= 1/2 (max abs error)", e_in, plateau_tol),
        upper("chain consistency d/dx1 v_j = v_(j-1) (max relative error)", chain_consistency(chain, rng), 10 * chain.quad_tol),
    ]
    d = rng.standard_normal((n_fd, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    xs = d * rng.uniform(0.55, 0.95, n_fd)[:, None]
    worst = 0.0
    for x in xs:
        a = lk.u0_lemma22(chain, chi, x)
        b = lk.leibniz_fd_oracle(k, chi, x)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-12))
    out.append(upper(f"Leibniz vs finite differences, {n_fd} annulus points (relative)", worst, fd_tol))
    rep = lk.decay_spotcheck(chain, chi, list(radii))
    out.append(upper("decay spot-check: max successive ratio of |x|^(2n+k)|(-Delta)^(3/2)u0|", max(rep.ratios) if rep.ratios else 0.0, 2.0, detail=f"weighted={[f'{v:.4g}' for v in rep.weighted]} inconclusive={rep.inconclusive}"))
    return out


def branson_suite(seed=0, L=8, radii=(0.0, 0.5, 1.0, 1.5, 2.5), tol=1e-2):
    """Spectral transport of a random zonal v against the singular-integral oracle."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(L + 1) / (1.0 + np.arange(L + 1)) ** 2
    v = sh.HarmonicCoeffs(L, True, c)
    t = multiplier_table(3, L)
    vinf = float(sh.evaluate_zonal(v, 1.0))
    f = fl.PointEvaluable(lambda y: sh.evaluate(v, conformal.stereo_inv(y)), decay_hint=2.0, f_infinity=vinf, radial=True)
    g = fl.minus_laplacian(f, decay_hint=4.0)
    dirs = fibonacci_directions(len(radii))
    out = []
    for r, d in zip(radii, dirs):
        x = r * d
        rhs = float(conformal.branson_transport(v, t, x[None, :])[0])
        lhs = fl.half_laplacian(g, x, tol=1e-5)
        out.append(upper(f"Branson transport vs oracle at |x|={r}", abs(lhs - rhs) / abs(rhs), tol, detail=f"oracle={lhs:.10g} spectral={rhs:.10g}"))
    return out
