"""Minimisation of the sphere-side functional and reconstruction of u on R^3.

    J(w) = 1/2 sum mu_l w_l^2 + alpha <phi1, w> - (alpha gamma / n) log M(w),
    M(w) = int |K o pi| e^{n w} e^{-n w0 o pi} dV0.

The l = 0 coefficient is pinned to zero (J is invariant under w -> w + c).
Line searches use the increment

    J(w + d) - J(w) = sum mu (w d + d^2/2) + alpha <phi1, d> - (alpha gamma / n) log1p(int rho expm1(n d))

with rho the normalised density at w, which stays accurate when the
increment is far below the rounding level of J itself.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import conformal, kernels
from . import fraclap as fl
from . import s3harmonics as sh
from .paneitz import multiplier_table
from .problem import assemble_sphere_fields, log_k_on_grid, u0_eval


class MassError(FloatingPointError):
    pass


class LineSearchError(RuntimeError):
    def __init__(self, msg, state):
        super().__init__(msg)
        self.state = state


@dataclass(frozen=True, eq=False)
class EnergyState:
    w: object
    J: float
    gradient: object
    log_mass: float
    grad_norm: float = math.nan
    J_history: np.ndarray = None
    grad_history: np.ndarray = None
    n_iter: int = 0
    converged: bool = False
    partial: bool = False
    method: str = "lbfgs"
    armijo_log: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# energy


def _density(w, fields):
    """log M(w) and the normalised density rho at the grid nodes."""
    nw = fields.n * sh.synthesize(w, fields.grid).reshape(-1)
    lm, rho = kernels.log_mass(fields.log_k.reshape(-1), nw, fields.grid.weights)
    if not np.isfinite(lm):
        raise MassError("weighted K field vanishes on every node; log of zero mass")
    return lm, rho


def log_mass(w, fields):
    return _density(w, fields)[0]


def _linear(w, fields):
    return fields.alpha * fields.phi1_hat.dot(w)


def energy(w, fields, t=None):
    t = multiplier_table(fields.n, w.L) if t is None else t
    lm = log_mass(w, fields)
    quad = 0.5 * float(np.sum(t.mu[w.degrees] * w.coeffs**2))
    return quad + _linear(w, fields) - fields.alpha * fields.gamma_n / fields.n * lm


def _gradient_from_rho(w, rho, fields, t):
    rho_hat = sh.analyze(rho.reshape(fields.grid.shape), fields.grid, w.L, zonal=w.zonal)
    g = t.mu[w.degrees] * w.coeffs + fields.alpha * fields.phi1_hat.coeffs - fields.alpha * fields.gamma_n * rho_hat.coeffs
    return g


def energy_gradient(w, fields, t=None, project=True):
    t = multiplier_table(fields.n, w.L) if t is None else t
    _, rho = _density(w, fields)
    g = _gradient_from_rho(w, rho, fields, t)
    if project:
        g[w.degrees == 0] = 0.0
    return w.with_coeffs(g)


def energy_difference(w, d, fields, t=None, rho=None):
    """J(w + d) - J(w) without forming either value."""
    t = multiplier_table(fields.n, w.L) if t is None else t
    if rho is None:
        _, rho = _density(w, fields)
    mu = t.mu[w.degrees]
    quad = float(np.sum(mu * (w.coeffs * d.coeffs + 0.5 * d.coeffs**2)))
    nd = fields.n * sh.synthesize(d, fields.grid).reshape(-1)
    ratio_m1 = float(fields.grid.weights @ (rho * np.expm1(nd)))
    if ratio_m1 <= -1.0:
        raise MassError("mass ratio underflow in energy increment")
    return quad + _linear(d, fields) - fields.alpha * fields.gamma_n / fields.n * math.log1p(ratio_m1)


def preconditioner(t, w):
    d = 1.0 / np.maximum(t.mu[w.degrees], 1.0)
    d[w.degrees == 0] = 0.0
    return d


def preconditioned_norm(g, D):
    """sqrt(g^T D g), the dual norm of the gradient under the preconditioner."""
    return float(np.sqrt(np.sum(D * g * g)))


# ---------------------------------------------------------------------------
# minimisation


def minimize(spec, fields=None, method="lbfgs", tol_g=1e-9, tol_J=1e-12, max_iter=2000, memory=10, c1=1e-4, shrink=0.5, w_init=None):
    """Preconditioned L-BFGS (or gradient descent) with Armijo backtracking from w = 0."""
    if method not in ("lbfgs", "gd"):
        raise ValueError(f"unknown method {method!r}")
    fields = assemble_sphere_fields(spec) if fields is None else fields
    t = multiplier_table(spec.n, spec.L)
    w = sh.HarmonicCoeffs.zeros(spec.L, spec.zonal) if w_init is None else w_init
    pin = w.degrees == 0
    if np.any(w.coeffs[pin] != 0.0):
        w = w.with_coeffs(np.where(pin, 0.0, w.coeffs))
    D = preconditioner(t, w)

    J = energy(w, fields, t)
    lm, rho = _density(w, fields)
    g = _gradient_from_rho(w, rho, fields, t)
    g[pin] = 0.0
    J_hist, g_hist, log = [J], [preconditioned_norm(g, D)], []
    S, Y = [], []
    last_dJ = math.inf
    step0 = 1.0
    it = 0
    converged = False
    while True:
        gn = g_hist[-1]
        if gn < tol_g and abs(last_dJ) <= tol_J * max(1.0, abs(J_hist[-1])):
            converged = True
            break
        if it >= max_iter:
            break
        if method == "lbfgs" and S:
            p = -_two_loop(g, S, Y, D)
        else:
            p = -D * g
        slope = float(g @ p)
        if not slope < 0.0:
            S, Y = [], []
            p = -D * g
            slope = float(g @ p)
        step = 1.0 if method == "lbfgs" else min(1.0, 2.0 * step0)
        while True:
            d = w.with_coeffs(step * p)
            dJ = energy_difference(w, d, fields, t, rho)
            if dJ <= c1 * step * slope and dJ < 0.0:
                break
            step *= shrink
            if step < 1e-20:
                state = EnergyState(w, J_hist[-1], w.with_coeffs(g), lm, gn, np.array(J_hist), np.array(g_hist), it, False, True, method, log)
                if gn < tol_g:
                    return _finish(state, fields, t, converged=True)
                raise LineSearchError(f"no decrease at step {step:.1e} (iteration {it}, grad norm {gn:.3e}, slope {slope:.3e})", state)
        log.append((it, step, dJ, c1 * step * slope))
        step0 = step
        w_new = w.with_coeffs(w.coeffs + step * p)
        lm, rho = _density(w_new, fields)
        g_new = _gradient_from_rho(w_new, rho, fields, t)
        g_new[pin] = 0.0
        s_vec, y_vec = step * p, g_new - g
        if float(s_vec @ y_vec) > 1e-16 * float(np.sqrt((s_vec @ s_vec) * (y_vec @ y_vec))):
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        w, g = w_new, g_new
        last_dJ = dJ
        J_hist.append(J_hist[-1] + dJ)
        g_hist.append(preconditioned_norm(g, D))
        it += 1
    state = EnergyState(w, J_hist[-1], w.with_coeffs(g), lm, g_hist[-1], np.array(J_hist), np.array(g_hist), it, converged, not converged, method, log)
    return _finish(state, fields, t, converged)


def _finish(state, fields, t, converged):
    # J from scratch at the end (history is J0 plus exact increments)
    J = energy(state.w, fields, t)
    return EnergyState(
        state.w, J, state.gradient, state.log_mass, state.grad_norm, state.J_history, state.grad_history, state.n_iter, converged, not converged, state.method, state.armijo_log
    )


def _two_loop(g, S, Y, D):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        r = 1.0 / float(y @ s)
        a = r * float(s @ q)
        alphas.append((a, r))
        q -= a * y
    s, y = S[-1], Y[-1]
    gamma = float(s @ y) / float(y @ (D * y))
    z = gamma * D * q
    for (a, r), s, y in zip(reversed(alphas), S, Y):
        b = r * float(y @ z)
        z += (a - b) * s
    return z


# ---------------------------------------------------------------------------
# reconstruction


def c_of_w(w, spec, fields):
    """c_w = -(1/n) (log int K e^{nw} dx - log(alpha gamma)); K and alpha share their sign."""
    lm = log_mass(w, fields)
    arg = spec.alpha * fields.gamma_n
    sign_K = math.copysign(1.0, spec.alpha)
    if sign_K * arg <= 0:
        raise ValueError("int K e^{nw} dx and alpha gamma have opposite signs; the sign hypothesis alpha K > 0 is violated")
    return -(lm - math.log(abs(arg))) / spec.n


def w_on_R3(w, x):
    return sh.evaluate(w, conformal.stereo_inv(x))


def reconstruct_u(spec, w, c_w, x):
    x = np.asarray(x, dtype=np.float64)
    return -spec.P(x) + spec.alpha * u0_eval(spec.u0, x) + w_on_R3(w, x) + c_w


def solution_evaluable(spec, w, c_w):
    return fl.PointEvaluable(lambda y: reconstruct_u(spec, w, c_w, y), decay_hint=1.0, radial=spec.zonal)


# ---------------------------------------------------------------------------
# verification


@dataclass
class SolveReport:
    alpha: float
    c_w: float
    w_coeffs: object
    J_history: np.ndarray
    grad_norm_final: float
    volume_measured: float
    volume_target: float
    volume_rel_err: float
    el_residual_l2: float
    asymptotic_C: float
    asymptotic_dev: float
    asymptotic_spread: float
    pointwise_residuals: list
    converged: bool
    n_iter: int
    J_final: float
    coercivity_margin: float
    jensen_log_mass_bound: float
    log_mass: float
    near_pole_max: float
    delta: float
    delta_power: float
    radial_profile: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("w_coeffs", "radial_profile")}
        d["J_history"] = [float(v) for v in self.J_history]
        d["w_L"] = self.w_coeffs.L
        d["w_zonal"] = self.w_coeffs.zonal
        d["pointwise_residuals"] = [
            {"x": [float(c) for c in x], "lhs": float(a), "rhs": float(b), "rel_err": float(e)} for x, a, b, e in self.pointwise_residuals
        ]
        return _plain(d)

    def to_text(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,u,asymptotic_remainder\n")
            for r, u, rem in self.radial_profile:
                fh.write(f"{float(r)!r},{float(u)!r},{float(rem)!r}\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def coercivity_margin(alpha, n=3):
    """1/2 - alpha n gamma_n / (2 |S^n| n!), identically (2 - alpha)/4."""
    from .specialfun import constants

    c = constants(n)
    return 0.5 - alpha * n * c.gamma_n / (2.0 * c.sphere_area * c.factorial_n)


def el_residual(w, fields, t=None):
    """|| P w + alpha phi1_hat - alpha gamma rho_hat ||_{L^2}, l = 0 included."""
    t = multiplier_table(fields.n, w.L) if t is None else t
    _, rho = _density(w, fields)
    return float(np.linalg.norm(_gradient_from_rho(w, rho, fields, t)))


def jensen_bound(spec, grid):
    """Lower bound log M(w) >= log|S^n| + mean(log(|K o pi| e^{-n w0 o pi})) for mean-free w."""
    raw = log_k_on_grid(spec, grid, clip=False)
    return math.log(sh.S3_AREA) + sh.mean_value(raw, grid)


def measure_volume(spec, w, c_w, refine=2):
    """int e^{3u} dx on a refined sphere grid, u evaluated pointwise on R^3."""
    L = spec.L
    g = sh.make_grid(L, zonal=spec.zonal, n_psi=refine * (2 * L + 2)) if spec.zonal else sh.make_grid(refine * L, zonal=False)
    xs = conformal.grid_euclidean_points(g)
    u = reconstruct_u(spec, w, c_w, xs)
    log_integrand = spec.n * u - spec.n * conformal.w0_on_sphere(g.xi4)
    vals = np.exp(np.where(log_integrand < math.log(np.finfo(float).tiny), -np.inf, log_integrand))
    return conformal.sphere_integral_of_euclidean(vals, g)


def asymptotic_fit(spec, w, c_w, radii=None, n_directions=26):
    from .problem import fibonacci_directions

    radii = np.logspace(1.0, 3.0, 41) if radii is None else np.asarray(radii, dtype=np.float64)
    dirs = fibonacci_directions(n_directions)
    pts = radii[:, None, None] * dirs[None, :, :]
    rem = reconstruct_u(spec, w, c_w, pts) + spec.P(pts) + spec.alpha * np.log(radii)[:, None]
    C = float(np.mean(rem[-1]))
    return C, float(np.max(np.abs(rem - C))), float(np.max(rem) - np.min(rem)), radii, rem


def pointwise_residual(spec, w, c_w, x, tol=1e-3):
    """(lhs, rhs, rel) with lhs = (-Delta)^{1/2}(-Delta u)(x) by the singular-integral oracle."""
    u = solution_evaluable(spec, w, c_w)
    lap_inf = 2.0 * float(np.trace(spec.P.quadratic_matrix()))
    g = fl.minus_laplacian(u, f_infinity=lap_inf, decay_hint=2.0)
    lhs = fl.half_laplacian(g, np.asarray(x, dtype=np.float64), tol=tol)
    rhs = spec.sign * math.factorial(spec.n - 1) * math.exp(spec.n * float(reconstruct_u(spec, w, c_w, np.asarray(x, dtype=np.float64))))
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)


def verify_solution(spec, state, fields=None, pointwise=((0.0, 0.0, 0.0),), refine=2, oracle_tol=1e-3):
    fields = assemble_sphere_fields(spec) if fields is None else fields
    t = multiplier_table(spec.n, spec.L)
    w = state.w
    cw = c_of_w(w, spec, fields)
    vol = measure_volume(spec, w, cw, refine)
    C, dev, spread, radii, rem = asymptotic_fit(spec, w, cw)
    pw = []
    for x in pointwise:
        lhs, rhs, rel = pointwise_residual(spec, w, cw, x, oracle_tol)
        pw.append((tuple(float(c) for c in x), lhs, rhs, rel))
    r_prof = np.concatenate([[0.0], np.logspace(-2.0, 3.0, 101)])
    xp = np.stack([r_prof, 0 * r_prof, 0 * r_prof], axis=1)
    u_prof = reconstruct_u(spec, w, cw, xp)
    with np.errstate(divide="ignore"):
        rem_prof = u_prof + spec.P(xp) + spec.alpha * np.log(r_prof)
    rem_prof[0] = math.nan
    return SolveReport(
        alpha=spec.alpha,
        c_w=cw,
        w_coeffs=w,
        J_history=state.J_history,
        grad_norm_final=state.grad_norm,
        volume_measured=vol,
        volume_target=spec.V,
        volume_rel_err=abs(vol / spec.V - 1.0),
        el_residual_l2=el_residual(w, fields, t),
        asymptotic_C=C,
        asymptotic_dev=dev,
        asymptotic_spread=spread,
        pointwise_residuals=pw,
        converged=state.converged,
        n_iter=state.n_iter,
        J_final=state.J,
        coercivity_margin=coercivity_margin(spec.alpha, spec.n),
        jensen_log_mass_bound=jensen_bound(spec, fields.grid),
        log_mass=log_mass(w, fields),
        near_pole_max=fields.near_pole_max,
        delta=fields.delta,
        delta_power=fields.delta_power,
        radial_profile=np.stack([r_prof, u_prof, rem_prof], axis=1),
    )
