"""Problem data for (-Delta)^{3/2} u = +-2 e^{3u} on R^3 with prescribed volume and asymptotics.

Given the curvature sign, the volume V and a coercive polynomial P of degree
at most n - 1, the solution is sought as ``u = -P + alpha u0 + w + c_w`` where
``alpha = +-2V/|S^n|``.  With the default provider ``u0 = w0 / 2`` the curvature
of u0 is ``phi = ((n-1)!/2) e^{n w0}``, whose sphere-side pullback is the
constant ``(n-1)!/2``.  K is ``sign(alpha) (n-1)! exp(-nP + n alpha u0)``.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import conformal
from . import s3harmonics as sh
from .specialfun import constants

LOG_TINY = math.log(np.finfo(np.float64).tiny)
LOG_HUGE = math.log(np.finfo(np.float64).max)


class InvalidPolynomial(ValueError):
    """P fails the degree bound or cannot be certified coercive."""

    def __init__(self, msg, direction=None):
        super().__init__(msg)
        self.direction = direction


class InadmissibleVolume(ValueError):
    pass


class HypothesisViolation(ValueError):
    pass


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class PolynomialR3:
    monomials: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, c in dict(self.monomials).items():
            a, b, d = (int(e) for e in key)
            if min(a, b, d) < 0:
                raise ValueError(f"negative exponent in monomial {key}")
            if c != 0.0:
                clean[(a, b, d)] = clean.get((a, b, d), 0.0) + float(c)
        object.__setattr__(self, "monomials", clean)

    @classmethod
    def parse(cls, text):
        """Rows ``a b c coeff`` separated by newlines or ';'; '#' starts a comment."""
        mono = {}
        for lineno, raw in enumerate(re.split(r"[;\n]", text), 1):
            row = raw.split("#", 1)[0].strip()
            if not row:
                continue
            parts = row.split()
            if len(parts) != 4:
                raise ValueError(f"monomial row {lineno}: expected 'a b c coeff', got {raw.strip()!r}")
            try:
                key = tuple(int(p) for p in parts[:3])
                coeff = float(parts[3])
            except ValueError as exc:
                raise ValueError(f"monomial row {lineno}: {exc}") from None
            mono[key] = mono.get(key, 0.0) + coeff
        return cls(mono)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.parse(fh.read())

    @classmethod
    def norm_squared(cls, scale=1.0):
        return cls({(2, 0, 0): scale, (0, 2, 0): scale, (0, 0, 2): scale})

    def to_text(self):
        return "\n".join(f"{a} {b} {c} {v!r}" for (a, b, c), v in sorted(self.monomials.items())) + "\n"

    @property
    def degree(self):
        return max((sum(k) for k in self.monomials), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape[:-1])
        for (a, b, c), v in self.monomials.items():
            out = out + v * x[..., 0] ** a * x[..., 1] ** b * x[..., 2] ** c
        return out

    def homogeneous_part(self, d):
        return {k: v for k, v in self.monomials.items() if sum(k) == d}

    def quadratic_matrix(self):
        """Symmetric A with x^T A x the degree-2 part."""
        A = np.zeros((3, 3))
        for (a, b, c), v in self.homogeneous_part(2).items():
            e = [i for i, p in enumerate((a, b, c)) for _ in range(p)]
            i, j = e
            if i == j:
                A[i, i] += v
            else:
                A[i, j] += 0.5 * v
                A[j, i] += 0.5 * v
        return A

    def is_radial(self):
        """True when P = q(|x|^2) for a polynomial q (checked coefficient by coefficient)."""
        for d in range(self.degree + 1):
            part = self.homogeneous_part(d)
            if d % 2:
                if part:
                    return False
                continue
            j = d // 2
            q = part.get((d, 0, 0), 0.0)
            # (x^2 + y^2 + z^2)^j = sum j!/(i1! i2! i3!) x^{2 i1} y^{2 i2} z^{2 i3}
            expected = {}
            for i1 in range(j + 1):
                for i2 in range(j + 1 - i1):
                    i3 = j - i1 - i2
                    mult = math.factorial(j) // (math.factorial(i1) * math.factorial(i2) * math.factorial(i3))
                    expected[(2 * i1, 2 * i2, 2 * i3)] = q * mult
            keys = set(expected) | set(part)
            if any(not math.isclose(part.get(k, 0.0), expected.get(k, 0.0), rel_tol=1e-14, abs_tol=1e-300) for k in keys):
                return False
        return True


@dataclass(frozen=True)
class PolynomialReport:
    valid: bool
    degree: int
    leading_eigenvalues: tuple
    sampled_min: float
    sampled_min_direction: tuple
    sample_radius: float
    message: str


def fibonacci_directions(m):
    """m nearly uniform unit vectors (deterministic)."""
    i = np.arange(m) + 0.5
    z = 1.0 - 2.0 * i / m
    t = np.pi * (1.0 + 5**0.5) * i
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(t), s * np.sin(t), z], axis=1)


def validate_P(P, n=3, n_directions=10_000, radius=1e3):
    """Certify P(x) -> infinity by positive definiteness of the leading quadratic form.

    Only degree-2 leading forms can be certified (odd or lower degree is never
    coercive on R^3 for degree <= 2).  Raises :class:`InvalidPolynomial`.
    """
    if P.degree > n - 1:
        raise InvalidPolynomial(f"degree {P.degree} exceeds n - 1 = {n - 1}")
    dirs = fibonacci_directions(n_directions)
    vals = P(radius * dirs)
    imin = int(np.argmin(vals))
    if P.degree < 2:
        d = dirs[imin]
        raise InvalidPolynomial(f"degree {P.degree} polynomial does not tend to infinity (direction {tuple(round(float(v), 6) for v in d)})", tuple(d))
    A = P.quadratic_matrix()
    ev, vec = np.linalg.eigh(A)
    if ev[0] <= 0.0:
        d = vec[:, 0]
        kind = "indefinite" if ev[0] < 0 else "only semidefinite"
        raise InvalidPolynomial(
            f"leading quadratic form is {kind} (eigenvalues {tuple(float(e) for e in ev)}); P does not tend to infinity along {tuple(round(float(v), 6) for v in d)}",
            tuple(d),
        )
    return PolynomialReport(
        True, P.degree, tuple(float(e) for e in ev), float(vals[imin]), tuple(float(v) for v in dirs[imin]), radius, "leading form positive definite"
    )


# ---------------------------------------------------------------------------
# volume, alpha


def alpha_of(V, sign, n=3):
    area = constants(n).sphere_area
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    if not V > 0:
        raise InadmissibleVolume(f"V must be positive, got {V!r}")
    if sign == 1 and not V < area:
        raise InadmissibleVolume(f"positive curvature needs V in (0, |S^{n}|) = (0, {area:.12g}); got V = {V!r}")
    return sign * 2.0 * V / area


# ---------------------------------------------------------------------------
# u0 providers


@dataclass
class U0Provider:
    kind: str = "half_w0"
    k: int = 9
    chi: object = None
    quad_tol: float = 1e-8
    _chain: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("half_w0", "lemma22"):
            raise ValueError(f"unknown u0 provider {self.kind!r}")
        if self.kind == "lemma22":
            if int(self.k) != self.k or self.k < 1:
                raise ValueError(f"k must be a positive integer, got {self.k!r}")
            if self.chi is None:
                from .lemma22kit import Cutoff

                self.chi = Cutoff()

    @property
    def chain(self):
        if self._chain is None:
            from .lemma22kit import build_chain

            self._chain = build_chain(self.k, self.quad_tol)
        return self._chain


def u0_eval(p, x):
    if p.kind == "half_w0":
        return 0.5 * conformal.w0(x)
    from .lemma22kit import u0_lemma22

    return u0_lemma22(p.chain, p.chi, x)


# ---------------------------------------------------------------------------
# problem assembly


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    sign: int
    V: float
    P: PolynomialR3
    u0: U0Provider
    alpha: float
    L: int
    zonal: bool
    grid: object
    polynomial_report: PolynomialReport

    @property
    def consts(self):
        return constants(self.n)


def make_problem(sign, V, P, n=3, u0="half_w0", L=64, zonal="auto", n_psi=None):
    if n != 3:
        constants(n)
        raise NotImplementedError("sphere transforms are implemented for n = 3 only")
    if isinstance(P, str):
        P = PolynomialR3.parse(P)
    report = validate_P(P, n)
    alpha = alpha_of(V, sign, n)
    provider = u0 if isinstance(u0, U0Provider) else U0Provider(u0)
    if zonal == "auto":
        zonal = P.is_radial()
    elif zonal and not P.is_radial():
        raise ValueError("zonal=True needs a radial P (P = q(|x|^2))")
    grid = sh.make_grid(L, zonal=bool(zonal), n_psi=n_psi)
    return ProblemSpec(n, sign, float(V), P, provider, alpha, int(L), bool(zonal), grid, report)


@dataclass(frozen=True, eq=False)
class SphereFields:
    """Sphere-side data of the functional, all on ``grid``.

    ``log_k`` is log(|K o pi| e^{-n w0 o pi}), -inf where the value underflows.
    """

    grid: object
    n: int
    alpha: float
    L: int
    zonal: bool
    log_k: np.ndarray
    phi1: np.ndarray
    phi1_hat: object
    phi1_integral: float
    gamma_n: float
    near_pole_max: float
    delta: float = math.nan
    delta_power: float = math.nan

    @property
    def k_weighted(self):
        return np.exp(self.log_k)


def log_abs_K(spec, x):
    """log|K(x)| = log (n-1)! - n P(x) + n alpha u0(x)."""
    c = spec.consts
    return math.log(c.factorial_nm1) - spec.n * spec.P(x) + spec.n * spec.alpha * u0_eval(spec.u0, x)


def log_k_on_grid(spec, grid, clip=True):
    n = spec.n
    c = spec.consts
    if spec.u0.kind != "half_w0":
        raise NotImplementedError("only the half_w0 provider is wired into the solve path")
    xs = conformal.grid_euclidean_points(grid)
    w0s = conformal.w0_on_sphere(grid.xi4)
    expo = math.log(c.factorial_nm1) - n * spec.P(xs) + n * (0.5 * spec.alpha - 1.0) * w0s
    if np.any(expo > LOG_HUGE):
        i = np.unravel_index(int(np.argmax(expo)), expo.shape)
        raise HypothesisViolation(f"K e^(-n w0) overflows at grid node {i} (x = {xs[i]}); P is not coercive enough for this grid")
    return np.where(expo < LOG_TINY, -np.inf, expo) if clip else expo


def check_hypotheses(spec, radii=(1.0, 10.0, 100.0, 1000.0), n_directions=64, power=None):
    """alpha K > 0 everywhere sampled; for alpha < 0 find delta with |K| >= delta exp(-delta |x|^p).

    p defaults to n - 1/4, which lies strictly between deg P and n.  Returns
    (delta, p), or (nan, nan) for alpha > 0.
    """
    dirs = fibonacci_directions(n_directions)
    pts = np.concatenate([r * dirs for r in radii])
    lk = log_abs_K(spec, pts)
    # K = sign(alpha) |K|, so alpha K > 0 reduces to |K| being a finite positive number
    bad = ~np.isfinite(lk)
    if spec.alpha == 0 or np.any(bad):
        where = pts[np.argmax(bad)] if np.any(bad) else None
        raise HypothesisViolation(f"alpha K > 0 fails (alpha = {spec.alpha}, first bad point {where})")
    if spec.alpha > 0:
        return math.nan, math.nan
    p = spec.n - 0.25 if power is None else float(power)
    if not spec.P.degree < p < spec.n:
        raise HypothesisViolation(f"need deg P < p < n, got p = {p}")
    r = np.linalg.norm(pts, axis=1)
    for delta in np.logspace(-8, 2, 401):
        if np.all(math.log(delta) - delta * r**p <= lk):
            return float(delta), p
    raise HypothesisViolation("no delta found with |K| >= delta exp(-delta |x|^p) on the radius sweep")


def assemble_sphere_fields(spec, grid=None):
    grid = spec.grid if grid is None else grid
    c = spec.consts
    log_k = log_k_on_grid(spec, grid)
    delta, p = check_hypotheses(spec)
    phi1 = np.full(grid.shape, c.factorial_nm1 / 2.0)
    phi1_hat = sh.analyze(phi1, grid, spec.L, zonal=spec.zonal)
    phi1_integral = sh.integrate(phi1, grid)
    near = float(np.max(np.exp(log_k[0])))
    return SphereFields(grid, spec.n, spec.alpha, spec.L, spec.zonal, log_k, phi1, phi1_hat, phi1_integral, c.gamma_n, near, delta, p)
