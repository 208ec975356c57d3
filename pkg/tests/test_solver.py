import dataclasses
import math

import numpy as np
import pytest

from qflow import conformal as cf
from qflow import problem as pb
from qflow import s3harmonics as sh
from qflow import solver as so
from qflow.paneitz import multiplier_table

RADIAL = "2 0 0 1; 0 2 0 1; 0 0 2 1"
SQRT_AREA = math.sqrt(2 * math.pi**2)


@pytest.fixture(scope="module")
def small():
    spec = pb.make_problem(1, math.pi**2, RADIAL, L=16)
    return spec, pb.assemble_sphere_fields(spec)


@pytest.fixture(scope="module")
def small_full():
    spec = pb.make_problem(-1, 3.0, "2 0 0 1; 0 2 0 2; 0 0 2 1; 1 0 0 0.5", L=6)
    return spec, pb.assemble_sphere_fields(spec)


def _random_w(rng, spec, scale=0.3):
    c = rng.standard_normal(sh.n_coeffs(spec.L, spec.zonal)) * scale
    w = sh.HarmonicCoeffs(spec.L, spec.zonal, c)
    c[w.degrees == 0] = 0.0
    return w.with_coeffs(c / (1.0 + w.degrees) ** 2)


def test_energy_at_zero(small):
    spec, f = small
    J0 = so.energy(sh.HarmonicCoeffs.zeros(16, True), f)
    M = sh.integrate(f.k_weighted, f.grid)
    assert J0 == pytest.approx(-(f.gamma_n / 3) * math.log(M), rel=1e-13)


@pytest.mark.parametrize("c", [1.0, -1.0, 0.1, -0.1])
def test_shift_invariance(small, small_full, c):
    rng = np.random.default_rng(0)
    for spec, f in (small, small_full):
        w = _random_w(rng, spec)
        shift = sh.HarmonicCoeffs.unit(spec.L, 0, zonal=spec.zonal) * (c * SQRT_AREA)
        a, b = so.energy(w, f), so.energy(w + shift, f)
        assert b == pytest.approx(a, rel=1e-10, abs=1e-10)


def test_gradient_central_differences(small_full):
    spec, f = small_full
    rng = np.random.default_rng(1)
    w = _random_w(rng, spec)
    g = so.energy_gradient(w, f)
    eps = 1e-5
    for _ in range(20):
        e = rng.standard_normal(g.coeffs.size)
        e[w.degrees == 0] = 0.0
        e /= np.linalg.norm(e)
        ev = w.with_coeffs(e)
        fd = (so.energy(w + ev * eps, f) - so.energy(w - ev * eps, f)) / (2 * eps)
        exact = float(g.coeffs @ e)
        assert abs(fd - exact) < 1e-6 * (1 + np.linalg.norm(g.coeffs))


def test_taylor_along_y1(small):
    spec, f = small
    zero = sh.HarmonicCoeffs.zeros(16, True)
    g0 = so.energy_gradient(zero, f).coeffs[1]
    y1 = sh.HarmonicCoeffs.unit(16, 1, zonal=True)
    rests = []
    for eps in (1e-2, 1e-3, 1e-4):
        dJ = so.energy(y1 * eps, f) - so.energy(zero, f)
        rests.append((dJ - eps * g0) / eps**2)
    # second-order coefficient settles: the 1/2 * 6 eps^2 term plus the curvature of the log mass
    assert abs(rests[1] - rests[2]) < 1e-2 * max(1.0, abs(rests[2]))
    quad = so.energy_difference(zero, y1 * 1e-4, f) - 1e-4 * g0
    assert quad / 1e-8 == pytest.approx(rests[2], rel=1e-3)


def test_density_normalization(small):
    spec, f = small
    w = _random_w(np.random.default_rng(2), spec)
    g = so.energy_gradient(w, f, project=False)
    t = multiplier_table(3, 16)
    _, rho = so._density(w, f)
    assert f.grid.weights @ rho == pytest.approx(1.0, rel=1e-13)
    # l = 0 entry before projection: alpha phi1_hat_0 - alpha gamma / sqrt|S^3|
    expect = f.alpha * f.phi1_hat.coeffs[0] - f.alpha * f.gamma_n / SQRT_AREA
    assert g.coeffs[0] == pytest.approx(expect, abs=1e-12)
    assert so.energy_gradient(w, f).coeffs[0] == 0.0
    assert t.mu[1] == 6


def test_energy_difference_matches(small_full):
    spec, f = small_full
    rng = np.random.default_rng(3)
    w, d = _random_w(rng, spec), _random_w(rng, spec, 0.05)
    assert so.energy_difference(w, d, f) == pytest.approx(so.energy(w + d, f) - so.energy(w, f), rel=1e-9, abs=1e-13)


def test_mass_error():
    spec = pb.make_problem(1, 1.0, RADIAL, L=4)
    f = pb.assemble_sphere_fields(spec)
    dead = dataclasses.replace(f, log_k=np.full(f.log_k.shape, -np.inf))
    with pytest.raises(so.MassError):
        so.energy(sh.HarmonicCoeffs.zeros(4, True), dead)


def test_c_w_identities(small):
    spec, f = small
    w = _random_w(np.random.default_rng(4), spec)
    c1 = so.c_of_w(w, spec, f)
    doubled = dataclasses.replace(f, log_k=f.log_k + math.log(2.0))
    assert so.c_of_w(w, spec, doubled) == pytest.approx(c1 - math.log(2) / 3, abs=1e-13)
    # with c_w applied the transported total curvature is alpha gamma
    total = math.exp(so.log_mass(w, f) + 3 * c1)
    assert total == pytest.approx(spec.alpha * f.gamma_n, rel=1e-13)


def test_reconstruct_u_composition(small):
    spec, f = small
    x = np.array([[0.3, -1.2, 2.0], [5.0, 0.0, 0.0]])
    zero = sh.HarmonicCoeffs.zeros(16, True)
    np.testing.assert_allclose(so.reconstruct_u(spec, zero, 0.0, x), -spec.P(x) + 0.5 * spec.alpha * cf.w0(x), rtol=1e-14)
    w = _random_w(np.random.default_rng(5), spec)
    south = float(sh.evaluate(w, np.array([0, 0, 0, -1.0])))
    assert float(so.reconstruct_u(spec, w, 0.25, np.zeros(3))) == pytest.approx(0.5 * math.log(2) + south + 0.25, rel=1e-13)


def test_minimize_positive_monotone(positive_solve):
    spec, f, state = positive_solve
    assert state.converged and state.grad_norm < 1e-9
    assert np.all(np.diff(state.J_history) <= 0.0)
    assert state.w.coeffs[0] == 0.0 and state.gradient.coeffs[0] == 0.0
    for _, step, dJ, bound in state.armijo_log:
        assert dJ <= bound
    assert state.J == pytest.approx(state.J_history[-1], abs=1e-10)


def test_gd_agrees_with_lbfgs():
    spec = pb.make_problem(-1, 3.0, RADIAL, L=16)
    f = pb.assemble_sphere_fields(spec)
    a = so.minimize(spec, f, method="lbfgs")
    b = so.minimize(spec, f, method="gd", max_iter=5000)
    assert a.converged and b.converged
    assert b.J == pytest.approx(a.J, abs=1e-9)
    np.testing.assert_allclose(b.w.coeffs, a.w.coeffs, atol=1e-7)


def test_alpha_near_two_still_converges():
    V = 1.99 * math.pi**2
    spec = pb.make_problem(1, V, RADIAL, L=32)
    state = so.minimize(spec)
    assert spec.alpha == pytest.approx(1.99)
    assert state.converged
    assert so.coercivity_margin(spec.alpha) == pytest.approx(0.0025, rel=1e-10)


def test_iteration_cap_flags_partial():
    spec = pb.make_problem(1, 1.0, RADIAL, L=16)
    state = so.minimize(spec, max_iter=1)
    assert state.partial and not state.converged and state.n_iter == 1


def test_jensen_lower_bound():
    spec = pb.make_problem(-1, 4 * math.pi**2, RADIAL, L=16)
    f = pb.assemble_sphere_fields(spec)
    bound = so.jensen_bound(spec, f.grid)
    rng = np.random.default_rng(6)
    for _ in range(10):
        assert so.log_mass(_random_w(rng, spec, 1.0), f) >= bound


def test_coercivity_identity():
    for a in np.linspace(-9.9, 1.9, 50):
        assert so.coercivity_margin(a) == pytest.approx((2 - a) / 4, abs=1e-12)


def test_verify_positive_report(positive_solve, tmp_path):
    spec, f, state = positive_solve
    rep = so.verify_solution(spec, state, f)
    assert rep.volume_rel_err < 1e-6 and rep.el_residual_l2 < 1e-6
    assert rep.asymptotic_spread < 1e-2
    (_, lhs, rhs, rel), = rep.pointwise_residuals
    assert rel < 1e-2
    assert rep.to_text() == so.verify_solution(spec, state, f).to_text()
    rep.write_csv(tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "r,u,asymptotic_remainder" and len(rows) == 103
