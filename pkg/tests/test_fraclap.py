import math

import numpy as np
import pytest

from qflow import conformal as cf
from qflow import fraclap as fl


@pytest.fixture(scope="module")
def potential():
    return fl.bump_potential()


def test_pv_constant():
    assert fl.C3 == pytest.approx(1 / math.pi**2, rel=1e-15)


def test_classical_laplacian_examples():
    logf = lambda y: -0.5 * np.log(np.sum(y * y, axis=-1))
    assert float(fl.classical_laplacian(logf, np.array([1.0, 0, 0]))) == pytest.approx(1.0, rel=1e-7)
    sq = lambda y: np.sum(y * y, axis=-1)
    assert float(fl.classical_laplacian(sq, np.array([0.3, -2.0, 1.0]))) == pytest.approx(-6.0, rel=1e-10)
    assert float(fl.classical_laplacian(cf.w0, np.zeros(3))) == pytest.approx(6.0, rel=1e-7)


def test_w0_three_halves_at_origin():
    f = fl.PointEvaluable(cf.w0, decay_hint=1.0, radial=True)
    val = fl.three_halves_laplacian(f, np.zeros(3), tol=1e-5)
    assert val == pytest.approx(16.0, rel=1e-2)


def test_constant_maps_to_zero():
    f = fl.PointEvaluable(lambda y: np.full(y.shape[:-1], 3.5), decay_hint=50.0, f_infinity=3.5)
    assert abs(fl.half_laplacian(f, np.array([0.2, 0.1, 0.0]))) < 1e-12


def test_fundamental_solution():
    assert float(fl.fundamental_solution(3, np.array([0, 1.0, 0]))) == pytest.approx(1 / (2 * math.pi**2), rel=1e-15)
    assert float(fl.fundamental_solution(5, np.array([2.0, 0, 0]))) == pytest.approx(1 / (32 * math.pi**3), rel=1e-15)
    with pytest.raises(ZeroDivisionError):
        fl.fundamental_solution(3, np.zeros(3))
    with pytest.raises(ValueError):
        fl.fundamental_solution(4, np.ones(3))
    logf = lambda y: -0.5 * np.log(np.sum(y * y, axis=-1))
    for r in np.geomspace(0.5, 20, 10):
        x = np.array([r, 0.0, 0.0])
        lap = float(fl.classical_laplacian(logf, x)) / (2 * math.pi**2)
        assert lap == pytest.approx(float(fl.fundamental_solution(3, x)), rel=1e-6)


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_gaussian_against_fourier(r):
    val = fl.half_laplacian(fl.gaussian(), np.array([r, 0.0, 0.0]), tol=1e-8)
    assert val == pytest.approx(fl.gaussian_half_laplacian_fourier(r), rel=1e-3)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling_covariance(lam):
    x = np.array([0.4, 0.3, 0.0])
    scaled = fl.PointEvaluable(lambda y: np.exp(-lam * lam * np.sum(y * y, axis=-1)), decay_hint=50.0, radial=True)
    lhs = fl.half_laplacian(scaled, x, tol=1e-8)
    rhs = lam * fl.half_laplacian(fl.gaussian(), lam * x, tol=1e-8)
    assert lhs == pytest.approx(rhs, rel=1e-3)


def test_translation_covariance():
    x0 = np.array([0.5, -0.25, 1.0])
    shifted = fl.PointEvaluable(lambda y: np.exp(-np.sum((y - x0) ** 2, axis=-1)), decay_hint=50.0)
    x = np.array([0.75, 0.0, 0.5])
    assert fl.half_laplacian(shifted, x, tol=1e-6) == pytest.approx(fl.half_laplacian(fl.gaussian(), x - x0, tol=1e-6), rel=1e-3)


@pytest.mark.slow
def test_linearity_on_fixed_rule(potential):
    a = fl.gaussian()
    b = potential
    comb = fl.PointEvaluable(lambda y: 2.0 * a(y) - 3.0 * b(y), decay_hint=2.0, radial=True)
    x = np.array([0.3, 0.0, 0.0])
    once = lambda f: fl._half_lap_once(f, x, 12, 1.0, 1e3 * 1.3, 10, 1)
    assert once(comb) == pytest.approx(2.0 * once(a) - 3.0 * once(b), rel=1e-10, abs=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("r", [0.0, 0.5])
def test_convolution_identity(potential, r):
    val = fl.half_laplacian(potential, np.array([r, 0.0, 0.0]), tol=1e-6, atol=1e-8)
    assert val == pytest.approx(float(fl.bump(r)), rel=5e-2)


@pytest.mark.slow
def test_convolution_outside_support(potential):
    val = fl.half_laplacian(potential, np.array([2.0, 0.0, 0.0]), tol=1e-6, atol=1e-8)
    assert abs(val) < 5e-2 * float(fl.bump(0.0))


def test_convergence_error_carries_estimate():
    rough = fl.PointEvaluable(lambda y: np.abs(y[..., 0]) ** 0.5 * np.exp(-np.sum(y * y, axis=-1)), decay_hint=50.0)
    with pytest.raises(fl.ConvergenceError) as exc:
        fl.half_laplacian(rough, np.zeros(3), tol=1e-12, atol=0.0, max_level=1)
    assert math.isfinite(exc.value.estimate) and exc.value.error > 0


def test_decay_hint_validated():
    with pytest.raises(ValueError):
        fl.half_laplacian(fl.PointEvaluable(lambda y: y[..., 0], decay_hint=0.5), np.zeros(3))


def test_schwartz_decay():
    for s in (0.5, 1.5):
        rep = fl.schwartz_decay_check(fl.gaussian(), s)
        assert rep.bounded and all(np.isfinite(rep.weighted))
    zero = fl.PointEvaluable(lambda y: np.zeros(y.shape[:-1]), decay_hint=50.0, radial=True)
    rep = fl.schwartz_decay_check(zero, 0.5)
    assert rep.values == [0.0] * 4 and rep.bounded
    with pytest.raises(ValueError):
        fl.schwartz_decay_check(fl.gaussian(), 1.0)
