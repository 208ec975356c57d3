import math

import numpy as np
import pytest

from qflow import s3harmonics as sh
from qflow.paneitz import laplace_power_apply

AREA = 2 * math.pi**2


@pytest.fixture
def rng():
    return np.random.default_rng(3)


@pytest.mark.parametrize("L,zonal", [(0, True), (0, False), (8, False), (40, True)])
def test_weights_sum_to_area(L, zonal):
    g = sh.make_grid(L, zonal=zonal)
    assert g.weights.sum() == pytest.approx(AREA, rel=1e-12)
    assert np.all((g.psi > 0) & (g.psi < np.pi))


def test_grid_sizes():
    g = sh.make_grid(8)
    assert g.n_psi >= 18 and g.n_theta >= 9 and g.n_phi >= 17
    z = sh.make_grid(8, zonal=True)
    assert z.n_theta == z.n_phi == 1


def test_unit_square_integral():
    g = sh.make_grid(8)
    f = sh.synthesize(sh.HarmonicCoeffs.unit(8, 2, 1, 1), g)
    assert sh.integrate(f**2, g) == pytest.approx(1.0, abs=1e-10)


def test_synthesize_examples():
    g = sh.make_grid(4)
    f = sh.synthesize(sh.HarmonicCoeffs.unit(4, 0), g)
    np.testing.assert_allclose(f, 1 / math.sqrt(AREA), rtol=1e-13)
    assert np.all(sh.synthesize(sh.HarmonicCoeffs.zeros(4), g) == 0)
    z = sh.make_grid(4, zonal=True)
    f1 = sh.synthesize(sh.HarmonicCoeffs.unit(4, 1, zonal=True), z).ravel()
    ratio = f1 / (2 * np.cos(z.psi))
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


def test_analyze_examples(rng):
    g = sh.make_grid(6)
    c = sh.analyze(np.ones(g.shape), g, 6)
    assert c.coeffs[0] == pytest.approx(math.sqrt(AREA), rel=1e-13)
    assert np.max(np.abs(c.coeffs[1:])) < 1e-12
    e = sh.HarmonicCoeffs.unit(6, 3)
    back = sh.analyze(sh.synthesize(e, g), g, 6)
    assert np.max(np.abs(back.coeffs - e.coeffs)) < 1e-10


@pytest.mark.parametrize("zonal,L", [(False, 12), (True, 200)])
def test_round_trip_and_parseval(rng, zonal, L):
    g = sh.make_grid(L, zonal=zonal)
    c = sh.HarmonicCoeffs(L, zonal, rng.standard_normal(sh.n_coeffs(L, zonal)))
    f = sh.synthesize(c, g)
    back = sh.analyze(f, g, L)
    assert np.max(np.abs(back.coeffs - c.coeffs)) / np.max(np.abs(c.coeffs)) < 1e-10
    assert sh.integrate(f**2, g) / float(c.coeffs @ c.coeffs) == pytest.approx(1.0, abs=1e-10)


def test_mean_value_examples():
    g = sh.make_grid(4)
    assert sh.mean_value(np.full(g.shape, 5.0), g) == pytest.approx(5.0, rel=1e-14)
    y1 = sh.synthesize(sh.HarmonicCoeffs.unit(4, 1), g)
    assert abs(sh.mean_value(y1, g)) < 1e-12
    y2 = sh.synthesize(sh.HarmonicCoeffs.unit(4, 2), g)
    assert sh.mean_value(1 + y2, g) == pytest.approx(1.0, abs=1e-10)


def test_zonal_full_consistency(rng):
    L = 10
    z = sh.HarmonicCoeffs(L, True, rng.standard_normal(L + 1))
    g = sh.make_grid(L)
    full = sh.analyze(sh.synthesize(z.to_full(), g), g, L)
    l, k, m = sh.harmonic_index(L)
    assert np.max(np.abs(full.coeffs[(k != 0) | (m != 0)])) < 1e-10
    zg = sh.make_grid(L, zonal=True)
    np.testing.assert_allclose(sh.synthesize(z, zg).ravel(), sh.synthesize(z.to_full(), sh.make_grid(L, n_psi=zg.n_psi))[:, 0, 0], rtol=1e-11, atol=1e-12)


def test_layout_order():
    l, k, m = sh.harmonic_index(2)
    assert list(zip(l, k, m))[:6] == [(0, 0, 0), (1, 0, 0), (1, 1, -1), (1, 1, 0), (1, 1, 1), (2, 0, 0)]
    assert sh.n_coeffs(5) == sum((j + 1) ** 2 for j in range(6))
    assert sh.index_of(7, 5, 3, -2) == sum((j + 1) ** 2 for j in range(5)) + 9 + 1


def test_evaluate_matches_grid(rng):
    L = 5
    c = sh.HarmonicCoeffs(L, False, rng.standard_normal(sh.n_coeffs(L)))
    g = sh.make_grid(L)
    np.testing.assert_allclose(sh.evaluate(c, g.points()), sh.synthesize(c, g), rtol=1e-11, atol=1e-12)


def _lb_fd(c, xi, h=1e-3):
    """Laplace-Beltrami through the degree-0 homogeneous extension to R^4."""
    F = lambda y: sh.evaluate(c, y / np.linalg.norm(y, axis=-1, keepdims=True))
    acc = -8 * F(xi)
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        acc = acc + F(xi + e) + F(xi - e)
    return acc / h**2


def test_laplace_beltrami_eigenrelation(rng):
    L = 5
    c = sh.HarmonicCoeffs(L, False, rng.standard_normal(sh.n_coeffs(L)))
    g = sh.make_grid(L)
    spectral = sh.synthesize(laplace_power_apply(c, 1.0), g)
    for l in range(L + 1):
        y = sh.HarmonicCoeffs.unit(L, l, min(l, 1), 0)
        np.testing.assert_allclose(sh.synthesize(laplace_power_apply(y, 1.0), g), l * (l + 2) * sh.synthesize(y, g), atol=1e-9)
    pts = g.points().reshape(-1, 4)[::7]
    fd = -_lb_fd(c, pts)
    ref = spectral.reshape(-1)[::7]
    assert np.max(np.abs(fd - ref)) / np.max(np.abs(ref)) < 1e-3


def test_dump_load_round_trip(tmp_path, rng):
    for zonal in (False, True):
        c = sh.HarmonicCoeffs(4, zonal, rng.standard_normal(sh.n_coeffs(4, zonal)))
        p = tmp_path / f"c{int(zonal)}.txt"
        sh.dump_coeffs(c, p)
        back = sh.load_coeffs(p)
        assert back.zonal == zonal and back.L == 4
        assert np.array_equal(back.coeffs, c.coeffs)


def test_resolution_refusal():
    c = sh.HarmonicCoeffs.zeros(10)
    with pytest.raises(sh.ResolutionError, match="need"):
        sh.synthesize(c, sh.make_grid(4))
    with pytest.raises(sh.ResolutionError):
        sh.synthesize(c, sh.make_grid(10, zonal=True))
    with pytest.raises(sh.ResolutionError):
        sh.make_grid(sh.FULL_L_MAX + 1)


def test_coefficient_arithmetic():
    a = sh.HarmonicCoeffs.unit(3, 1, zonal=True)
    b = 2 * a - a
    assert b.dot(a) == 1.0
    with pytest.raises(ValueError):
        a + sh.HarmonicCoeffs.zeros(3)
    with pytest.raises(ValueError):
        sh.HarmonicCoeffs(3, True, np.zeros(5))
