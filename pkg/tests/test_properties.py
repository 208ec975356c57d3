"""Randomised properties driven by hypothesis."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qflow import conformal as cf
from qflow import s3harmonics as sh
from qflow import suites
from qflow.paneitz import multiplier_table, paneitz_apply, spectral_solve

coords = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coords, coords, coords).map(np.array)


@given(point)
def test_stereo_round_trip(x):
    xi = cf.stereo_inv(x)
    assert abs(np.linalg.norm(xi) - 1) < 1e-14
    np.testing.assert_allclose(cf.stereo(xi), x, rtol=1e-12, atol=1e-13)


@given(point)
def test_w0_two_forms(x):
    a, b = float(cf.w0(x)), float(cf.w0_on_sphere(cf.stereo_inv(x)[3]))
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 32), st.booleans())
def test_beckner_inequality(seed, L, zonal):
    L = L if zonal else min(L, 6)
    rng = np.random.default_rng(seed)
    w = suites.random_mean_free(rng, L, zonal)
    g = sh.make_grid(4 * L, zonal=True) if zonal else sh.make_grid(3 * L)
    lhs, rhs = suites.beckner_sides(w, g)
    assert rhs - lhs >= -1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_solve_round_trip(seed, L):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(L + 1) * 10.0 ** rng.uniform(-3, 3)
    c[0] = 0.0
    f = sh.HarmonicCoeffs(L, True, c)
    t = multiplier_table(3, L)
    np.testing.assert_allclose(paneitz_apply(spectral_solve(f, t), t).coeffs, c, rtol=1e-12, atol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 10))
def test_parseval_full(seed, L):
    rng = np.random.default_rng(seed)
    c = sh.HarmonicCoeffs(L, False, rng.standard_normal(sh.n_coeffs(L)))
    g = sh.make_grid(L)
    f = sh.synthesize(c, g)
    assert math.isclose(sh.integrate(f * f, g), float(c.coeffs @ c.coeffs), rel_tol=1e-10)


@given(st.floats(-10, 1.999999))
def test_coercivity_identity(alpha):
    from qflow.solver import coercivity_margin

    assert abs(coercivity_margin(alpha) - (2 - alpha) / 4) < 1e-12
