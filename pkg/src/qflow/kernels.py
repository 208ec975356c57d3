"""Hot numeric loops, each in a numba and a pure-numpy flavour.

The public names (``gegenbauer_table`` ...) are bound to the numba versions
unless ``QFLOW_NUMBA=0``.  ``NUMPY`` and ``NUMBA`` expose both families for
tests and the benchmark.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# numpy reference versions


def _gegenbauer_table_np(alpha, dmax, x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((dmax + 1,) + x.shape)
    out[0] = 1.0
    if dmax >= 1:
        out[1] = 2.0 * alpha * x
    for d in range(2, dmax + 1):
        out[d] = (2.0 * x * (d + alpha - 1.0) * out[d - 1] - (d + 2.0 * alpha - 2.0) * out[d - 2]) / d
    return out


def _legendre_table_np(lmax, x):
    """P[l, m, i] = unnormalized P_l^m(x_i) with Condon-Shortley phase, zero for m > l."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((lmax + 1, lmax + 1) + x.shape)
    somx2 = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.ones_like(x)
    for m in range(lmax + 1):
        if m > 0:
            pmm = -pmm * (2 * m - 1) * somx2
        out[m, m] = pmm
        if m + 1 <= lmax:
            out[m + 1, m] = x * (2 * m + 1) * pmm
        for l in range(m + 2, lmax + 1):
            out[l, m] = ((2 * l - 1) * x * out[l - 1, m] - (l + m - 1) * out[l - 2, m]) / (l - m)
    return out


def _clenshaw_u_np(a, x):
    """sum_l a[l] U_l(x) by Clenshaw's recurrence."""
    x = np.asarray(x, dtype=np.float64)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(len(a) - 1, -1, -1):
        b1, b2 = a[k] + 2.0 * x * b1 - b2, b1
    return b1


def _log_mass_np(log_k, nw, weights):
    s = log_k + nw
    top = np.max(s)
    if not np.isfinite(top):
        return -np.inf, np.zeros_like(s)
    e = np.exp(s - top)
    acc = np.dot(weights, e)
    return top + np.log(acc), e / acc


def _cauchy_chain_np(x1, rho, k, s, ws):
    """v_0..v_k at points (x1, |xbar|) via the repeated-integration kernel.

    v_j(x) = x1^j / (j-1)! * int_0^1 (1-s)^(j-1) v_0(s x1, xbar) ds
    """
    x1 = np.asarray(x1, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    out = np.empty((k + 1,) + x1.shape)
    out[0] = -0.5 * np.log(x1 * x1 + rho * rho)
    t = x1[..., None] * s
    v0 = -0.5 * np.log(t * t + rho[..., None] ** 2)
    one_ms = 1.0 - s
    pw = np.ones_like(s)
    xp = np.ones_like(x1)
    fact = 1.0
    for j in range(1, k + 1):
        if j > 1:
            pw = pw * one_ms
            fact *= j - 1
        xp = xp * x1
        out[j] = xp / fact * (v0 @ (ws * pw))
    return out


# ---------------------------------------------------------------------------
# numba versions


@njit
def _gegenbauer_table_nb(alpha, dmax, x):
    n = x.shape[0]
    out = np.empty((dmax + 1, n))
    for i in range(n):
        out[0, i] = 1.0
    if dmax >= 1:
        for i in range(n):
            out[1, i] = 2.0 * alpha * x[i]
    for d in range(2, dmax + 1):
        a = d + alpha - 1.0
        b = d + 2.0 * alpha - 2.0
        for i in range(n):
            out[d, i] = (2.0 * x[i] * a * out[d - 1, i] - b * out[d - 2, i]) / d
    return out


@njit
def _legendre_table_nb(lmax, x):
    n = x.shape[0]
    out = np.zeros((lmax + 1, lmax + 1, n))
    somx2 = np.empty(n)
    pmm = np.ones(n)
    for i in range(n):
        somx2[i] = math.sqrt(max(1.0 - x[i] * x[i], 0.0))
    for m in range(lmax + 1):
        if m > 0:
            for i in range(n):
                pmm[i] = -pmm[i] * (2 * m - 1) * somx2[i]
        for i in range(n):
            out[m, m, i] = pmm[i]
        if m + 1 <= lmax:
            for i in range(n):
                out[m + 1, m, i] = x[i] * (2 * m + 1) * pmm[i]
        for l in range(m + 2, lmax + 1):
            for i in range(n):
                out[l, m, i] = ((2 * l - 1) * x[i] * out[l - 1, m, i] - (l + m - 1) * out[l - 2, m, i]) / (l - m)
    return out


@njit
def _clenshaw_u_nb(a, x):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        xi2 = 2.0 * x[i]
        b1 = 0.0
        b2 = 0.0
        for k in range(a.shape[0] - 1, -1, -1):
            b0 = a[k] + xi2 * b1 - b2
            b2 = b1
            b1 = b0
        out[i] = b1
    return out


@njit
def _log_mass_nb(log_k, nw, weights):
    n = log_k.shape[0]
    s = np.empty(n)
    top = -np.inf
    for i in range(n):
        s[i] = log_k[i] + nw[i]
        if s[i] > top:
            top = s[i]
    rho = np.zeros(n)
    if not np.isfinite(top):
        return -np.inf, rho
    acc = 0.0
    for i in range(n):
        rho[i] = math.exp(s[i] - top)
        acc += weights[i] * rho[i]
    inv = 1.0 / acc
    for i in range(n):
        rho[i] *= inv
    return top + math.log(acc), rho


@njit
def _cauchy_chain_nb(x1, rho, k, s, ws):
    n = x1.shape[0]
    q = s.shape[0]
    out = np.empty((k + 1, n))
    acc = np.empty(k + 1)
    for i in range(n):
        a = x1[i]
        r2 = rho[i] * rho[i]
        out[0, i] = -0.5 * math.log(a * a + r2)
        for j in range(k + 1):
            acc[j] = 0.0
        for p in range(q):
            t = a * s[p]
            v0 = -0.5 * math.log(t * t + r2) * ws[p]
            om = 1.0 - s[p]
            pw = 1.0
            for j in range(1, k + 1):
                acc[j] += v0 * pw
                pw *= om
        xp = 1.0
        fact = 1.0
        for j in range(1, k + 1):
            if j > 1:
                fact *= j - 1
            xp *= a
            out[j, i] = xp / fact * acc[j]
    return out


# ---------------------------------------------------------------------------
# dispatch


def _flat(fn_nb):
    """Adapt a 1-D numba kernel over the trailing point axis to arbitrary shapes."""

    def wrapper(*args):
        *head, x = args
        x = np.asarray(x, dtype=np.float64)
        out = fn_nb(*head, np.ascontiguousarray(x.ravel()))
        return out.reshape(out.shape[:-1] + x.shape)

    return wrapper


def _cauchy_chain_nb_any(x1, rho, k, s, ws):
    x1 = np.asarray(x1, dtype=np.float64)
    rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), x1.shape)
    out = _cauchy_chain_nb(np.ascontiguousarray(x1.ravel()), np.ascontiguousarray(rho.ravel()), k, s, ws)
    return out.reshape((k + 1,) + x1.shape)


def _log_mass_nb_any(log_k, nw, weights):
    return _log_mass_nb(
        np.ascontiguousarray(log_k, dtype=np.float64),
        np.ascontiguousarray(nw, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
    )


NUMPY = {
    "gegenbauer_table": _gegenbauer_table_np,
    "legendre_table": _legendre_table_np,
    "clenshaw_u": _clenshaw_u_np,
    "log_mass": _log_mass_np,
    "cauchy_chain": _cauchy_chain_np,
}

NUMBA = {
    "gegenbauer_table": _flat(_gegenbauer_table_nb),
    "legendre_table": _flat(_legendre_table_nb),
    "clenshaw_u": lambda a, x: _flat(_clenshaw_u_nb)(np.ascontiguousarray(a, dtype=np.float64), x),
    "log_mass": _log_mass_nb_any,
    "cauchy_chain": _cauchy_chain_nb_any,
}

_ACTIVE = NUMBA if USE_NUMBA else NUMPY

gegenbauer_table = _ACTIVE["gegenbauer_table"]
legendre_table = _ACTIVE["legendre_table"]
clenshaw_u = _ACTIVE["clenshaw_u"]
log_mass = _ACTIVE["log_mass"]
cauchy_chain = _ACTIVE["cauchy_chain"]
