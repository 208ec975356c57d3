"""Truncated Taylor series ("jets") with numpy coefficient arrays.

A jet is an array ``a`` of shape ``(K + 1, ...)`` holding Taylor coefficients
``a[j] = f^(j)(t0) / j!`` of a function of one variable.  Trailing axes are
independent points.  Only the handful of operations needed for cutoff and
kernel derivatives are provided.
"""

import math

import numpy as np


def variable(t0, order):
    """Jet of t -> t0 + t."""
    t0 = np.asarray(t0, dtype=np.float64)
    out = np.zeros((order + 1,) + t0.shape)
    out[0] = t0
    if order >= 1:
        out[1] = 1.0
    return out


def constant(c, order):
    c = np.asarray(c, dtype=np.float64)
    out = np.zeros((order + 1,) + c.shape)
    out[0] = c
    return out


def mul(a, b):
    K = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def div(a, b):
    K = a.shape[0] - 1
    q = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        acc = np.array(a[k], dtype=np.float64, copy=True)
        for j in range(1, k + 1):
            acc = acc - b[j] * q[k - j]
        q[k] = acc / b[0]
    return q


def recip(a):
    return div(constant(np.ones(a.shape[1:]), a.shape[0] - 1), a)


def exp(a):
    K = a.shape[0] - 1
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc = acc + j * a[j] * e[k - j]
        e[k] = acc / k
    return e


def logistic(a):
    """1 / (1 + exp(-a)) from y' = a' y (1 - y); never forms exp(|a|)."""
    K = a.shape[0] - 1
    y = np.zeros_like(a)
    a0 = a[0]
    y[0] = np.where(a0 >= 0, 1.0 / (1.0 + np.exp(-np.abs(a0))), np.exp(-np.abs(a0)) / (1.0 + np.exp(-np.abs(a0))))
    q = np.zeros_like(a)  # jet of y (1 - y)
    q[0] = y[0] * (1.0 - y[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(a0)
        for j in range(1, k + 1):
            acc = acc + j * a[j] * q[k - j]
        y[k] = acc / k
        q[k] = y[k] - sum(y[i] * y[k - i] for i in range(k + 1))
    return y


def power(a, p):
    """a^p for real p; needs a[0] > 0."""
    K = a.shape[0] - 1
    y = np.zeros_like(a)
    y[0] = a[0] ** p
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc = acc + ((p + 1.0) * j - k) * a[j] * y[k - j]
        y[k] = acc / (k * a[0])
    return y


def sqrt(a):
    return power(a, 0.5)


def derivatives(a):
    """Convert Taylor coefficients to derivatives f^(j)(t0)."""
    fac = np.array([math.factorial(j) for j in range(a.shape[0])], dtype=np.float64)
    return a * fac.reshape((-1,) + (1,) * (a.ndim - 1))
