# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: 3-layer MLP forward/backward, Adam step, max-cosine.

Mirrors ``numpy_backend`` function-for-function; dot products accumulate in
double regardless of the parameter dtype, so float32 nets stay numerically
close to the BLAS-backed fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

NAME = "cython"

ctypedef fused real:
    float
    double

LOSS_HUBER = 0
LOSS_SQUARED = 1


cdef void _linear(const real[:, ::1] x, const real[:, ::1] w, const real[::1] b,
                  real[:, ::1] z, real[::1] acc) noexcept nogil:
    # Accumulates in the parameter dtype, like a plain BLAS gemm would.
    cdef Py_ssize_t bi, k, j
    cdef Py_ssize_t n = x.shape[0], din = w.shape[0], dout = w.shape[1]
    cdef real xv
    for bi in range(n):
        for j in range(dout):
            acc[j] = b[j]
        for k in range(din):
            xv = x[bi, k]
            for j in range(dout):
                acc[j] = acc[j] + xv * w[k, j]
        for j in range(dout):
            z[bi, j] = acc[j]


cdef void _relu(const real[:, ::1] z, real[:, ::1] h) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            h[i, j] = z[i, j] if z[i, j] > 0 else <real> 0


def _forward_impl(const real[:, ::1] x,
                  const real[:, ::1] w1, const real[::1] b1,
                  const real[:, ::1] w2, const real[::1] b2,
                  const real[:, ::1] w3, const real[::1] b3,
                  bint need_cache):
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t h1d = w1.shape[1], h2d = w2.shape[1], dout = w3.shape[1]
    z1a = np.empty((n, h1d), dtype=dt)
    h1a = np.empty((n, h1d), dtype=dt)
    z2a = np.empty((n, h2d), dtype=dt)
    h2a = np.empty((n, h2d), dtype=dt)
    qa = np.empty((n, dout), dtype=dt)
    acc = np.empty(max(h1d, max(h2d, dout)), dtype=dt)
    cdef real[:, ::1] z1 = z1a, h1 = h1a, z2 = z2a, h2 = h2a, q = qa
    cdef real[::1] accv = acc
    with nogil:
        _linear(x, w1, b1, z1, accv)
        _relu(z1, h1)
        _linear(h1, w2, b2, z2, accv)
        _relu(z2, h2)
        _linear(h2, w3, b3, q, accv)
    if need_cache:
        return qa, (np.asarray(x), z1a, h1a, z2a, h2a)
    return qa, None


def mlp_forward(params, x, bint need_cache=False):
    """Forward pass; same contract as numpy_backend.mlp_forward."""
    w1, b1, w2, b2, w3, b3 = params
    xp = np.ascontiguousarray(x, dtype=w1.dtype)
    single = xp.ndim == 1
    if single:
        xp = xp.reshape(1, -1)
    q, cache = _forward_impl(xp, w1, b1, w2, b2, w3, b3, need_cache)
    return (q[0] if single else q), cache


def _loss_grads_impl(const real[:, ::1] x,
                     const real[:, ::1] w1, const real[::1] b1,
                     const real[:, ::1] w2, const real[::1] b2,
                     const real[:, ::1] w3, const real[::1] b3,
                     const long[::1] actions, const real[::1] targets,
                     int loss_kind, double delta):
    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t din = w1.shape[0], h1d = w1.shape[1], h2d = w2.shape[1], dout = w3.shape[1]

    z1a = np.empty((n, h1d), dtype=dt)
    h1a = np.empty((n, h1d), dtype=dt)
    z2a = np.empty((n, h2d), dtype=dt)
    h2a = np.empty((n, h2d), dtype=dt)
    qa = np.empty((n, dout), dtype=dt)
    acc = np.empty(max(h1d, max(h2d, dout)), dtype=dt)
    cdef real[:, ::1] z1 = z1a, h1 = h1a, z2 = z2a, h2 = h2a, q = qa
    cdef real[::1] accv = acc

    gw1a = np.zeros((din, h1d), dtype=dt)
    gb1a = np.zeros(h1d, dtype=dt)
    gw2a = np.zeros((h1d, h2d), dtype=dt)
    gb2a = np.zeros(h2d, dtype=dt)
    gw3a = np.zeros((h2d, dout), dtype=dt)
    gb3a = np.zeros(dout, dtype=dt)
    cdef real[:, ::1] gw1 = gw1a, gw2 = gw2a, gw3 = gw3a
    cdef real[::1] gb1 = gb1a, gb2 = gb2a, gb3 = gb3a

    dz2s = np.empty(h2d, dtype=dt)
    dz1s = np.empty(h1d, dtype=dt)
    cdef real[::1] dz2 = dz2s, dz1 = dz1s

    cdef double loss_total = 0.0, r, absr
    cdef real g, xv, hv, s
    cdef Py_ssize_t bi, i, j, k, a

    with nogil:
        _linear(x, w1, b1, z1, accv)
        _relu(z1, h1)
        _linear(h1, w2, b2, z2, accv)
        _relu(z2, h2)
        _linear(h2, w3, b3, q, accv)

        for bi in range(n):
            a = actions[bi]
            r = <double> q[bi, a] - <double> targets[bi]
            absr = fabs(r)
            if loss_kind == 0:
                if absr <= delta:
                    loss_total += 0.5 * r * r
                    g = <real> (r / n)
                else:
                    loss_total += delta * (absr - 0.5 * delta)
                    g = <real> ((delta if r > 0 else -delta) / n)
            else:
                loss_total += 0.5 * r * r
                g = <real> (r / n)

            # output layer
            gb3[a] = gb3[a] + g
            for j in range(h2d):
                gw3[j, a] = gw3[j, a] + h2[bi, j] * g
                s = g * w3[j, a]
                dz2[j] = s if z2[bi, j] > 0 else <real> 0
            for j in range(h2d):
                gb2[j] = gb2[j] + dz2[j]
            for i in range(h1d):
                hv = h1[bi, i]
                for j in range(h2d):
                    gw2[i, j] = gw2[i, j] + hv * dz2[j]
            for i in range(h1d):
                s = 0
                for j in range(h2d):
                    s = s + w2[i, j] * dz2[j]
                dz1[i] = s if z1[bi, i] > 0 else <real> 0
            for i in range(h1d):
                gb1[i] = gb1[i] + dz1[i]
            for k in range(din):
                xv = x[bi, k]
                for i in range(h1d):
                    gw1[k, i] = gw1[k, i] + xv * dz1[i]

    return loss_total / n, (gw1a, gb1a, gw2a, gb2a, gw3a, gb3a)


def mlp_loss_grads(params, x, actions, targets, loss="huber", double delta=1.0):
    """Mean taken-action loss + gradients; same contract as the numpy backend."""
    w1, b1, w2, b2, w3, b3 = params
    xp = np.ascontiguousarray(x, dtype=w1.dtype)
    if xp.ndim == 1:
        xp = xp.reshape(1, -1)
    acts = np.ascontiguousarray(actions, dtype=np.int64)
    tgts = np.ascontiguousarray(targets, dtype=w1.dtype)
    if loss == "huber":
        kind = LOSS_HUBER
    elif loss == "squared":
        kind = LOSS_SQUARED
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return _loss_grads_impl(xp, w1, b1, w2, b2, w3, b3, acts, tgts, kind, delta)


def _adam_impl(real[::1] p, const real[::1] g, real[::1] m, real[::1] v,
               long t, double lr, double wd, double b1, double b2, double eps):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double bc1 = 1.0 - pow(b1, <double> t)
    cdef double bc2 = 1.0 - pow(b2, <double> t)
    cdef double pv, mi, vi
    with nogil:
        for i in range(n):
            pv = <double> p[i]
            if wd != 0.0:
                pv -= lr * wd * pv
            mi = b1 * <double> m[i] + (1.0 - b1) * <double> g[i]
            vi = b2 * <double> v[i] + (1.0 - b2) * <double> g[i] * <double> g[i]
            m[i] = <real> mi
            v[i] = <real> vi
            pv -= lr * (mi / bc1) / (sqrt(vi / bc2) + eps)
            p[i] = <real> pv


def adam_update(param, grad, m, v, t, lr, weight_decay, beta1, beta2, eps):
    """In-place decoupled-weight-decay Adam step for one parameter array."""
    _adam_impl(param.reshape(-1), np.ascontiguousarray(grad, dtype=param.dtype).reshape(-1),
               m.reshape(-1), v.reshape(-1), t, lr, weight_decay, beta1, beta2, eps)


def _max_cos_impl(const double[::1] x64, const real[:, ::1] kept,
                  const double[::1] norms, Py_ssize_t count):
    cdef Py_ssize_t i, k, d = x64.shape[0]
    cdef double xn = 0.0, dot, best, sim
    with nogil:
        for k in range(d):
            xn += x64[k] * x64[k]
    xn = sqrt(xn)
    if xn == 0.0 or count == 0:
        return 0.0
    best = -2.0
    cdef double d0, d1, d2, d3
    cdef Py_ssize_t tail = d - (d % 4)
    with nogil:
        for i in range(count):
            if norms[i] > 0.0:
                d0 = d1 = d2 = d3 = 0.0
                for k in range(0, tail, 4):
                    d0 = d0 + <double> kept[i, k] * x64[k]
                    d1 = d1 + <double> kept[i, k + 1] * x64[k + 1]
                    d2 = d2 + <double> kept[i, k + 2] * x64[k + 2]
                    d3 = d3 + <double> kept[i, k + 3] * x64[k + 3]
                dot = (d0 + d1) + (d2 + d3)
                for k in range(tail, d):
                    dot = dot + <double> kept[i, k] * x64[k]
                sim = dot / (norms[i] * xn)
            else:
                sim = 0.0
            if sim > best:
                best = sim
    if best > 1.0:
        best = 1.0
    elif best < -1.0:
        best = -1.0
    return best


def max_cosine(x, kept, norms, count):
    """Max cosine of x against the first `count` kept rows; 0.0 when empty."""
    if count == 0:
        return 0.0
    x64 = np.ascontiguousarray(x, dtype=np.float64)
    return _max_cos_impl(x64, kept, norms, count)
