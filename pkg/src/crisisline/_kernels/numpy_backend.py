"""Pure-numpy implementations of the hot kernels.

Reference backend: the compiled extension in ``_core.pyx`` mirrors these
functions exactly. Everything here is deterministic for a fixed input
(no threading-order dependence beyond what BLAS guarantees run-to-run
on one machine).
"""
from __future__ import annotations

import numpy as np

NAME = "numpy"


def mlp_forward(params, x, need_cache=False):
    """Forward pass through the 3-layer value head.

    params is (W1, b1, W2, b2, W3, b3) with W stored (in_dim, out_dim).
    x may be a single observation (obs_dim,) or a batch (B, obs_dim).
    Returns (q, cache); cache is (X, Z1, H1, Z2, H2) when requested.
    """
    w1, b1, w2, b2, w3, b3 = params
    single = x.ndim == 1
    xb = x.reshape(1, -1) if single else x
    z1 = xb @ w1 + b1
    h1 = np.maximum(z1, 0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0)
    q = h2 @ w3 + b3
    cache = (xb, z1, h1, z2, h2) if need_cache else None
    return (q[0] if single else q), cache


def mlp_loss_grads(params, x, actions, targets, loss="huber", delta=1.0):
    """Mean loss over the batch on the taken action's Q-value, plus gradients.

    Returns (loss_value, grads) where grads mirrors the params tuple.
    """
    w1, b1, w2, b2, w3, b3 = params
    q, cache = mlp_forward(params, x, need_cache=True)
    xb, z1, h1, z2, h2 = cache
    n = xb.shape[0]
    rows = np.arange(n)
    r = q[rows, actions] - targets
    if loss == "huber":
        absr = np.abs(r)
        quad = absr <= delta
        loss_val = float(np.mean(np.where(quad, 0.5 * r * r, delta * (absr - 0.5 * delta))))
        dr = np.clip(r, -delta, delta)
    elif loss == "squared":
        loss_val = float(np.mean(0.5 * r * r))
        dr = r
    else:
        raise ValueError(f"unknown loss {loss!r}")

    g = np.zeros_like(q)
    g[rows, actions] = dr / n
    dw3 = h2.T @ g
    db3 = g.sum(axis=0)
    dh2 = g @ w3.T
    dz2 = dh2 * (z2 > 0)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ w2.T
    dz1 = dh1 * (z1 > 0)
    dw1 = xb.T @ dz1
    db1 = dz1.sum(axis=0)
    return loss_val, (dw1, db1, dw2, db2, dw3, db3)


def adam_update(param, grad, m, v, t, lr, weight_decay, beta1, beta2, eps):
    """In-place decoupled-weight-decay Adam update for one parameter array.

    t is the already-incremented step counter (1 on the first update).
    """
    if weight_decay:
        param -= param.dtype.type(lr * weight_decay) * param
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    param -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(param.dtype, copy=False)


def max_cosine(x, kept, norms, count):
    """Max cosine similarity between x and the first `count` rows of kept.

    Zero-norm vectors (on either side) contribute 0.0. Result clamped to
    [-1, 1] so float roundoff cannot leak past the cosine range.
    """
    if count == 0:
        return 0.0
    xd = x.astype(np.float64, copy=False)
    xn = float(np.sqrt(xd @ xd))
    if xn == 0.0:
        return 0.0
    rows = kept[:count].astype(np.float64, copy=False)
    dots = rows @ xd
    ns = norms[:count]
    denom = np.where(ns > 0.0, ns * xn, 1.0)
    sims = np.where(ns > 0.0, dots / denom, 0.0)
    best = float(sims.max())
    return min(1.0, max(-1.0, best))
