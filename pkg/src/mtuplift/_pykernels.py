"""Pure-Python/numpy implementations of the numerical kernels.

These mirror the compiled kernels in ``_ckernels.pyx`` and
``_clogistic.pyx``.  ``pava``,
``isotonic_interp`` and ``prefix_arm_stats`` perform the same floating-point
operations in the same order as the compiled versions and therefore agree
bit for bit.  ``logistic_loss_grad`` agrees with ``_clogistic`` only to
rounding (different reduction order).
"""

import numpy as np


def pava(values, weights):
    n = len(values)
    sums = []
    wsum = []
    counts = []
    for i in range(n):
        w = float(weights[i])
        sums.append(w * float(values[i]))
        wsum.append(w)
        counts.append(1)
        while len(sums) > 1 and sums[-2] / wsum[-2] > sums[-1] / wsum[-1]:
            s = sums.pop()
            ws = wsum.pop()
            c = counts.pop()
            sums[-1] += s
            wsum[-1] += ws
            counts[-1] += c
    out = np.empty(n, dtype=np.float64)
    pos = 0
    for s, ws, c in zip(sums, wsum, counts):
        out[pos:pos + c] = s / ws
        pos += c
    return out


def isotonic_interp(knots_x, knots_y, query):
    kx = np.asarray(knots_x, dtype=np.float64)
    ky = np.asarray(knots_y, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    m = len(kx)
    out = np.empty(q.shape, dtype=np.float64)
    j = np.searchsorted(kx, q, side="right") - 1
    below = j < 0
    above = j >= m - 1
    out[below] = ky[0]
    out[above] = ky[m - 1]
    inner = ~(below | above)
    if np.any(inner):
        ji = j[inner]
        x0 = kx[ji]
        y0 = ky[ji]
        y1 = ky[ji + 1]
        t = (q[inner] - x0) / (kx[ji + 1] - x0)
        v = y0 + (y1 - y0) * t
        out[inner] = np.minimum(np.maximum(v, y0), y1)
    return out


def logistic_loss_grad(Xs, y, w, b):
    n = Xs.shape[0]
    z = Xs @ w + b
    e = np.exp(-np.abs(z))
    loss = float(np.sum(np.maximum(z, 0.0) + np.log1p(e) - y * z)) / n
    p = np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    r = p - y
    grad_w = (Xs.T @ r) / n
    grad_b = float(np.sum(r)) / n
    return loss, grad_w, grad_b


def prefix_arm_stats(treated, outcome, ends):
    treated = np.asarray(treated, dtype=np.int8)
    outcome = np.asarray(outcome, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.int64)
    is_t = treated == 1
    ct = np.cumsum(is_t, dtype=np.int64)
    cc = np.cumsum(~is_t, dtype=np.int64)
    st = np.cumsum(np.where(is_t, outcome, 0.0))
    sc = np.cumsum(np.where(is_t, 0.0, outcome))
    idx = ends - 1
    return ct[idx], st[idx], cc[idx], sc[idx]
