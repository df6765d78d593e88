"""Independent reference implementations used as test oracles."""

import itertools
import math

import numpy as np


def contiguous_partitions(m):
    """Every split of range(m) into contiguous blocks, as lists of (start, stop)."""
    for cuts in itertools.product((False, True), repeat=m - 1):
        blocks, start = [], 0
        for i, cut in enumerate(cuts, start=1):
            if cut:
                blocks.append((start, i))
                start = i
        blocks.append((start, m))
        yield blocks


def isotonic_oracle(values, weights):
    """Weighted isotonic fit by brute force over level-set partitions.

    The optimum is constant on contiguous blocks at the block's weighted
    mean, so the best monotone candidate among all partitions is the answer.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    best, best_sse = None, math.inf
    for blocks in contiguous_partitions(len(values)):
        fit = np.empty_like(values)
        for a, b in blocks:
            fit[a:b] = np.sum(weights[a:b] * values[a:b]) / np.sum(weights[a:b])
        if np.any(np.diff(fit) < -1e-12):
            continue
        sse = float(np.sum(weights * (fit - values) ** 2))
        if sse < best_sse - 1e-12:
            best, best_sse = fit, sse
    return best


def finite_difference_grad(f, theta, h):
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for i in range(len(theta)):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        g[i] = (f(up) - f(down)) / (2 * h)
    return g


def two_pass_mean_std(column):
    """Population mean and std with plain Python floats, two passes."""
    xs = [float(v) for v in column]
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    return mean, math.sqrt(var)


def ece_reference(pred, actual, n_bins=10):
    """Loop-based 10-bin ECE; the last bin is closed on the right."""
    total = len(pred)
    err = 0.0
    for b in range(n_bins):
        lo, hi = b / n_bins, (b + 1) / n_bins
        idx = [i for i, p in enumerate(pred) if lo <= p < hi or (b == n_bins - 1 and p == 1.0)]
        if idx:
            conf = sum(pred[i] for i in idx) / len(idx)
            acc = sum(actual[i] for i in idx) / len(idx)
            err += len(idx) / total * abs(conf - acc)
    return err
