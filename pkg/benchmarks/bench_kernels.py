"""Time the compiled kernels against the numpy/Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from mtuplift import _pykernels

try:
    from mtuplift import _ckernels
except ImportError:
    _ckernels = None
try:
    from mtuplift import _clogistic
except ImportError:
    _clogistic = None


def cases(rng):
    n = 20_000
    values = rng.random(n)
    weights = np.ones(n)
    kx = np.sort(rng.random(2_000))
    kx = np.unique(kx)
    ky = np.sort(rng.random(len(kx)))
    query = rng.random(n)
    treated = rng.integers(0, 2, n).astype(np.int8)
    outcome = (rng.random(n) < 0.1).astype(float)
    ends = np.ceil(np.arange(1, 101) * n / 100).astype(np.int64)
    Xs = rng.normal(size=(n, 6))
    w = rng.normal(size=6)
    return [
        ("pava n=20000", "pava", (values, weights), _ckernels),
        ("isotonic_interp n=20000", "isotonic_interp", (kx, ky, query), _ckernels),
        ("prefix_arm_stats n=20000", "prefix_arm_stats", (treated, outcome, ends), _ckernels),
        ("logistic_loss_grad 20000x6", "logistic_loss_grad", (Xs, outcome, w, 0.1), _clogistic),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, call_args, module in cases(rng):
        py = getattr(_pykernels, name)
        number = 3
        t_py = min(timeit.repeat(lambda: py(*call_args), number=number, repeat=args.repeat)) / number
        if module is None:
            print(f"{label:30s} {t_py * 1e3:10.3f} {'n/a':>10s} {'':>8s}")
            continue
        fn = getattr(module, name)
        t_c = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat)) / number
        print(f"{label:30s} {t_py * 1e3:10.3f} {t_c * 1e3:10.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
