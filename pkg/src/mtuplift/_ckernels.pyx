# cython: language_level=3
"""Compiled sequential kernels: PAVA, isotonic interpolation, uplift prefix sums.

Same signatures and semantics as ``_pykernels``.  Compiled without
fast-math or FMA contraction so that results match the pure-Python
versions bit for bit.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def pava(values, weights):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    sums_arr = np.empty(n, dtype=np.float64)
    wsum_arr = np.empty(n, dtype=np.float64)
    cnt_arr = np.empty(n, dtype=np.intp)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    cdef double[::1] wsum = wsum_arr
    cdef Py_ssize_t[::1] cnt = cnt_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t top = 0, i, j, pos
    cdef double level
    with nogil:
        for i in range(n):
            sums[top] = wt[i] * v[i]
            wsum[top] = wt[i]
            cnt[top] = 1
            top += 1
            while top > 1 and sums[top - 2] / wsum[top - 2] > sums[top - 1] / wsum[top - 1]:
                sums[top - 2] += sums[top - 1]
                wsum[top - 2] += wsum[top - 1]
                cnt[top - 2] += cnt[top - 1]
                top -= 1
        pos = 0
        for i in range(top):
            level = sums[i] / wsum[i]
            for j in range(cnt[i]):
                out[pos] = level
                pos += 1
    return out_arr


def isotonic_interp(knots_x, knots_y, query):
    cdef const double[::1] kx = np.ascontiguousarray(knots_x, dtype=np.float64)
    cdef const double[::1] ky = np.ascontiguousarray(knots_y, dtype=np.float64)
    q_arr = np.asarray(query, dtype=np.float64)
    shape = q_arr.shape
    cdef const double[::1] q = np.ascontiguousarray(q_arr.ravel())
    cdef Py_ssize_t m = kx.shape[0], nq = q.shape[0]
    out_arr = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, lo, hi, mid
    cdef double x, x0, y0, y1, t, val
    with nogil:
        for i in range(nq):
            x = q[i]
            # largest index lo with kx[lo] <= x, or -1
            lo = -1
            hi = m
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if kx[mid] <= x:
                    lo = mid
                else:
                    hi = mid
            if lo < 0:
                out[i] = ky[0]
            elif lo >= m - 1:
                out[i] = ky[m - 1]
            else:
                x0 = kx[lo]
                y0 = ky[lo]
                y1 = ky[lo + 1]
                t = (x - x0) / (kx[lo + 1] - x0)
                val = y0 + (y1 - y0) * t
                if val < y0:
                    val = y0
                if val > y1:
                    val = y1
                out[i] = val
    return out_arr.reshape(shape)


def prefix_arm_stats(treated, outcome, ends):
    cdef const cnp.int8_t[::1] tr = np.ascontiguousarray(treated, dtype=np.int8)
    cdef const double[::1] y = np.ascontiguousarray(outcome, dtype=np.float64)
    cdef const cnp.int64_t[::1] e = np.ascontiguousarray(ends, dtype=np.int64)
    cdef Py_ssize_t n = tr.shape[0], nb = e.shape[0], i, k = 0
    nt_arr = np.empty(nb, dtype=np.int64)
    nc_arr = np.empty(nb, dtype=np.int64)
    st_arr = np.empty(nb, dtype=np.float64)
    sc_arr = np.empty(nb, dtype=np.float64)
    cdef cnp.int64_t[::1] nt = nt_arr
    cdef cnp.int64_t[::1] nc = nc_arr
    cdef double[::1] st = st_arr
    cdef double[::1] sc = sc_arr
    cdef cnp.int64_t ct = 0, cc = 0
    cdef double at = 0.0, ac = 0.0
    with nogil:
        for i in range(n):
            if tr[i] == 1:
                ct += 1
                at += y[i]
            else:
                cc += 1
                ac += y[i]
            while k < nb and e[k] == i + 1:
                nt[k] = ct
                st[k] = at
                nc[k] = cc
                sc[k] = ac
                k += 1
    return nt_arr, st_arr, nc_arr, sc_arr
