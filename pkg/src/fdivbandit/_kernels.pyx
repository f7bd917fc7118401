# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_kernels_py`` for semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

cdef double ZERO_REL = 1e-12


def d2_tables(members, pi, rho):
    cdef const double[:, :, ::1] m = np.ascontiguousarray(members, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(pi, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t K = m.shape[0], S = m.shape[1], A = m.shape[2]
    out_b_arr = np.zeros((S, A))
    out_d_arr = np.zeros((S, A))
    cdef double[:, ::1] out_b = out_b_arr
    cdef double[:, ::1] out_d = out_d_arr
    cdef double[:, ::1] d = np.empty((S, A))
    cdef double[::1] mean = np.empty(S)
    cdef Py_ssize_t i, j, s, a
    cdef double scale, tol, x, den_b, den_d, num, ratio, e, bclip
    for i in range(K):
        for j in range(i + 1, K):
            scale = 0.0
            for s in range(S):
                for a in range(A):
                    x = m[i, s, a] - m[j, s, a]
                    d[s, a] = x
                    if fabs(x) > scale:
                        scale = fabs(x)
            if scale == 0.0:
                continue
            tol = ZERO_REL * scale
            den_b = 0.0
            den_d = 0.0
            for s in range(S):
                x = 0.0
                for a in range(A):
                    x += p[s, a] * d[s, a]
                mean[s] = x
                for a in range(A):
                    x = d[s, a]
                    if fabs(x) <= tol:
                        x = 0.0
                    den_b += r[s] * p[s, a] * x * x
                    e = d[s, a] - mean[s]
                    if fabs(e) <= tol:
                        e = 0.0
                    den_d += r[s] * p[s, a] * e * e
            for s in range(S):
                bclip = mean[s]
                if bclip > 1.0:
                    bclip = 1.0
                elif bclip < -1.0:
                    bclip = -1.0
                for a in range(A):
                    x = d[s, a]
                    if fabs(x) <= tol:
                        x = 0.0
                    num = x * x
                    if den_b > 0.0:
                        ratio = num / den_b
                    elif num > 0.0:
                        ratio = INFINITY
                    else:
                        ratio = 0.0
                    if ratio > out_b[s, a]:
                        out_b[s, a] = ratio
                    x = d[s, a] - bclip
                    if fabs(x) <= tol:
                        x = 0.0
                    num = x * x
                    if den_d > 0.0:
                        ratio = num / den_d
                    elif num > 0.0:
                        ratio = INFINITY
                    else:
                        ratio = 0.0
                    if ratio > out_d[s, a]:
                        out_d[s, a] = ratio
    return out_b_arr, out_d_arr


def greedy_cover(dist, double eps):
    """Greedy eps-ball cover; gains are updated incrementally, O(K^2) overall."""
    cdef const double[:, ::1] D = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t K = D.shape[0], i, j, best, left = K
    cdef cnp.uint8_t[:, ::1] ball = np.ascontiguousarray(np.asarray(D) <= eps, dtype=np.uint8)
    cdef cnp.intp_t[::1] gain = np.ascontiguousarray(np.asarray(ball).sum(axis=1), dtype=np.intp)
    cdef cnp.uint8_t[::1] unc = np.ones(K, dtype=np.uint8)
    cdef int count = 0
    while left > 0:
        best = 0
        for j in range(1, K):
            if gain[j] > gain[best]:
                best = j
        for i in range(K):
            if unc[i] and ball[best, i]:
                unc[i] = 0
                left -= 1
                # ball membership is symmetric: i sits in exactly the balls j with ball[i, j]
                for j in range(K):
                    if ball[i, j]:
                        gain[j] -= 1
        count += 1
    return count


def lexicode(int n, int d, Py_ssize_t limit):
    if n > 64:
        raise ValueError("compiled lexicode supports n <= 64")
    code = [0]
    last = 0
    cdef unsigned long long[::1] words
    cdef Py_ssize_t m
    while len(code) < limit:
        words = np.array(code, dtype=np.uint64)
        m = words.shape[0]
        found, x = _next_word(n, d, words, m, last + 1)
        if not found:
            break
        last = int(x)
        code.append(last)
    return code


cdef tuple _next_word(int n, int d, unsigned long long[::1] words, Py_ssize_t m, lo_py):
    # smallest x >= lo at distance >= d from every word: iterative DFS over
    # bit positions k = 0..n-1 (bit n-1-k of the integer), MSB first
    if lo_py >> n:
        return False, 0
    cdef unsigned long long lo = lo_py
    cdef int[::1] dist = np.zeros(m * (n + 1), dtype=np.int32)
    cdef int[::1] choice = np.zeros(n + 1, dtype=np.int32)
    cdef cnp.uint8_t[::1] tight = np.zeros(n + 1, dtype=np.uint8)
    cdef int k = 0, b, rem, lob
    cdef Py_ssize_t c
    cdef unsigned long long x = 0
    cdef bint ok
    tight[0] = 1
    while True:
        rem = n - k
        ok = True
        for c in range(m):
            if dist[k * m + c] + rem < d:
                ok = False
                break
        if ok and k == n:
            return True, x
        if ok:
            if tight[k]:
                choice[k] = <int>((lo >> (n - 1 - k)) & 1ULL) - 1
            else:
                choice[k] = -1
        else:
            if k == 0:
                return False, 0
            k -= 1
        while True:
            b = choice[k] + 1
            if b > 1:
                if k == 0:
                    return False, 0
                k -= 1
                continue
            choice[k] = b
            lob = <int>((lo >> (n - 1 - k)) & 1ULL)
            tight[k + 1] = tight[k] and b == lob
            if b:
                x |= (1ULL << (n - 1 - k))
            else:
                x &= ~(1ULL << (n - 1 - k))
            for c in range(m):
                dist[(k + 1) * m + c] = dist[k * m + c] + <int>(((words[c] >> (n - 1 - k)) & 1ULL) != <unsigned long long>b)
            k += 1
            break
