# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``scarlab._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, int8_t

cnp.import_array()

ctypedef fused scalar_t:
    double
    double complex

DEF MODE_H = 0
DEF MODE_PLUS = 1


cdef inline bint _free(int64_t s, int L, bint pbc, int i) nogil:
    cdef int left = i - 1
    cdef int right = i + 1
    if pbc:
        if left < 0:
            left += L
        if right >= L:
            right -= L
        if left != i and (s >> left) & 1:
            return False
        if right != i and (s >> right) & 1:
            return False
        return True
    if left >= 0 and (s >> left) & 1:
        return False
    if right < L and (s >> right) & 1:
        return False
    return True


def flip_matvec(const int64_t[::1] states, const int64_t[::1] ranks,
                const int64_t[::1] lookup, const int64_t[::1] fib,
                int L, bint pbc, int mode,
                const scalar_t[::1] v, scalar_t[::1] out):
    cdef Py_ssize_t n = states.shape[0]
    cdef Py_ssize_t j
    cdef int i
    cdef int64_t s, r
    cdef bint occ, want
    cdef scalar_t x
    with nogil:
        for j in range(n):
            x = v[j]
            if x == 0:
                continue
            s = states[j]
            r = ranks[j]
            for i in range(L):
                occ = (s >> i) & 1
                if mode != MODE_H:
                    want = (i % 2 == 0) == (mode == MODE_PLUS)
                    if occ != want:
                        continue
                if not _free(s, L, pbc, i):
                    continue
                if occ:
                    out[lookup[r - fib[i + 2]]] += x
                else:
                    out[lookup[r + fib[i + 2]]] += x
    return out


cdef inline int64_t _reverse(int64_t x, int L) nogil:
    cdef int64_t y = 0
    cdef int i
    for i in range(L):
        y |= ((x >> i) & 1) << (L - 1 - i)
    return y


def orbit_canonical(const int64_t[::1] states, int L, bint inversion):
    cdef Py_ssize_t n = states.shape[0]
    best_arr = np.empty(n, dtype=np.int64)
    shift_arr = np.zeros(n, dtype=np.int64)
    refl_arr = np.zeros(n, dtype=np.int8)
    cdef int64_t[::1] best = best_arr
    cdef int64_t[::1] shift = shift_arr
    cdef int8_t[::1] refl = refl_arr
    cdef int64_t mask = (<int64_t>1 << L) - 1
    cdef int64_t x, y, rev, b
    cdef Py_ssize_t j
    cdef int m, sh
    cdef int8_t rf
    with nogil:
        for j in range(n):
            x = states[j]
            b = x
            sh = 0
            rf = 0
            rev = _reverse(x, L) if inversion else 0
            for m in range(L):
                if m:
                    y = ((x >> m) | (x << (L - m))) & mask
                    if y < b:
                        b = y
                        sh = m
                        rf = 0
                if inversion:
                    if m:
                        y = ((rev >> m) | (rev << (L - m))) & mask
                    else:
                        y = rev
                    if y < b:
                        b = y
                        sh = (L - m) % L
                        rf = 1
            best[j] = b
            shift[j] = sh
            refl[j] = rf
    return best_arr, shift_arr, refl_arr


cdef inline int64_t _modinv(int64_t a, int64_t p) nogil:
    cdef int64_t t = 0, newt = 1, r = p, newr = a, q, tmp
    while newr != 0:
        q = r // newr
        tmp = t - q * newt
        t = newt
        newt = tmp
        tmp = r - q * newr
        r = newr
        newr = tmp
    if t < 0:
        t += p
    return t



def mod_factor(int64_t[:, ::1] A, int64_t p):
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1]
    row_end_arr = np.zeros(n, dtype=np.int64)
    rowid_arr = np.arange(n, dtype=np.int64)
    piv_arr = np.zeros(min(n, m), dtype=np.int64)
    diag_arr = np.zeros(min(n, m), dtype=np.int64)
    cdef int64_t[::1] row_end = row_end_arr
    cdef int64_t[::1] rowid = rowid_arr
    cdef int64_t[::1] piv = piv_arr
    cdef int64_t[::1] diag = diag_arr
    cdef Py_ssize_t i, j, c, r = 0, e, pr
    cdef int64_t f, inv, tmp, a
    with nogil:
        for i in range(n):
            for j in range(m - 1, -1, -1):
                if A[i, j] != 0:
                    row_end[i] = j + 1
                    break
        for c in range(m):
            if r == n:
                break
            pr = -1
            for i in range(r, n):
                if A[i, c] != 0:
                    pr = i
                    break
            if pr < 0:
                continue
            if pr != r:
                e = row_end[pr] if row_end[pr] > row_end[r] else row_end[r]
                for j in range(e):
                    tmp = A[r, j]
                    A[r, j] = A[pr, j]
                    A[pr, j] = tmp
                tmp = row_end[r]
                row_end[r] = row_end[pr]
                row_end[pr] = tmp
                tmp = rowid[r]
                rowid[r] = rowid[pr]
                rowid[pr] = tmp
            e = row_end[r]
            diag[r] = A[r, c]
            inv = _modinv(A[r, c], p)
            for j in range(c, e):
                A[r, j] = (A[r, j] * inv) % p
            for i in range(r + 1, n):
                f = A[i, c]
                if f == 0:
                    continue
                for j in range(c, e):
                    a = (A[i, j] - f * A[r, j]) % p
                    A[i, j] = a + p if a < 0 else a
                A[i, c] = f
                if e > row_end[i]:
                    row_end[i] = e
            piv[r] = c
            r += 1
    return piv_arr[:r].copy(), rowid_arr, diag_arr[:r].copy()


def mod_solve(const int64_t[:, ::1] A, const int64_t[::1] pivots,
              const int64_t[::1] diag, const int64_t[:, ::1] B, int64_t p):
    cdef Py_ssize_t r = pivots.shape[0], nf = B.shape[1], k, j, q, pending
    Y_arr = np.zeros((r, nf), dtype=np.int64)
    acc_arr = np.zeros(nf, dtype=np.int64)
    cdef int64_t[:, ::1] Y = Y_arr
    cdef int64_t[::1] acc = acc_arr
    cdef int64_t a, inv
    with nogil:
        # products stay below 2**50, so up to 8191 terms fit in int64
        for k in range(r):
            for q in range(nf):
                acc[q] = B[k, q] % p
                if acc[q] < 0:
                    acc[q] += p
            pending = 0
            for j in range(k):
                a = A[k, pivots[j]]
                if a == 0:
                    continue
                a = p - a
                for q in range(nf):
                    acc[q] += a * Y[j, q]
                pending += 1
                if pending == 8000:
                    for q in range(nf):
                        acc[q] %= p
                    pending = 0
            inv = _modinv(diag[k], p)
            for q in range(nf):
                Y[k, q] = ((acc[q] % p) * inv) % p
        for k in range(r - 1, -1, -1):
            for q in range(nf):
                acc[q] = Y[k, q]
            pending = 0
            for j in range(k + 1, r):
                a = A[k, pivots[j]]
                if a == 0:
                    continue
                a = p - a
                for q in range(nf):
                    acc[q] += a * Y[j, q]
                pending += 1
                if pending == 8000:
                    for q in range(nf):
                        acc[q] %= p
                    pending = 0
            for q in range(nf):
                Y[k, q] = acc[q] % p
    return Y_arr
