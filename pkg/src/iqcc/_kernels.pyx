# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bit-mask kernels; API mirrors ``iqcc._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

NAME = "cython"


cdef extern from *:
    int popcountll "__builtin_popcountll"(unsigned long long) nogil


cdef inline int _row_parity(const uint64_t[:, ::1] a, Py_ssize_t r,
                            const uint64_t[::1] mask) noexcept nogil:
    cdef Py_ssize_t b
    cdef int cnt = 0
    for b in range(a.shape[1]):
        cnt += popcountll(a[r, b] & mask[b])
    return cnt & 1


def parity(const uint64_t[:, ::1] masks, const uint64_t[::1] mask):
    cdef Py_ssize_t m = masks.shape[0], r
    out = np.empty(m, dtype=np.int8)
    cdef signed char[::1] o = out
    with nogil:
        for r in range(m):
            o[r] = _row_parity(masks, r, mask)
    return out


def signs(const uint64_t[:, ::1] masks, const uint64_t[::1] mask):
    cdef Py_ssize_t m = masks.shape[0], r
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for r in range(m):
            o[r] = -1.0 if _row_parity(masks, r, mask) else 1.0
    return out


def anticommutes(const uint64_t[:, ::1] z, const uint64_t[:, ::1] x,
                 const uint64_t[::1] pz, const uint64_t[::1] px):
    cdef Py_ssize_t m = z.shape[0], r
    out = np.empty(m, dtype=bool)
    cdef cnp.npy_bool[::1] o = out
    with nogil:
        for r in range(m):
            o[r] = (_row_parity(z, r, px) ^ _row_parity(x, r, pz)) != 0
    return out


cdef double complex _signed_sum(const uint64_t[:, ::1] z, const double complex[::1] c,
                                Py_ssize_t lo, Py_ssize_t hi,
                                const uint64_t[::1] minus) noexcept nogil:
    cdef Py_ssize_t r
    cdef double complex acc = 0
    for r in range(lo, hi):
        if _row_parity(z, r, minus):
            acc = acc - c[r]
        else:
            acc = acc + c[r]
    return acc


def signed_sum(const uint64_t[:, ::1] z, const double complex[::1] c,
               const uint64_t[::1] minus):
    cdef double complex acc
    with nogil:
        acc = _signed_sum(z, c, 0, z.shape[0], minus)
    return complex(acc)


def run_sums(const uint64_t[:, ::1] z, const double complex[::1] c,
             const int64_t[::1] starts, const uint64_t[::1] minus):
    cdef Py_ssize_t nruns = starts.shape[0] - 1, i
    if nruns <= 0:
        return np.zeros(0, dtype=np.complex128)
    out = np.empty(nruns, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(nruns):
            o[i] = _signed_sum(z, c, starts[i], starts[i + 1], minus)
    return out


def diagonal_energies(const uint64_t[:, ::1] z, const double complex[::1] c,
                      const uint64_t[::1] minus, const uint64_t[:, ::1] flips):
    cdef Py_ssize_t nf = flips.shape[0], nb = z.shape[1], i, r, b
    cdef int cnt
    out = np.empty(nf, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double complex acc
    with nogil:
        for i in range(nf):
            acc = 0
            for r in range(z.shape[0]):
                cnt = 0
                for b in range(nb):
                    cnt += popcountll(z[r, b] & (minus[b] ^ flips[i, b]))
                if cnt & 1:
                    acc = acc - c[r]
                else:
                    acc = acc + c[r]
            o[i] = acc
    return out


def dress_terms(const uint64_t[:, ::1] z, const uint64_t[:, ::1] x,
                const double complex[::1] c, const uint64_t[::1] pz,
                const uint64_t[::1] px, double complex pphase,
                double cos_t, double sin_t):
    cdef Py_ssize_t m = z.shape[0], nb = z.shape[1], r, b, k
    cdef Py_ssize_t n_anti = 0
    anti_arr = np.empty(m, dtype=np.int8)
    cdef signed char[::1] anti = anti_arr
    with nogil:
        for r in range(m):
            anti[r] = _row_parity(z, r, px) ^ _row_parity(x, r, pz)
            n_anti += anti[r]
    zo_arr = np.empty((m + n_anti, nb), dtype=np.uint64)
    xo_arr = np.empty((m + n_anti, nb), dtype=np.uint64)
    co_arr = np.empty(m + n_anti, dtype=np.complex128)
    cdef uint64_t[:, ::1] zo = zo_arr
    cdef uint64_t[:, ::1] xo = xo_arr
    cdef double complex[::1] co = co_arr
    cdef double complex pf = -1j * sin_t * pphase
    with nogil:
        k = m
        for r in range(m):
            for b in range(nb):
                zo[r, b] = z[r, b]
                xo[r, b] = x[r, b]
            if anti[r]:
                co[r] = c[r] * cos_t
                for b in range(nb):
                    zo[k, b] = z[r, b] ^ pz[b]
                    xo[k, b] = x[r, b] ^ px[b]
                if _row_parity(x, r, pz):
                    co[k] = -(c[r] * pf)
                else:
                    co[k] = c[r] * pf
                k += 1
            else:
                co[r] = c[r]
    return zo_arr, xo_arr, co_arr


def merge_sorted(const uint64_t[:, ::1] z, const uint64_t[:, ::1] x,
                 const double complex[::1] c):
    cdef Py_ssize_t m = z.shape[0], nb = z.shape[1], r, b, k = -1
    cdef bint same
    zo_arr = np.empty((m, nb), dtype=np.uint64)
    xo_arr = np.empty((m, nb), dtype=np.uint64)
    co_arr = np.empty(m, dtype=np.complex128)
    cdef uint64_t[:, ::1] zo = zo_arr
    cdef uint64_t[:, ::1] xo = xo_arr
    cdef double complex[::1] co = co_arr
    with nogil:
        for r in range(m):
            same = k >= 0
            if same:
                for b in range(nb):
                    if z[r, b] != zo[k, b] or x[r, b] != xo[k, b]:
                        same = False
                        break
            if same:
                co[k] = co[k] + c[r]
            else:
                k += 1
                for b in range(nb):
                    zo[k, b] = z[r, b]
                    xo[k, b] = x[r, b]
                co[k] = c[r]
    return zo_arr[:k + 1], xo_arr[:k + 1], co_arr[:k + 1]


def apply_terms(const uint64_t[:, ::1] z, const uint64_t[:, ::1] x,
                const double complex[::1] c, const double complex[::1] vin):
    cdef Py_ssize_t dim = vin.shape[0], r, i
    cdef uint64_t xr, zr, t
    out = np.zeros(dim, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for r in range(z.shape[0]):
            xr = x[r, 0]
            zr = z[r, 0]
            for i in range(dim):
                t = (<uint64_t> i) ^ xr
                if popcountll(t & zr) & 1:
                    o[t] = o[t] - c[r] * vin[i]
                else:
                    o[t] = o[t] + c[r] * vin[i]
    return out


def pair_parity(const uint64_t[:, ::1] a, const uint64_t[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], nb = a.shape[1], r, k
    cdef int cnt
    out = np.empty(m, dtype=np.int8)
    cdef signed char[::1] o = out
    with nogil:
        for r in range(m):
            cnt = 0
            for k in range(nb):
                cnt += popcountll(a[r, k] & b[r, k])
            o[r] = cnt & 1
    return out
