"""Numpy implementations of the bit-mask kernels.

Every function here has a twin in ``_kernels.pyx`` with an identical
signature. Masks are ``uint64`` arrays of shape ``(n_terms, n_blocks)``;
a single mask is a 1-D ``uint64`` array of length ``n_blocks``.
"""
import numpy as np

NAME = "python"

if hasattr(np, "bitwise_count"):
    def _popcount(a):
        return np.bitwise_count(a)
else:  # numpy < 2.0
    _BYTE_COUNTS = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

    def _popcount(a):
        b = np.ascontiguousarray(a).view(np.uint8).reshape(a.shape + (8,))
        return _BYTE_COUNTS[b].sum(axis=-1, dtype=np.uint8)


def parity(masks, mask):
    """Parity of ``popcount(masks[r] & mask)`` for every row, as int8."""
    if masks.shape[0] == 0:
        return np.zeros(0, dtype=np.int8)
    counts = _popcount(masks & mask).sum(axis=1, dtype=np.int64)
    return (counts & 1).astype(np.int8)


def signs(masks, mask):
    """``(-1) ** popcount(masks[r] & mask)`` as float64."""
    return 1.0 - 2.0 * parity(masks, mask)


def anticommutes(z, x, pz, px):
    """Rows of the ZX-form operator that anticommute with the word (pz, px)."""
    if z.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    counts = _popcount(z & px).sum(axis=1, dtype=np.int64)
    counts += _popcount(x & pz).sum(axis=1, dtype=np.int64)
    return (counts & 1).astype(bool)


def signed_sum(z, c, minus):
    """Sum of ``c[r] * (-1) ** popcount(z[r] & minus)``."""
    if z.shape[0] == 0:
        return 0j
    return complex(np.sum(c * signs(z, minus)))


def run_sums(z, c, starts, minus):
    """``signed_sum`` restricted to each run ``starts[i]:starts[i+1]``."""
    nruns = len(starts) - 1
    if nruns <= 0:
        return np.zeros(0, dtype=np.complex128)
    vals = c * signs(z, minus)
    return np.add.reduceat(vals, starts[:-1]) if len(vals) else np.zeros(nruns, complex)


def diagonal_energies(z, c, minus, flips):
    """For every flip row f: ``signed_sum(z, c, minus ^ f)``."""
    out = np.empty(flips.shape[0], dtype=np.complex128)
    for i in range(flips.shape[0]):
        out[i] = signed_sum(z, c, minus ^ flips[i])
    return out


def dress_terms(z, x, c, pz, px, pphase, cos_t, sin_t):
    """Unmerged terms of exp(i t P/2) H exp(-i t P/2) for P = pphase * Z(pz) X(px).

    Commuting rows are kept, anticommuting rows Q become ``cos_t Q`` plus the
    product row ``-i sin_t Q P``. Duplicates are left for the caller to merge.
    """
    anti = anticommutes(z, x, pz, px)
    c_new = c.copy()
    c_new[anti] *= cos_t
    za, xa, ca = z[anti], x[anti], c[anti]
    prod = ca * ((-1j * sin_t * pphase) * signs(xa, pz))
    return (
        np.concatenate([z, za ^ pz]),
        np.concatenate([x, xa ^ px]),
        np.concatenate([c_new, prod]),
    )


def merge_sorted(z, x, c):
    """Sum coefficients of adjacent duplicate rows of an already sorted operator."""
    m = z.shape[0]
    if m == 0:
        return z, x, c
    new = np.ones(m, dtype=bool)
    new[1:] = np.any(z[1:] != z[:-1], axis=1) | np.any(x[1:] != x[:-1], axis=1)
    starts = np.flatnonzero(new)
    return z[starts], x[starts], np.add.reduceat(c, starts)


def apply_terms(z, x, c, vin):
    """Return ``sum_r c[r] Z(z[r]) X(x[r]) |vin>`` for single-block masks."""
    dim = vin.shape[0]
    out = np.zeros(dim, dtype=np.complex128)
    idx = np.arange(dim, dtype=np.uint64)
    for r in range(z.shape[0]):
        xr = x[r, 0]
        zr = z[r, 0]
        target = idx ^ xr
        sgn = 1.0 - 2.0 * (_popcount(target & zr) & 1)
        out[target] += c[r] * sgn * vin
    return out


def pair_parity(a, b):
    """Parity of ``popcount(a[r] & b[r])`` row by row, as int8."""
    if a.shape[0] == 0:
        return np.zeros(0, dtype=np.int8)
    return (_popcount(a & b).sum(axis=1, dtype=np.int64) & 1).astype(np.int8)
