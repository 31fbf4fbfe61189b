# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-normal kernel: Philox4x64-10 counter blocks fed through
the inverse normal CDF.

Emits exactly the same uint64 stream as ``numpy.random.Philox`` for the same
(key, counter), including numpy's convention that the 256-bit block counter
is incremented *before* each block is generated.  Uniforms use 52 mantissa
bits, ``u = ((w >> 12) + 0.5) * 2**-52``, so every floating-point step is
exact and the pure-numpy fallback reproduces this output bit for bit.
"""

from libc.stdint cimport uint64_t

from scipy.special.cython_special cimport ndtri

cdef extern from *:
    """
    #include <stdint.h>

    #define MATSHRINK_PHILOX_M0 UINT64_C(0xD2E7470EE14C6C93)
    #define MATSHRINK_PHILOX_M1 UINT64_C(0xCA5A826395121157)
    #define MATSHRINK_PHILOX_W0 UINT64_C(0x9E3779B97F4A7C15)
    #define MATSHRINK_PHILOX_W1 UINT64_C(0xBB67AE8584CAA73B)

    static inline void matshrink_philox_round(uint64_t c[4], uint64_t k0,
                                              uint64_t k1) {
        __uint128_t p0 = (__uint128_t)MATSHRINK_PHILOX_M0 * c[0];
        __uint128_t p1 = (__uint128_t)MATSHRINK_PHILOX_M1 * c[2];
        uint64_t hi0 = (uint64_t)(p0 >> 64), lo0 = (uint64_t)p0;
        uint64_t hi1 = (uint64_t)(p1 >> 64), lo1 = (uint64_t)p1;
        c[0] = hi1 ^ c[1] ^ k0;
        c[1] = lo1;
        c[2] = hi0 ^ c[3] ^ k1;
        c[3] = lo0;
    }

    static inline void matshrink_philox_block(const uint64_t ctr[4],
                                              uint64_t k0, uint64_t k1,
                                              uint64_t out[4]) {
        uint64_t c[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
        int r;
        matshrink_philox_round(c, k0, k1);
        for (r = 1; r < 10; r++) {
            k0 += MATSHRINK_PHILOX_W0;
            k1 += MATSHRINK_PHILOX_W1;
            matshrink_philox_round(c, k0, k1);
        }
        out[0] = c[0];
        out[1] = c[1];
        out[2] = c[2];
        out[3] = c[3];
    }

    static inline void matshrink_inc_counter(uint64_t ctr[4]) {
        if (++ctr[0] == 0)
            if (++ctr[1] == 0)
                if (++ctr[2] == 0)
                    ++ctr[3];
    }

    static inline void matshrink_add_counter(uint64_t ctr[4], uint64_t delta) {
        uint64_t old = ctr[0];
        ctr[0] += delta;
        if (ctr[0] < old)
            if (++ctr[1] == 0)
                if (++ctr[2] == 0)
                    ++ctr[3];
    }
    """
    void matshrink_philox_block(const uint64_t *ctr, uint64_t k0,
                                uint64_t k1, uint64_t *out) nogil
    void matshrink_inc_counter(uint64_t *ctr) nogil
    void matshrink_add_counter(uint64_t *ctr, uint64_t delta) nogil

cdef double TWO_NEG52 = 2.0 ** -52


def fill_raw(uint64_t[::1] out, uint64_t key0, uint64_t key1,
             uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3):
    """Fill ``out`` (length divisible by 4) with raw Philox words starting
    at block counter (c0, c1, c2, c3), little-word-first."""
    cdef uint64_t ctr[4]
    cdef Py_ssize_t nblocks = out.shape[0] // 4
    cdef Py_ssize_t i
    ctr[0] = c0; ctr[1] = c1; ctr[2] = c2; ctr[3] = c3
    with nogil:
        for i in range(nblocks):
            matshrink_inc_counter(ctr)
            matshrink_philox_block(ctr, key0, key1, &out[4 * i])


def fill_normals(double[:, ::1] out, uint64_t key0, uint64_t key1,
                 uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                 uint64_t blocks_per_row):
    """Fill each row i of ``out`` with standard normals drawn from the
    Philox blocks starting at base counter + i * blocks_per_row.

    A row consumes its blocks word by word; trailing words of the final
    block are discarded so rows always start on a block boundary.
    """
    cdef uint64_t ctr[4]
    cdef uint64_t buf[4]
    cdef Py_ssize_t nrows = out.shape[0]
    cdef Py_ssize_t ncols = out.shape[1]
    cdef Py_ssize_t i, w
    cdef int j
    cdef double u
    with nogil:
        for i in range(nrows):
            ctr[0] = c0; ctr[1] = c1; ctr[2] = c2; ctr[3] = c3
            matshrink_add_counter(ctr, (<uint64_t> i) * blocks_per_row)
            w = 0
            while w < ncols:
                matshrink_inc_counter(ctr)
                matshrink_philox_block(ctr, key0, key1, buf)
                for j in range(4):
                    if w >= ncols:
                        break
                    u = (<double> (buf[j] >> 12) + 0.5) * TWO_NEG52
                    out[i, w] = ndtri(u)
                    w += 1
