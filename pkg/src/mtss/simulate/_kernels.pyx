# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling rounds; see _fallback.py for the stream contract.

The arithmetic mirrors the numpy implementation term for term so that both
backends walk the same bit stream and agree to libm-vs-SIMD rounding.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport M_PI, exp, log, sin
from numpy.random cimport bitgen_t

cnp.import_array()

DEF OPEN_SHIFT = 5.421010862427522e-20  # 2^-54


cdef bitgen_t *_get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("object does not expose a BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _kanter_one(double inv, double alpha, double log_dt_inv,
                               double u, double v) noexcept nogil:
    cdef double pu = M_PI * u
    cdef double lx = (
        log_dt_inv
        + log(sin(alpha * pu))
        + (inv - 1.0) * log(sin((1.0 - alpha) * pu))
        - log(sin(pu)) * inv
        - (inv - 1.0) * log(-log(v))
    )
    return exp(lx)


def stable_round(double alpha, double dt, Py_ssize_t m, bit_generator):
    """m stable increments; consumes exactly 2m doubles as (U, V) pairs."""
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef double[::1] xv = out
    cdef double inv = 1.0 / alpha
    cdef double log_dt_inv = log(dt) * inv
    cdef double u, v
    cdef Py_ssize_t i
    with bit_generator.lock, nogil:
        for i in range(m):
            u = rng.next_double(rng.state) + OPEN_SHIFT
            v = rng.next_double(rng.state) + OPEN_SHIFT
            xv[i] = _kanter_one(inv, alpha, log_dt_inv, u, v)
    return out


def tss_round(double alpha, double lam, double dt, Py_ssize_t m, bit_generator):
    """m tempering proposals; consumes exactly 3m doubles as (U, V, W) triples."""
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.npy_bool, ndim=1] acc = np.empty(m, dtype=np.bool_)
    cdef double[::1] xv = out
    cdef cnp.npy_bool[::1] av = acc
    cdef double inv = 1.0 / alpha
    cdef double log_dt_inv = log(dt) * inv
    cdef double u, v, w, x
    cdef Py_ssize_t i
    with bit_generator.lock, nogil:
        for i in range(m):
            u = rng.next_double(rng.state) + OPEN_SHIFT
            v = rng.next_double(rng.state) + OPEN_SHIFT
            w = rng.next_double(rng.state)
            x = _kanter_one(inv, alpha, log_dt_inv, u, v)
            xv[i] = x
            av[i] = w < exp(-lam * x)
    return out, acc
