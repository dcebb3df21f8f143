# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernel.

Applies a sequence of exact SU(2)xU(1) step propagators
``exp(-i (a I + b.sigma))`` to a two-component state.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos

cnp.import_array()


def propagate(const double[:, ::1] gens, double complex up, double complex dn):
    """Return the (n+1, 2) trajectory produced by the n step exponents in ``gens``.

    Row k of ``gens`` holds (a, bx, by, bz), already multiplied by dt/hbar.
    """
    cdef Py_ssize_t n = gens.shape[0]
    cdef Py_ssize_t k
    out = np.empty((n + 1, 2), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double a, bx, by, bz, nb, c, s, ca, sa
    cdef double complex ph, u00, u01, u10, u11, x, y
    x = up
    y = dn
    o[0, 0] = x
    o[0, 1] = y
    with nogil:
        for k in range(n):
            a = gens[k, 0]
            bx = gens[k, 1]
            by = gens[k, 2]
            bz = gens[k, 3]
            nb = sqrt(bx * bx + by * by + bz * bz)
            c = cos(nb)
            if nb > 1e-300:
                s = sin(nb) / nb
            else:
                s = 1.0
            ca = cos(a)
            sa = sin(a)
            ph.real = ca
            ph.imag = -sa
            u00.real = c
            u00.imag = -s * bz
            u01.real = -s * by
            u01.imag = -s * bx
            u10.real = s * by
            u10.imag = -s * bx
            u11.real = c
            u11.imag = s * bz
            x, y = ph * (u00 * x + u01 * y), ph * (u10 * x + u11 * y)
            o[k + 1, 0] = x
            o[k + 1, 1] = y
    return out
