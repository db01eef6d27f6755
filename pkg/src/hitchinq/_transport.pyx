# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transport kernel; same algorithm and return contract as
``_transport_py.transport_segment``."""

import numpy as np
from libc.math cimport sqrt, pow

from ._tableau import A, B, C, E3, E5, N_STAGES

cdef int NS = 12
cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0
cdef double ERR_EXP = -1.0 / 8.0

cdef double[:, ::1] _A = np.ascontiguousarray(A)
cdef double[::1] _B = np.ascontiguousarray(B)
cdef double[::1] _C = np.ascontiguousarray(C)
cdef double[::1] _E3 = np.ascontiguousarray(E3)
cdef double[::1] _E5 = np.ascontiguousarray(E5)

assert N_STAGES == NS


cdef inline double cabs(double complex x) noexcept nogil:
    return sqrt(x.real * x.real + x.imag * x.imag)


cdef inline void rhs(double s, double complex* y, double complex u0,
                     double complex du, double complex inv_eps,
                     double complex* z, double complex* dl, double complex* en,
                     int n, double complex* out) noexcept nogil:
    cdef double complex u = u0 + s * du
    cdef double complex t = 0
    cdef double complex w
    cdef int r
    for r in range(n):
        w = 1.0 / (u - z[r])
        t = t + (dl[r] * w + en[r]) * w
    cdef double complex c = du * inv_eps
    cdef double complex ct = -c * t
    out[0] = c * y[2]
    out[1] = c * y[3]
    out[2] = ct * y[0]
    out[3] = ct * y[1]


cdef int _segment(double complex* z, double complex* dl, double complex* en,
                  int n, double complex inv_eps, double complex u0,
                  double complex du, double complex* y, double rtol,
                  double atol, double* h_io, long max_steps,
                  long* n_acc_out) noexcept nogil:
    cdef double complex k[13][4]
    cdef double complex yi[4]
    cdef double complex y_new[4]
    cdef double complex acc, e5c, e3c
    cdef double s = 0.0
    cdef double h = h_io[0]
    cdef double err, factor, sc, e5n, e3n, a, m0, m1
    cdef long n_acc = 0
    cdef long n_total = 0
    cdef int i, j, c
    cdef bint rejected, last

    if h < 1e-12:
        h = 1e-12
    if h > 1.0:
        h = 1.0
    rhs(s, y, u0, du, inv_eps, z, dl, en, n, &k[0][0])
    while s < 1.0:
        if n_total >= max_steps:
            h_io[0] = h
            n_acc_out[0] = n_acc
            return 2
        last = h >= 1.0 - s
        if last:
            h = 1.0 - s
        rejected = False
        while True:
            n_total += 1
            for i in range(1, NS):
                for c in range(4):
                    acc = 0
                    for j in range(i):
                        a = _A[i, j]
                        if a != 0.0:
                            acc = acc + a * k[j][c]
                    yi[c] = y[c] + h * acc
                rhs(s + _C[i] * h, yi, u0, du, inv_eps, z, dl, en, n, &k[i][0])
            for c in range(4):
                acc = 0
                for j in range(NS):
                    acc = acc + _B[j] * k[j][c]
                y_new[c] = y[c] + h * acc
            rhs(s + h, y_new, u0, du, inv_eps, z, dl, en, n, &k[NS][0])

            e5n = 0.0
            e3n = 0.0
            for c in range(4):
                m0 = cabs(y[c])
                m1 = cabs(y_new[c])
                sc = atol + rtol * (m0 if m0 > m1 else m1)
                e5c = 0
                e3c = 0
                for j in range(NS + 1):
                    e5c = e5c + _E5[j] * k[j][c]
                    e3c = e3c + _E3[j] * k[j][c]
                m0 = cabs(e5c) / sc
                m1 = cabs(e3c) / sc
                e5n += m0 * m0
                e3n += m1 * m1
            if e5n == 0.0 and e3n == 0.0:
                err = 0.0
            else:
                err = h * e5n / sqrt((e5n + 0.01 * e3n) * 4.0)

            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * pow(err, ERR_EXP)
                    if factor > MAX_FACTOR:
                        factor = MAX_FACTOR
                if rejected and factor > 1.0:
                    factor = 1.0
                if last:
                    s = 1.0
                else:
                    s = s + h
                for c in range(4):
                    y[c] = y_new[c]
                    k[0][c] = k[NS][c]
                n_acc += 1
                h = h * factor
                break
            factor = SAFETY * pow(err, ERR_EXP)
            if factor < MIN_FACTOR:
                factor = MIN_FACTOR
            h = h * factor
            rejected = True
            last = False
            if h < 1e-14:
                h_io[0] = h
                n_acc_out[0] = n_acc
                return 1
            if n_total >= max_steps:
                h_io[0] = h
                n_acc_out[0] = n_acc
                return 2
    h_io[0] = h
    n_acc_out[0] = n_acc
    return 0


def transport_segment(z, delta, energy, inv_eps, u0, u1, y, double rtol,
                      double atol, double h0, long max_steps):
    """Propagate ``y`` from ``u0`` to ``u1``.

    Returns ``(y_end, n_accepted, last_step, status)``.
    """
    cdef double complex[::1] zz = np.ascontiguousarray(z, dtype=np.complex128)
    cdef double complex[::1] dd = np.ascontiguousarray(delta, dtype=np.complex128)
    cdef double complex[::1] ee = np.ascontiguousarray(energy, dtype=np.complex128)
    cdef double complex yy[4]
    cdef double complex cu0 = u0
    cdef double complex du = complex(u1) - cu0
    cdef double complex ie = inv_eps
    cdef double h = h0
    cdef long n_acc = 0
    cdef int status
    cdef int n = zz.shape[0]
    cdef int c
    for c in range(4):
        yy[c] = y[c]
    if du == 0:
        return (yy[0], yy[1], yy[2], yy[3]), 0, h0, 0
    with nogil:
        status = _segment(&zz[0], &dd[0], &ee[0], n, ie, cu0, du, yy, rtol,
                          atol, &h, max_steps, &n_acc)
    return (yy[0], yy[1], yy[2], yy[3]), n_acc, h, status
