"""Pure-Python transport kernel.

Integrates the first-order form of ``eps**2 psi'' + t(u) psi = 0`` along one
straight segment ``u0 -> u1`` with an adaptive DOP853 step.  The state is a
2x2 fundamental matrix stored row-major as four complex numbers
``(psi_1, psi_2, eps psi_1', eps psi_2')``.

This module mirrors ``_transport.pyx`` line for line and is used whenever the
compiled extension is unavailable (or explicitly requested).
"""

import math

from ._tableau import (
    A, B, C, E3, E5, N_STAGES, SAFETY, MIN_FACTOR, MAX_FACTOR, ERROR_EXPONENT,
)

_A = [[float(x) for x in row] for row in A]
_B = [float(x) for x in B]
_C = [float(x) for x in C]
_E3 = [float(x) for x in E3]
_E5 = [float(x) for x in E5]

OK = 0
STEP_UNDERFLOW = 1
TOO_MANY_STEPS = 2


def _rhs(s, y, u0, du, inv_eps, z, delta, energy):
    u = u0 + s * du
    t = 0j
    for zr, dr, er in zip(z, delta, energy):
        w = 1.0 / (u - zr)
        t += (dr * w + er) * w
    c = du * inv_eps
    ct = -c * t
    return (c * y[2], c * y[3], ct * y[0], ct * y[1])


def transport_segment(z, delta, energy, inv_eps, u0, u1, y, rtol, atol,
                      h0, max_steps):
    """Propagate ``y`` from ``u0`` to ``u1``.

    Returns ``(y_end, n_accepted, last_step, status)``.  ``h0`` and
    ``last_step`` are fractions of the segment.
    """
    z = [complex(v) for v in z]
    delta = [complex(v) for v in delta]
    energy = [complex(v) for v in energy]
    inv_eps = complex(inv_eps)
    u0 = complex(u0)
    du = complex(u1) - u0
    y = tuple(complex(v) for v in y)
    if du == 0:
        return y, 0, h0, OK

    s = 0.0
    h = min(max(h0, 1e-12), 1.0)
    n_acc = 0
    n_total = 0
    k0 = _rhs(s, y, u0, du, inv_eps, z, delta, energy)
    while s < 1.0:
        if n_total >= max_steps:
            return y, n_acc, h, TOO_MANY_STEPS
        last = h >= 1.0 - s
        if last:
            h = 1.0 - s
        rejected = False
        while True:
            n_total += 1
            k = [k0]
            for i in range(1, N_STAGES):
                ai = _A[i]
                a0 = a1 = a2 = a3 = 0j
                for j in range(i):
                    aij = ai[j]
                    if aij != 0.0:
                        kj = k[j]
                        a0 += aij * kj[0]
                        a1 += aij * kj[1]
                        a2 += aij * kj[2]
                        a3 += aij * kj[3]
                yi = (y[0] + h * a0, y[1] + h * a1, y[2] + h * a2, y[3] + h * a3)
                k.append(_rhs(s + _C[i] * h, yi, u0, du, inv_eps, z, delta, energy))
            b0 = b1 = b2 = b3 = 0j
            for j in range(N_STAGES):
                bj = _B[j]
                kj = k[j]
                b0 += bj * kj[0]
                b1 += bj * kj[1]
                b2 += bj * kj[2]
                b3 += bj * kj[3]
            y_new = (y[0] + h * b0, y[1] + h * b1, y[2] + h * b2, y[3] + h * b3)
            k.append(_rhs(s + h, y_new, u0, du, inv_eps, z, delta, energy))

            e5n = e3n = 0.0
            for c in range(4):
                sc = atol + rtol * max(abs(y[c]), abs(y_new[c]))
                e5 = 0j
                e3 = 0j
                for j in range(N_STAGES + 1):
                    kjc = k[j][c]
                    e5 += _E5[j] * kjc
                    e3 += _E3[j] * kjc
                e5 = abs(e5) / sc
                e3 = abs(e3) / sc
                e5n += e5 * e5
                e3n += e3 * e3
            if e5n == 0.0 and e3n == 0.0:
                err = 0.0
            else:
                err = h * e5n / math.sqrt((e5n + 0.01 * e3n) * 4.0)

            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
                if rejected:
                    factor = min(1.0, factor)
                s = 1.0 if last else s + h
                y = y_new
                k0 = k[N_STAGES]
                n_acc += 1
                h *= factor
                break
            h *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            rejected = True
            last = False
            if h < 1e-14:
                return y, n_acc, h, STEP_UNDERFLOW
            if n_total >= max_steps:
                return y, n_acc, h, TOO_MANY_STEPS
    return y, n_acc, h, OK
