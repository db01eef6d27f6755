"""Periods of ``v du`` on the spectral curve ``v**2 = t(u)`` and WKB checks."""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import BranchTrackingError, DegenerateLocusError, ValidationError
from .monodromy import PathSpec, check_clearance, transport
from .oper import OperConfig, build_oper

log = logging.getLogger(__name__)

GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
PERIOD_TOL = 1e-13
MAX_DEPTH = 40


@dataclass(frozen=True)
class SpectralCurveData:
    """``t(u) = num(u) / den(u)``, coefficient arrays in increasing degree.

    :meth:`from_punctures` builds the classical quadratic differential
    ``sum_r delta_r / (u - z_r)**2 + H_r / (u - z_r)``.
    """

    num: tuple[complex, ...]
    den: tuple[complex, ...]
    poles: tuple[complex, ...] = ()

    @classmethod
    def from_punctures(cls, positions: Sequence[complex], weights: Sequence[complex],
                       accessory: Sequence[complex]) -> "SpectralCurveData":
        z = [complex(x) for x in positions]
        num = np.zeros(1, dtype=complex)
        den = P.polyfromroots(z + z)
        for r, zr in enumerate(z):
            rest = P.polyfromroots([x for s, x in enumerate(z) if s != r] * 2)
            term = P.polymul(rest, P.polyadd([complex(weights[r])],
                                             complex(accessory[r]) * np.array([-zr, 1])))
            num = P.polyadd(num, term)
        return cls(tuple(num), tuple(den), tuple(z))

    @classmethod
    def from_config(cls, config: OperConfig, accessory) -> "SpectralCurveData":
        return cls.from_punctures(config.positions, config.weights, list(accessory))

    def t(self, u) -> complex:
        return P.polyval(u, np.array(self.num)) / P.polyval(u, np.array(self.den))

    def numerator(self) -> np.ndarray:
        c = np.array(self.num, dtype=complex)
        scale = float(np.abs(c).max()) if c.size else 0.0
        if scale == 0:
            raise ValidationError("t vanishes identically")
        nz = np.nonzero(np.abs(c) > 1e-13 * scale)[0]
        return c[: nz[-1] + 1]


class BranchPoint(NamedTuple):
    position: complex
    residual: float
    derivative: float


def branch_points(curve: SpectralCurveData, simple_tol: float = 1e-8) -> list[BranchPoint]:
    """Zeros of the numerator of ``t`` with a simplicity certificate.

    Each root is polished by Newton on the numerator; the certificate is
    ``|num'(root)|`` relative to the coefficient scale.
    """
    c = curve.numerator()
    if len(c) == 1:
        return []
    dc = P.polyder(c)
    scale = float(np.abs(c).max())
    roots = np.roots(c[::-1])
    out = []
    for r in roots:
        for _ in range(3):
            d = P.polyval(r, dc)
            if d == 0:
                break
            r = r - P.polyval(r, c) / d
        der = abs(P.polyval(r, dc))
        span = max(1.0, abs(r)) ** (len(c) - 2)
        if der < simple_tol * scale * span:
            raise DegenerateLocusError(f"multiple branch point near {r}")
        res = abs(curve.t(r))
        out.append(BranchPoint(complex(r), float(res), float(der / scale)))
    out.sort(key=lambda b: (round(b.position.real, 12), b.position.imag))
    return out


def _gl(f, a, b):
    mid, half = (a + b) / 2, (b - a) / 2
    return half * np.dot(_GL_W, f(mid + half * _GL_X))


class _Tracker:
    """Continuous branch of ``sqrt(t)`` along a path."""

    def __init__(self, curve, v0):
        self.curve = curve
        self.v = v0

    def values(self, pts, t_start, v_start):
        tv = self.curve.t(pts)
        ratio = tv / t_start
        if np.any(np.abs(np.angle(ratio)) > math.pi / 2):
            return None
        return v_start * np.sqrt(ratio)


def period(curve: SpectralCurveData, cycle: PathSpec, v_start: complex | None = None,
           tol: float = PERIOD_TOL) -> complex:
    """``int v du`` along ``cycle`` with ``v`` continued from ``v_start``.

    The default starting branch is the principal square root of ``t`` at the
    first vertex.  Each straight piece is bisected until the argument of ``t``
    varies by less than ``pi/2`` over it and the Gauss-Legendre estimate is
    stable under halving.
    """
    pts = cycle.points()
    for p in pts:
        if abs(curve.t(p)) == 0:
            raise BranchTrackingError(f"cycle passes through a branch point at {p}")
    for z in curve.poles:
        for a, b in cycle.segments():
            from .monodromy import _segment_distance
            if _segment_distance(a, b, z) < 1e-9:
                raise BranchTrackingError(f"cycle passes through the pole {z}")
    t0 = curve.t(pts[0])
    v = cmath.sqrt(t0) if v_start is None else complex(v_start)
    if abs(v * v - t0) > 1e-10 * max(1.0, abs(t0)):
        raise ValidationError("v_start is not a square root of t at the start")
    total = 0j
    tr = _Tracker(curve, v)
    for a, b in cycle.segments():
        total += _seg(curve, tr, a, b, tol)
    return complex(total)


def _seg(curve, tr, a, b, tol):
    stack = [(a, b, 0)]
    total = 0j
    while stack:
        x0, x1, depth = stack.pop()
        if depth > MAX_DEPTH:
            raise BranchTrackingError(f"branch tracking failed near {x0}")
        t0 = curve.t(x0)
        v0 = tr.v
        mid = (x0 + x1) / 2
        half = (x1 - x0) / 2
        nodes = mid + half * _GL_X
        ends = np.array([mid, x1])
        vals = tr.values(np.concatenate([nodes, ends]), t0, v0)
        if vals is not None:
            whole = half * np.dot(_GL_W, vals[:GL_ORDER])
            vm = vals[GL_ORDER]
            h2 = half / 2
            n1 = (x0 + mid) / 2 + h2 * _GL_X
            n2 = (mid + x1) / 2 + h2 * _GL_X
            v1 = tr.values(n1, t0, v0)
            v2 = tr.values(n2, curve.t(mid), vm)
            if v1 is not None and v2 is not None:
                split = h2 * (np.dot(_GL_W, v1) + np.dot(_GL_W, v2))
                if abs(split - whole) <= tol * max(1.0, abs(split)):
                    total += split
                    tr.v = vals[GL_ORDER + 1]
                    continue
        # process the first half before the second
        stack.append((mid, x1, depth + 1))
        stack.append((x0, mid, depth + 1))
    return total


class PeriodPair(NamedTuple):
    a: complex
    aD: complex


class RealActionPair(NamedTuple):
    b: float
    bD: float


def real_actions(pp: PeriodPair) -> RealActionPair:
    return RealActionPair(pp.a.real, pp.aD.real)


def bs_residual(pp: PeriodPair, eps1: float, n: int, m: int) -> tuple[float, float]:
    return (pp.a.real - eps1 * math.pi * n, pp.aD.real - eps1 * math.pi * m)


def bs_initial_guess(curve_of_H, cycles: tuple[PathSpec, PathSpec], eps1: float,
                     n: int, m: int, h0: complex, tol: float = 1e-10,
                     max_iter: int = 50) -> complex:
    """Solve the Bohr-Sommerfeld conditions for the free classical parameter.

    ``curve_of_H(h)`` returns the :class:`SpectralCurveData` at ``h``.
    Newton on ``(Re h, Im h)`` with central differences.
    """
    def resid(h):
        c = curve_of_H(h)
        pp = PeriodPair(period(c, cycles[0]), period(c, cycles[1]))
        return np.array(bs_residual(pp, eps1, n, m))

    h = complex(h0)
    r = resid(h)
    for _ in range(max_iter):
        if np.abs(r).max() < tol:
            return h
        step = 1e-6 * (1 + abs(h))
        jac = np.empty((2, 2))
        for k, dh in enumerate((step, 1j * step)):
            jac[:, k] = (resid(h + dh) - resid(h - dh)) / (2 * step)
        dh = np.linalg.solve(jac, -r)
        damp = 1.0
        while damp > 1e-6:
            cand = h + damp * complex(*dh)
            rc = resid(cand)
            if np.abs(rc).max() < np.abs(r).max():
                break
            damp /= 2
        h, r = cand, rc
    raise BranchTrackingError("Bohr-Sommerfeld solve did not converge")


class WKBRow(NamedTuple):
    eps1: float
    trace: complex
    err: float


def wkb_trace_check(positions: Sequence[complex], classical_weights: Sequence[complex],
                    accessory: Sequence[complex], eps_list: Sequence[float],
                    cycle: PathSpec, delta_of_eps=None, **mono_opts) -> list[WKBRow]:
    """``err(eps) = |eps log L(eps) - i a|`` for the trace ``L`` of the
    transport along ``cycle``.

    The quantum oper at ``eps`` has weights ``delta_of_eps(l2, eps)`` (default:
    the classical ``l2``) and the classical accessory parameters.  The sheet
    of ``v`` is the one with ``Re(i a) >= 0``, so that ``exp(i a / eps)`` is
    the growing term of the trace, and the log branch is the one nearest
    ``i a / eps``.  Returns an empty list with a warning when ``a = 0``.
    """
    curve = SpectralCurveData.from_punctures(positions, classical_weights, accessory)
    a = period(curve, cycle)
    if abs(a) < 1e-12:
        log.warning("period vanishes; WKB check skipped")
        return []
    if (1j * a).real < 0:
        a = -a
    rows = []
    for eps in eps_list:
        if delta_of_eps is None:
            w = list(classical_weights)
        else:
            w = [delta_of_eps(x, eps) for x in classical_weights]
        config = OperConfig.from_arrays(eps, positions, w)
        oper = build_oper(config, accessory)
        check_clearance(cycle, config)
        tr = transport(oper, cycle, **mono_opts).trace
        target = 1j * a / eps
        lg = cmath.log(tr)
        k = round((target.imag - lg.imag) / (2 * math.pi))
        lg += 2j * math.pi * k
        rows.append(WKBRow(float(eps), tr, abs(eps * lg - 1j * a)))
    return rows
