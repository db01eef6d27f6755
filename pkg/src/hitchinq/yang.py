"""Generating function ``W`` and the special functions of its nodal limit.

``W`` is known through its differential

    dW = (E_q / eps1**2) dq + (i / 4 pi) kappa dlam

on the family of four-punctured spheres with one moving puncture ``q``;
``E_q`` is the accessory parameter at that puncture, ``lam`` and ``kappa``
the Fenchel-Nielsen coordinates of the oper's monodromy.  Only increments
of ``W`` are computed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, NumericalError
from .fenchel_nielsen import FNTracker
from .oper import OperConfig
from .quantiser import E_of_lambda, lambda_of_E

QUAD_TOL = 1e-12


def _ups_integrand(u):
    return special.loggamma(u) - special.loggamma(1 - u)


def _leg(a: complex, b: complex) -> complex:
    """Integral of the integrand along the straight segment ``a -> b``."""
    d = b - a
    if d == 0:
        return 0j
    re = integrate.quad(lambda s: (_ups_integrand(a + s * d) * d).real, 0, 1,
                        epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    im = integrate.quad(lambda s: (_ups_integrand(a + s * d) * d).imag, 0, 1,
                        epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    return complex(re, im)


def upsilon_cl(x: complex, height: float = 1.0) -> complex:
    """``int_{1/2}^x log(Gamma(u) / Gamma(1-u)) du`` with a continuous log.

    Real ``x`` outside ``(0, 1)`` is reached along ``1/2 -> 1/2 + i h ->
    x + i h -> x``, so the logarithm is continued through the upper half
    plane.  Other ``x`` use the straight segment.
    """
    x = complex(x)
    if x == 0.5:
        return 0j
    if x.imag == 0 and not 0 < x.real < 1:
        h = 1j * height
        pts = (0.5, 0.5 + h, x + h, x)
        return sum(_leg(a, b) for a, b in zip(pts[:-1], pts[1:]))
    return _leg(0.5, x)


@dataclass(frozen=True)
class PantsLengths:
    l1: complex
    l2: complex
    l3: complex


def pants_N(l: PantsLengths | Sequence[complex]) -> complex:
    """Three-holed-sphere term of the nodal asymptotics.

    ``l3`` enters the signed sum unsigned; ``Re`` is applied as written,
    which is natural for real lengths.
    """
    if not isinstance(l, PantsLengths):
        l = PantsLengths(*l)
    l1, l2, l3 = complex(l.l1), complex(l.l2), complex(l.l3)
    c = 1j / (4 * math.pi)
    total = 0j
    for s1 in (1, -1):
        for s2 in (1, -1):
            total += upsilon_cl(0.5 + c * (s1 * l1 + s2 * l2 + l3))
    tail = sum(upsilon_cl(1 + 1j * li / (2 * math.pi)).real for li in (l1, l2, l3))
    return total / 2 - tail / 2


def natural_delta(l: complex) -> complex:
    """``rho (1 - rho)`` with ``rho = l / 4 pi``: the double-pole weight (in
    units of ``eps1**2``) whose local trace is ``2 cos(l / 2)``."""
    rho = complex(l) / (4 * math.pi)
    return rho * (1 - rho)


def boundary_length(weight: complex, epsilon1: complex) -> complex:
    """``l = 4 pi rho_+`` for a puncture of the given weight."""
    x = complex(weight) / complex(epsilon1) ** 2
    return 4 * math.pi * (1 + cmath.sqrt(1 - 4 * x)) / 2


def w_nodal_asymptotics(lam: complex, boundary: Sequence[complex], q: complex,
                        delta: Callable[[complex], complex] = natural_delta) -> complex:
    """Leading behaviour of ``W`` as the punctures at ``0`` and ``q`` merge.

    ``lam`` is the length of the curve around them and ``boundary`` the four
    puncture lengths; the two pants are ``(lam, l1, l2)`` and ``(lam, l3, l4)``.
    """
    l1, l2, l3, l4 = (complex(x) for x in boundary)
    lam = complex(lam)
    log_term = (delta(lam) - delta(l1) - delta(l2)) * cmath.log(complex(q))
    return log_term + pants_N((l1, l2, lam)) + pants_N((l3, l4, lam))


def yang_Y(w: complex) -> complex:
    """The rescaled generating function ``4 pi i W``."""
    return 4j * math.pi * complex(w)


@dataclass(frozen=True)
class MovingPuncture:
    """One-parameter family: puncture ``index`` of ``base`` placed at ``q``."""

    base: OperConfig
    index: int = 1

    def __call__(self, q: complex) -> OperConfig:
        return self.base.with_position(self.index, complex(q))


@dataclass(frozen=True)
class WSample:
    lam: complex
    q: complex
    e_free: complex
    e_q: complex
    kappa: complex
    tracker: FNTracker = field(compare=False, repr=False)


@dataclass(frozen=True)
class WPathSample:
    path: tuple[tuple[complex, complex], ...]
    samples: tuple[WSample, ...]
    increment: complex
    segment_increments: tuple[complex, ...]


class _Solver:
    """Evaluate ``(E, kappa)`` at ``(lam, q)`` by continuation from a neighbour."""

    def __init__(self, family: MovingPuncture, mono_opts):
        self.family = family
        self.mono = mono_opts

    def solve(self, lam, q, seed: WSample, depth: int = 0) -> WSample:
        try:
            return self._solve(lam, q, seed)
        except NumericalError:
            if depth >= 10:
                raise
        mid = self.solve((lam + seed.lam) / 2, (q + seed.q) / 2, seed, depth + 1)
        return self.solve(lam, q, mid, depth + 1)

    def _solve(self, lam, q, seed: WSample) -> WSample:
        cfg = self.family(q)
        acc = E_of_lambda(cfg, lam, seed.e_free, tracker=seed.tracker, **self.mono)
        e_free = acc.values[0]
        tr = seed.tracker.copy()
        fn = lambda_of_E(cfg, e_free, tr, **self.mono)
        if abs(fn.lam - lam) > 1e-8 * max(1.0, abs(lam)):
            raise ConvergenceError(f"lost the lam branch at (lam, q) = ({lam}, {q})")
        return WSample(lam, q, e_free, acc.values[self.family.index], fn.kappa, tr)


def initial_sample(family: MovingPuncture, lam: complex, q: complex, e_guess: complex,
                   **mono_opts) -> WSample:
    """Start a path: solve ``lam(E) = lam`` at ``q`` from ``e_guess``.

    The branch is the one continued from the principal value at ``e_guess``.
    """
    cfg = family(q)
    tr = FNTracker()
    lambda_of_E(cfg, e_guess, tr, **mono_opts)
    seed = WSample(complex(lam), complex(q), complex(e_guess), 0j, 0j, tr)
    return _Solver(family, mono_opts).solve(complex(lam), complex(q), seed)


def _segment_integral(solver, eps2, a, b, start: WSample, tol, max_level):
    """Romberg integration of ``dW`` along the straight segment ``a -> b``.

    Samples are computed in path order so every new point is continued from
    its predecessor.
    """
    (la, qa), (lb, qb) = a, b
    dlam, dq = lb - la, qb - qa
    cache = {0.0: start}

    def sample_at(s_values):
        keys = sorted(cache)
        for s in s_values:
            if s in cache:
                continue
            prev = max(k for k in keys if k < s)
            cache[s] = solver.solve(la + s * dlam, qa + s * dq, cache[prev])
            keys = sorted(cache)

    def f(s):
        w = cache[s]
        return w.e_q / eps2 * dq + 1j / (4 * math.pi) * w.kappa * dlam

    table = []
    for level in range(max_level + 1):
        n = 2 ** (level + 1)
        grid = [k / n for k in range(n + 1)]
        sample_at(grid)
        vals = np.array([f(s) for s in grid])
        trap = (vals[0] / 2 + vals[1:-1].sum() + vals[-1] / 2) / n
        row = [trap]
        for k, prev in enumerate(table[-1] if table else []):
            row.append(row[k] + (row[k] - prev) / (4 ** (k + 1) - 1))
        table.append(row)
        if level >= 2 and abs(row[-1] - table[-2][-1]) <= tol:
            return row[-1], cache[1.0], [cache[s] for s in sorted(cache)]
    raise ConvergenceError(f"quadrature of dW did not reach {tol:g} on segment {a} -> {b}")


def w_increment(family: MovingPuncture, path: Sequence[tuple[complex, complex]],
                start: WSample, tol: float = 1e-9, max_level: int = 7,
                **mono_opts) -> WPathSample:
    """``Delta W`` along the polygon through the ``(lam, q)`` vertices.

    ``start`` is a solved sample at the first vertex (see :func:`initial_sample`).
    """
    path = tuple((complex(l), complex(q)) for l, q in path)
    if abs(path[0][0] - start.lam) > 1e-12 or abs(path[0][1] - start.q) > 1e-12:
        raise NumericalError("start sample does not sit at the first vertex")
    solver = _Solver(family, mono_opts)
    eps2 = complex(family.base.epsilon1) ** 2
    cur = start
    samples = [start]
    parts = []
    for a, b in zip(path[:-1], path[1:]):
        if a == b:
            parts.append(0j)
            continue
        val, cur, seg = _segment_integral(solver, eps2, a, b, cur, tol, max_level)
        parts.append(val)
        samples.extend(seg[1:])
    return WPathSample(path, tuple(samples), complex(sum(parts)), tuple(parts))
