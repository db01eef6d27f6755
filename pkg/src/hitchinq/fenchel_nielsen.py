"""Complex Fenchel-Nielsen coordinates on SL(2) character varieties.

For the four-punctured sphere with boundary traces ``L_1..L_4`` the cubic
surface of ``(L_s, L_t, L_u)`` is parameterised by a length ``lam`` and a
twist ``kappa``:

    L_s          = 2 cos(lam / 2)
    L_t (L_s^2-4) = L_s b - 2 a + 2 cos(kappa)            * R
    L_u (L_s^2-4) = L_s a - 2 b - 2 cos(kappa + lam / 2)  * R

with ``a = L1 L3 + L2 L4``, ``b = L2 L3 + L1 L4``,
``c_ij = L_s^2 + L_i^2 + L_j^2 - L_s L_i L_j - 4`` and
``R = root_sign * sqrt(c_12) * sqrt(c_34)`` (principal square roots).
The ``root_sign`` field carries the analytic continuation of ``R`` along
paths; freshly inverted coordinates have ``root_sign = +1``.

Equivalences: ``(lam, kappa) ~ (lam + 4 pi, kappa) ~ (lam, kappa + 2 pi)
~ (-lam, -kappa)``, and ``kappa + pi`` with the opposite ``root_sign``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import DegenerateLocusError, OffSurfaceError, ValidationError
from .monodromy import TraceCoordinates, quartic_residual

DEGENERATE_TOL = 1e-8
SURFACE_TOL = 1e-6


@dataclass(frozen=True)
class FNCoords:
    lam: complex
    kappa: complex
    nu: int = 1
    root_sign: int = 1

    def __post_init__(self):
        if self.nu not in (1, 2):
            raise ValidationError("nu must be 1 (four-punctured sphere) or 2 (torus)")
        if self.root_sign not in (1, -1):
            raise ValidationError("root_sign must be +1 or -1")
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "kappa", complex(self.kappa))

    def shifted(self, n: int = 0, m: int = 0) -> "FNCoords":
        """Lattice translate ``(lam + 4 pi n, kappa + 2 pi nu m)``."""
        return replace(self, lam=self.lam + 4 * math.pi * n,
                       kappa=self.kappa + 2 * math.pi * self.nu * m)


def _check_ls(ls: complex):
    if abs(ls - 2) < DEGENERATE_TOL or abs(ls + 2) < DEGENERATE_TOL:
        raise DegenerateLocusError(f"L_s = {ls} is on the degenerate locus L_s = +-2")


def _structure(ls, L):
    L1, L2, L3, L4 = L
    a = L1 * L3 + L2 * L4
    b = L2 * L3 + L1 * L4
    c12 = ls * ls + L1 * L1 + L2 * L2 - ls * L1 * L2 - 4
    c34 = ls * ls + L3 * L3 + L4 * L4 - ls * L3 * L4 - 4
    return a, b, c12, c34


def fn_to_traces(fn: FNCoords, boundary: Sequence[complex]) -> TraceCoordinates:
    L = tuple(complex(x) for x in boundary)
    if len(L) != 4:
        raise ValidationError("need four boundary traces")
    ls = 2 * cmath.cos(fn.lam / 2)
    _check_ls(ls)
    a, b, c12, c34 = _structure(ls, L)
    root = fn.root_sign * cmath.sqrt(c12) * cmath.sqrt(c34)
    d = ls * ls - 4
    lt = (ls * b - 2 * a + 2 * cmath.cos(fn.kappa) * root) / d
    lu = (ls * a - 2 * b - 2 * cmath.cos(fn.kappa + fn.lam / 2) * root) / d
    return TraceCoordinates(L, ls, lt, lu)


def _surface_scale(tc: TraceCoordinates) -> float:
    vals = [abs(x) for x in tc.as_tuple()]
    big = max(vals + [1.0])
    return big ** 3 if len(vals) > 4 else 1.0


def traces_to_fn(tc: TraceCoordinates, surface_tol: float = SURFACE_TOL) -> FNCoords:
    """Principal-branch inverse of :func:`fn_to_traces`.

    ``Re lam`` lies in ``[0, 2 pi]`` and ``Re kappa`` in ``(-pi, pi]``.  Both
    ``cos kappa`` and ``sin kappa`` are read off from ``L_t`` and ``L_u``, which
    avoids the loss of accuracy of ``arccos`` near ``kappa = 0, pi``.
    """
    if tc.Ls is None or len(tc.L) != 4:
        raise ValidationError("need four-puncture trace coordinates")
    q = quartic_residual(tc)
    if abs(q) > surface_tol * _surface_scale(tc):
        raise OffSurfaceError(f"off-surface traces: quartic residual {abs(q):.3g}")
    ls = tc.Ls
    _check_ls(ls)
    lam = 2 * cmath.acos(ls / 2)
    a, b, c12, c34 = _structure(ls, tc.L)
    root = cmath.sqrt(c12) * cmath.sqrt(c34)
    if abs(root) < DEGENERATE_TOL * max(1.0, abs(ls) ** 2):
        raise DegenerateLocusError("c_12 c_34 vanishes; twist undefined")
    d = ls * ls - 4
    c = (tc.Lt * d - (ls * b - 2 * a)) / (2 * root)
    c_shift = -(tc.Lu * d - (ls * a - 2 * b)) / (2 * root)
    # cos(k + lam/2) = cos k cos(lam/2) - sin k sin(lam/2); sin(lam/2) != 0 off the degenerate locus
    sn = (c * cmath.cos(lam / 2) - c_shift) / cmath.sin(lam / 2)
    kappa = -1j * cmath.log(c + 1j * sn)
    return FNCoords(lam, kappa, nu=1)


class FNTracker:
    """Continuity tracking of ``(lam, kappa)`` along a sequence of samples.

    Each new principal-branch value is replaced by the equivalent
    representative closest to the last committed one.  Candidates are
    ``(s lam + 4 pi a, s kappa + pi b)`` with ``s = +-1``; odd ``b`` flips
    ``root_sign``.
    """

    def __init__(self, previous: FNCoords | None = None):
        self.previous = previous

    def resolve(self, fn: FNCoords, commit: bool = True) -> FNCoords:
        prev = self.previous
        if prev is None:
            out = fn
        else:
            best = None
            for s in (1, -1):
                lam = s * fn.lam
                kap = s * fn.kappa
                a = round((prev.lam - lam).real / (4 * math.pi))
                b = round((prev.kappa - kap).real / math.pi)
                cand = FNCoords(lam + 4 * math.pi * a, kap + math.pi * b, fn.nu,
                                fn.root_sign * (-1 if b % 2 else 1))
                dist = abs(cand.lam - prev.lam) + abs(cand.kappa - prev.kappa)
                if best is None or dist < best[0]:
                    best = (dist, cand)
            out = best[1]
        if commit:
            self.previous = out
        return out

    def state(self) -> dict | None:
        p = self.previous
        if p is None:
            return None
        return {"lam": p.lam, "kappa": p.kappa, "nu": p.nu, "root_sign": p.root_sign}

    @classmethod
    def from_state(cls, state: dict | None) -> "FNTracker":
        if state is None:
            return cls()
        return cls(FNCoords(state["lam"], state["kappa"], state.get("nu", 1),
                            state.get("root_sign", 1)))

    def copy(self) -> "FNTracker":
        return FNTracker(self.previous)


def torus_fn_to_traces(lam: complex, kappa: complex, L0: complex) -> tuple[complex, complex]:
    """``(L_a, L_b)`` on the one-holed torus with boundary trace ``L0``."""
    la = 2 * cmath.cos(complex(lam) / 2)
    _check_ls(la)
    lb = 2 * cmath.cos(complex(kappa) / 2) * cmath.sqrt(la * la + L0 - 2) / cmath.sqrt(la * la - 4)
    return la, lb
