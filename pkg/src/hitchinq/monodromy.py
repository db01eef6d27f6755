"""Monodromy of ``eps1**2 psi'' + t psi = 0`` by numerical parallel transport.

The ODE is integrated as the first-order system

    d/du (psi, eps1 psi') = (1/eps1) [[0, 1], [-t, 0]] (psi, eps1 psi')

along polygonal paths.  A transport matrix ``T`` maps the fundamental matrix
at the start of a path to the one at its end, so following ``P1`` and then
``P2`` gives ``T(P2) @ T(P1)``.  With loops based at a common point and
labelled so that ``gamma_1 gamma_2 ... gamma_n`` (first ``gamma_1``) is
contractible, the monodromy matrices satisfy ``M_n ... M_1 = 1``.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .errors import ClearanceError, NumericalError, StepUnderflowError, ValidationError
from .oper import Oper, OperConfig

RTOL = 1e-12
ATOL = 1e-14
MAX_STEPS = 400_000
CIRCLE_SIDES = 16
RADIUS_FACTOR = 0.1
CLEARANCE_FACTOR = 1e-3


@dataclass(frozen=True)
class PathSpec:
    vertices: tuple[complex, ...]
    closed: bool = False

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 1:
            raise ValidationError("a path needs at least one vertex")
        object.__setattr__(self, "vertices", verts)

    def segments(self):
        v = list(self.vertices)
        if self.closed and v[-1] != v[0]:
            v.append(v[0])
        return list(zip(v[:-1], v[1:]))

    def points(self) -> list[complex]:
        v = list(self.vertices)
        if self.closed and v[-1] != v[0]:
            v.append(v[0])
        return v

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(reversed(self.points())))

    def then(self, other: "PathSpec") -> "PathSpec":
        """Concatenate; ``other`` must start where this path ends."""
        a, b = self.points(), other.points()
        if abs(a[-1] - b[0]) > 1e-14 * max(1.0, abs(a[-1])):
            raise ValidationError("paths do not join")
        return PathSpec(tuple(a + b[1:]))

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.points()[-1]


def circle_path(center: complex, radius: float, sides: int = CIRCLE_SIDES,
                start_angle: float = 0.0, turns: int = 1) -> PathSpec:
    """Counterclockwise regular polygon, closed, starting at ``start_angle``."""
    k = np.arange(sides * abs(turns) + 1)
    sign = 1 if turns >= 0 else -1
    pts = center + radius * np.exp(1j * (start_angle + sign * 2 * np.pi * k / sides))
    pts[-1] = pts[0]
    return PathSpec(tuple(pts))


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    d = b - a
    if d == 0:
        return abs(p - a)
    s = ((p - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(a + s * d - p)


def default_clearance(config: OperConfig) -> float:
    return CLEARANCE_FACTOR * config.min_separation()


def check_clearance(path: PathSpec, config: OperConfig, clearance: float | None = None):
    if clearance is None:
        clearance = default_clearance(config)
    for a, b in path.segments():
        for r, z in enumerate(config.positions):
            d = _segment_distance(a, b, z)
            if d < clearance:
                raise ClearanceError(
                    f"segment {a}->{b} passes within {d:.3g} of puncture {r} at {z}"
                )
    if len(path.vertices) == 1:
        for z in config.positions:
            if abs(path.vertices[0] - z) < clearance:
                raise ClearanceError(f"point {path.vertices[0]} too close to puncture {z}")


@dataclass(frozen=True)
class MonodromyMatrix:
    entries: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(self.entries[0, 0] + self.entries[1, 1])

    @property
    def det(self) -> complex:
        m = self.entries
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def __matmul__(self, other: "MonodromyMatrix") -> "MonodromyMatrix":
        return MonodromyMatrix(self.entries @ other.entries)

    def inverse(self) -> "MonodromyMatrix":
        return MonodromyMatrix(sl2_inverse(self.entries))


def sl2_inverse(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def transport(oper: Oper, path: PathSpec, *, rtol: float = RTOL, atol: float = ATOL,
              clearance: float | None = None, backend: str | None = None,
              max_steps: int = MAX_STEPS) -> MonodromyMatrix:
    """Transport matrix of the oper's ODE along ``path``."""
    check_clearance(path, oper.config, clearance)
    kernel = _backend.get_kernel(backend)
    z, delta, energy, inv_eps = oper.kernel_args()
    y = (1 + 0j, 0j, 0j, 1 + 0j)
    for a, b in path.segments():
        y, _, _, status = kernel(z, delta, energy, inv_eps, a, b, y, rtol, atol,
                                 0.05, max_steps)
        if status == 1:
            raise StepUnderflowError(f"step size underflow on segment {a}->{b}")
        if status != 0:
            raise NumericalError(f"step budget exhausted on segment {a}->{b}")
    if not all(math.isfinite(abs(x)) for x in y):
        raise NumericalError("transport overflowed")
    return MonodromyMatrix(np.array([[y[0], y[1]], [y[2], y[3]]], dtype=complex))


@dataclass(frozen=True)
class MonodromyRep:
    basepoint: complex
    matrices: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.matrices)

    def product(self) -> np.ndarray:
        """``M_n ... M_1``, the transport around all loops in order."""
        out = np.eye(2, dtype=complex)
        for m in self.matrices:
            out = m @ out
        return out

    def conjugated(self, g: np.ndarray) -> "MonodromyRep":
        """Representation in the basis ``g``: each ``M -> g^-1 M g``."""
        gi = np.linalg.inv(g)
        return MonodromyRep(self.basepoint, tuple(gi @ m @ g for m in self.matrices))


def default_basepoint(config: OperConfig) -> complex:
    z = config.positions
    spread = float(np.abs(z[:, None] - z[None, :]).max())
    return complex(z.mean() + 1j * spread)


def angular_order(positions: Sequence[complex], basepoint: complex) -> list[int]:
    """Indices of ``positions`` sorted so that the standard keyhole loops from
    ``basepoint`` compose to a loop around all punctures.

    Valid when ``basepoint`` lies outside the convex hull of the punctures.
    Sorting is by the angle of ``z - basepoint`` measured counterclockwise
    from the direction pointing away from the hull.
    """
    z = np.asarray(positions, dtype=complex)
    centre = z.mean()
    out = centre - basepoint
    ref = -out / abs(out)
    ang = np.angle((z - basepoint) / ref) % (2 * np.pi)
    return [int(i) for i in np.argsort(ang)]


def keyhole(config: OperConfig, r: int, basepoint: complex,
            sides: int = CIRCLE_SIDES, radius_factor: float = RADIUS_FACTOR):
    """``(approach, circle)`` paths for the loop around puncture ``r``.

    The full loop is ``approach``, then ``circle`` (counterclockwise), then
    ``approach`` reversed.
    """
    z = config.positions
    zr = z[r]
    others = np.delete(z, r)
    radius = radius_factor * float(np.abs(others - zr).min())
    direction = (basepoint - zr) / abs(basepoint - zr)
    entry = zr + radius * direction
    approach = PathSpec((basepoint, entry))
    circle = circle_path(zr, radius, sides, cmath.phase(direction))
    return approach, circle


def keyhole_loop(config: OperConfig, r: int, basepoint: complex | None = None,
                 **kw) -> PathSpec:
    if basepoint is None:
        basepoint = default_basepoint(config)
    approach, circle = keyhole(config, r, basepoint, **kw)
    return approach.then(circle).then(approach.reversed())


def _loop_matrix(oper, r, basepoint, opts):
    approach, circle = keyhole(oper.config, r, basepoint)
    t_in = transport(oper, approach, **opts).entries
    c = transport(oper, circle, **opts).entries
    return sl2_inverse(t_in) @ c @ t_in


def monodromy_rep(oper: Oper, basepoint: complex | None = None, *,
                  threads: int | None = None, **opts) -> MonodromyRep:
    """Monodromy matrices around each puncture, in the configuration's order.

    The relation ``M_n ... M_1 = 1`` holds when the punctures are listed in
    :func:`angular_order` with respect to the basepoint (for punctures on a
    horizontal line and the default basepoint this is left to right).
    """
    if basepoint is None:
        basepoint = default_basepoint(oper.config)
    basepoint = complex(basepoint)
    check_clearance(PathSpec((basepoint,)), oper.config, opts.get("clearance"))
    idx = range(oper.config.n)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            mats = list(pool.map(lambda r: _loop_matrix(oper, r, basepoint, opts), idx))
    else:
        mats = [_loop_matrix(oper, r, basepoint, opts) for r in idx]
    return MonodromyRep(basepoint, tuple(mats))


def cyclic_residual(rep: MonodromyRep) -> float:
    return float(np.abs(rep.product() - np.eye(2)).max())


@dataclass(frozen=True)
class TraceCoordinates:
    L: tuple[complex, ...]
    Ls: complex | None = None
    Lt: complex | None = None
    Lu: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(complex(x) for x in self.L))
        for name in ("Ls", "Lt", "Lu"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, complex(v))

    def as_tuple(self) -> tuple[complex, ...]:
        extra = () if self.Ls is None else (self.Ls, self.Lt, self.Lu)
        return self.L + extra


def trace_coordinates(rep: MonodromyRep) -> TraceCoordinates:
    m = rep.matrices
    if rep.n == 3:
        return TraceCoordinates(tuple(np.trace(x) for x in m))
    if rep.n == 4:
        return TraceCoordinates(
            tuple(np.trace(x) for x in m),
            np.trace(m[0] @ m[1]), np.trace(m[0] @ m[2]), np.trace(m[1] @ m[2]),
        )
    raise ValidationError(f"trace coordinates implemented for n=3,4, got n={rep.n}")


def quartic_residual(tc: TraceCoordinates) -> complex:
    """Left minus right side of the four-punctured-sphere trace relation."""
    if tc.Ls is None or len(tc.L) != 4:
        raise ValidationError("quartic relation needs four-puncture traces")
    L1, L2, L3, L4 = tc.L
    s, t, u = tc.Ls, tc.Lt, tc.Lu
    return (L1 * L2 * L3 * L4 + s * t * u + s * s + t * t + u * u
            + L1 * L1 + L2 * L2 + L3 * L3 + L4 * L4
            - (L1 * L2 + L3 * L4) * s - (L1 * L3 + L2 * L4) * t
            - (L2 * L3 + L1 * L4) * u - 4)
