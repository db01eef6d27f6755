"""Opers on the punctured sphere.

An oper here is the differential operator ``eps1**2 d^2/du^2 + t(u)`` with

    t(u) = sum_r  delta_r / (u - z_r)**2 + E_r / (u - z_r)

where ``delta_r`` are the double-pole weights and ``E_r`` the accessory
parameters.  All punctures sit at finite positions; regularity at infinity
is expressed by three linear constraints on ``(delta, E)``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ValidationError

RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class Puncture:
    """A regular singular point of ``t``.

    Give either ``weight`` (the double-pole coefficient) or ``spin``; when only
    the spin is known the weight is filled in by :class:`OperConfig` as
    ``eps1**2 * j * (j + 1)``.
    """

    position: complex
    weight: complex | None = None
    spin: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", complex(self.position))
        if self.weight is None and self.spin is None:
            raise ValidationError("puncture needs a weight or a spin")
        if self.weight is not None:
            object.__setattr__(self, "weight", complex(self.weight))
        if self.spin is not None:
            object.__setattr__(self, "spin", complex(self.spin))


def weight_from_spin(spin: complex, epsilon1: complex) -> complex:
    return epsilon1 ** 2 * spin * (spin + 1)


@dataclass(frozen=True)
class OperConfig:
    epsilon1: complex
    punctures: tuple[Puncture, ...]

    def __post_init__(self):
        eps = complex(self.epsilon1)
        if eps == 0:
            raise ValidationError("epsilon1 must be nonzero")
        object.__setattr__(self, "epsilon1", eps)
        resolved = []
        for p in self.punctures:
            if p.spin is not None:
                w = weight_from_spin(p.spin, eps)
                if p.weight is not None and abs(p.weight - w) > 1e-12 * max(1.0, abs(w)):
                    raise ValidationError(
                        f"weight {p.weight} inconsistent with spin {p.spin}"
                    )
                p = Puncture(p.position, w, p.spin)
            resolved.append(p)
        object.__setattr__(self, "punctures", tuple(resolved))
        if len(resolved) < 3:
            raise ValidationError("need at least 3 punctures")
        pos = self.positions
        for i in range(len(pos)):
            for j in range(i):
                if pos[i] == pos[j]:
                    raise ValidationError(f"duplicate punctures at {pos[i]}")

    @classmethod
    def from_arrays(cls, epsilon1, positions, weights) -> "OperConfig":
        if len(positions) != len(weights):
            raise ValidationError("positions and weights differ in length")
        return cls(epsilon1, tuple(Puncture(z, d) for z, d in zip(positions, weights)))

    @property
    def n(self) -> int:
        return len(self.punctures)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.punctures], dtype=complex)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.punctures], dtype=complex)

    def min_separation(self) -> float:
        z = self.positions
        d = np.abs(z[:, None] - z[None, :])
        return float(d[~np.eye(len(z), dtype=bool)].min())

    def with_position(self, index: int, position: complex) -> "OperConfig":
        ps = list(self.punctures)
        ps[index] = Puncture(position, ps[index].weight)
        return OperConfig(self.epsilon1, tuple(ps))


@dataclass(frozen=True)
class AccessoryVector:
    values: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)


@dataclass(frozen=True)
class Oper:
    config: OperConfig
    accessory: AccessoryVector
    infinity_residual: tuple[complex, complex, complex] = field(init=False)

    def __post_init__(self):
        if len(self.accessory) != self.config.n:
            raise ValidationError(
                f"{len(self.accessory)} accessory parameters for {self.config.n} punctures"
            )
        object.__setattr__(self, "infinity_residual", _infinity_residual(
            self.config.positions, self.config.weights, self.accessory.as_array()))

    @property
    def epsilon1(self) -> complex:
        return self.config.epsilon1

    def kernel_args(self):
        """Plain arrays handed to the transport kernel."""
        return (self.config.positions, self.config.weights,
                self.accessory.as_array(), 1.0 / self.config.epsilon1)


def build_oper(config: OperConfig, accessory: AccessoryVector | Sequence[complex]) -> Oper:
    """Validate and bundle oper data.  Does not enforce regularity at infinity."""
    if not isinstance(accessory, AccessoryVector):
        accessory = AccessoryVector(tuple(accessory))
    return Oper(config, accessory)


def eval_t(oper: Oper, u: complex) -> complex:
    u = complex(u)
    total = 0j
    for p, e in zip(oper.config.punctures, oper.accessory.values):
        if u == p.position:
            raise ValidationError(f"t evaluated at the puncture {u}")
        w = 1.0 / (u - p.position)
        total += (p.weight * w + e) * w
    return total


def _infinity_residual(z, delta, energy):
    return (
        complex(np.sum(energy)),
        complex(np.sum(energy * z + delta)),
        complex(np.sum(energy * z ** 2 + 2 * delta * z)),
    )


def infinity_constraints_residual(oper: Oper) -> tuple[complex, complex, complex]:
    """Coefficients of ``u^-1, u^-2, u^-3`` in the expansion of ``t`` at infinity.

    All three vanish exactly when ``t(u) = O(u^-4)``.
    """
    return oper.infinity_residual


class LocalExponents(NamedTuple):
    rho_plus: complex
    rho_minus: complex
    m: complex
    trace: complex
    resonant: bool


def local_exponents(oper: Oper | OperConfig, r: int) -> LocalExponents:
    """Indicial exponents at puncture ``r`` and the predicted local trace.

    ``rho`` solves ``eps1**2 rho (rho - 1) + delta_r = 0``.  The returned
    ``m`` satisfies ``2 cos(2 pi m) = trace`` with ``Im m >= 0`` and
    ``Re m`` in ``[0, 1)``; for real ``m`` the representative in ``[0, 1/2]``
    is used.
    """
    config = oper.config if isinstance(oper, Oper) else oper
    if not 0 <= r < config.n:
        raise ValidationError(f"puncture index {r} out of range")
    x = config.punctures[r].weight / config.epsilon1 ** 2
    root = cmath.sqrt(1 - 4 * x)
    rho_p = (1 + root) / 2
    rho_m = (1 - root) / 2
    trace = cmath.exp(2j * cmath.pi * rho_p) + cmath.exp(2j * cmath.pi * rho_m)
    resonant = (abs(root.imag) < RESONANCE_TOL
                and abs(root.real - round(root.real)) < RESONANCE_TOL)
    m = rho_p if rho_p.imag > 0 else -rho_p
    m = complex(m.real % 1.0, m.imag)
    if abs(m.imag) <= 1e-15 and m.real > 0.5:
        m = complex(1.0 - m.real, 0.0)
    return LocalExponents(rho_p, rho_m, m, trace, resonant)
