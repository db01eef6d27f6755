"""Random constraint-satisfying opers for property checks."""

from __future__ import annotations

import numpy as np

from .monodromy import angular_order, default_basepoint
from .oper import Oper, OperConfig, build_oper
from .quantiser import reduce_accessory


def random_oper4(rng: np.random.Generator, jitter: float = 0.1,
                 delta_range: tuple[float, float] = (0.03, 0.12), delta_imag: float = 0.02,
                 free_box: float = 0.1, epsilon1: complex = 1.0) -> Oper:
    """Four punctures near ``0, 1, 2, 3`` with non-resonant weights.

    Punctures are listed in the angular order of the default basepoint so
    that the loop product relation holds.  The ranges keep traces moderate;
    the defaults keep ``|Tr|`` below about 100.
    """
    z = np.arange(4) + jitter * (rng.uniform(-1, 1, 4) + 1j * rng.uniform(-1, 1, 4))
    d = rng.uniform(*delta_range, 4) + 1j * rng.uniform(-delta_imag, delta_imag, 4)
    d = d * complex(epsilon1) ** 2
    cfg = OperConfig.from_arrays(epsilon1, z, d)
    order = angular_order(cfg.positions, default_basepoint(cfg))
    cfg = OperConfig.from_arrays(epsilon1, z[order], d[order])
    free = free_box * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return build_oper(cfg, reduce_accessory(cfg, [free]))


def random_oper3(rng: np.random.Generator, jitter: float = 0.1,
                 delta_range: tuple[float, float] = (0.03, 0.2), delta_imag: float = 0.02,
                 epsilon1: complex = 1.0) -> Oper:
    z = np.arange(3) + jitter * (rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3))
    d = (rng.uniform(*delta_range, 3) + 1j * rng.uniform(-delta_imag, delta_imag, 3))
    d = d * complex(epsilon1) ** 2
    cfg = OperConfig.from_arrays(epsilon1, z, d)
    order = angular_order(cfg.positions, default_basepoint(cfg))
    cfg = OperConfig.from_arrays(epsilon1, z[order], d[order])
    return build_oper(cfg, reduce_accessory(cfg, []))
