"""Real-holonomy quantisation conditions on the four-punctured sphere.

The unknown is the single free accessory parameter ``E_1``; the remaining
three are fixed by regularity at infinity.  Conditions:

    Re lam(E) = 2 pi n,    Re kappa(E) = nu pi m

with ``(lam, kappa)`` the Fenchel-Nielsen coordinates of the monodromy,
continued in ``E`` by an :class:`FNTracker`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BranchTrackingError, ConvergenceError, NumericalError, ValidationError
from .fenchel_nielsen import FNCoords, FNTracker, traces_to_fn
from .monodromy import MonodromyRep, TraceCoordinates, monodromy_rep, trace_coordinates
from .oper import AccessoryVector, Oper, OperConfig, build_oper


class HolonomyKind(str, enum.Enum):
    SL2R = "SL2R"
    SU2 = "SU2"
    REDUCIBLE = "REDUCIBLE"
    NONE = "NONE"


@dataclass(frozen=True)
class QuantisationLabel:
    n: int
    m: int
    nu: int = 1

    def __post_init__(self):
        if self.nu != 1:
            raise ValidationError("only the four-punctured sphere channel (nu=1) is solvable")


def reduce_accessory(config: OperConfig, free: Sequence[complex]) -> AccessoryVector:
    """Full accessory vector with ``free`` first and the last three fixed by
    the infinity constraints."""
    n = config.n
    free = np.asarray(free, dtype=complex).reshape(-1)
    if free.size != n - 3:
        raise ValidationError(f"expected {n - 3} free accessory parameters, got {free.size}")
    z = config.positions
    d = config.weights
    zf, zl = z[: n - 3], z[n - 3:]
    a = np.vstack([np.ones(3), zl, zl ** 2])
    rhs = -np.array([
        free.sum(),
        (free * zf).sum() + d.sum(),
        (free * zf ** 2).sum() + 2 * (d * z).sum(),
    ])
    if abs(np.linalg.det(a)) < 1e-14 * max(1.0, float(np.abs(zl).max())) ** 3:
        raise ValidationError("singular constraint system")
    last = np.linalg.solve(a, rhs)
    return AccessoryVector(tuple(free) + tuple(last))


def oper_of_E(config: OperConfig, e_free: complex) -> Oper:
    return build_oper(config, reduce_accessory(config, [e_free]))


@dataclass(frozen=True)
class Evaluation:
    """Everything computed from one monodromy evaluation at ``E_free``."""

    e_free: complex
    oper: Oper
    rep: MonodromyRep
    traces: TraceCoordinates
    fn: FNCoords


def evaluate(config: OperConfig, e_free: complex, tracker: FNTracker | None = None,
             commit: bool = True, **mono_opts) -> Evaluation:
    if config.n != 4:
        raise ValidationError("quantisation implemented for n = 4")
    oper = oper_of_E(config, e_free)
    rep = monodromy_rep(oper, **mono_opts)
    tc = trace_coordinates(rep)
    fn = traces_to_fn(tc)
    if tracker is not None:
        fn = tracker.resolve(fn, commit=commit)
    return Evaluation(complex(e_free), oper, rep, tc, fn)


def lambda_of_E(config: OperConfig, e_free: complex, tracker: FNTracker | None = None,
                **mono_opts) -> FNCoords:
    return evaluate(config, e_free, tracker, **mono_opts).fn


def residual_of_fn(fn: FNCoords, label: QuantisationLabel) -> tuple[float, float]:
    return (fn.lam.real - 2 * math.pi * label.n,
            fn.kappa.real - label.nu * math.pi * label.m)


def nearest_representative(fn: FNCoords, label: QuantisationLabel) -> FNCoords:
    """Equivalent coordinates (lattice and reflection) closest to the label."""
    best = None
    for s in (1, -1):
        lam, kap = s * fn.lam, s * fn.kappa
        a = round((2 * math.pi * label.n - lam.real) / (4 * math.pi))
        b = round((math.pi * label.m - kap.real) / (2 * math.pi))
        cand = FNCoords(lam + 4 * math.pi * a, kap + 2 * math.pi * b, fn.nu, fn.root_sign)
        r = residual_of_fn(cand, label)
        if best is None or abs(r[0]) + abs(r[1]) < best[0]:
            best = (abs(r[0]) + abs(r[1]), cand)
    return best[1]


def _orbit_residual(fn: FNCoords, label: QuantisationLabel) -> tuple[float, float]:
    return residual_of_fn(nearest_representative(fn, label), label)


def quantisation_residual(config: OperConfig, e_free: complex, label: QuantisationLabel,
                          tracker: FNTracker | None = None, **mono_opts) -> tuple[float, float]:
    """``(Re lam - 2 pi n, Re kappa - nu pi m)``.

    Without a tracker the principal branch is used and the label is matched
    modulo the lattice and ``(lam, kappa) -> (-lam, -kappa)``.
    """
    fn = lambda_of_E(config, e_free, tracker, **mono_opts)
    if tracker is None:
        return _orbit_residual(fn, label)
    return residual_of_fn(fn, label)


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 50
    fd_step: float = 1e-6
    min_damping: float = 2.0 ** -20
    reality_tol: float = 1e-7
    mono_opts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpectrumPoint:
    label: QuantisationLabel
    accessory: AccessoryVector
    fn: FNCoords
    residual: tuple[float, float]
    holonomy_class: HolonomyKind
    eigenvalues: tuple[complex, ...]
    traces: TraceCoordinates
    accepted: bool
    iterations: int
    tracker_state: dict | None = None
    warnings: tuple[str, ...] = ()


def _max_imag(tc: TraceCoordinates) -> float:
    return max(abs(x.imag) for x in tc.as_tuple())


def continue_tracker(config: OperConfig, e_target: complex, reference: complex,
                     tracker: FNTracker | None = None, max_jump: float = 0.25,
                     max_points: int = 20000, **mono_opts) -> FNTracker:
    """Carry the FN branch along the segment ``reference -> e_target``.

    Steps are halved until successive samples differ by less than
    ``max_jump`` in ``|d lam| + |d kappa|``.
    """
    tracker = tracker.copy() if tracker is not None else FNTracker()
    a, b = complex(reference), complex(e_target)
    if tracker.previous is None:
        tracker.resolve(lambda_of_E(config, a, **mono_opts))
    s, ds, used = 0.0, 0.05, 0
    while s < 1.0:
        ds = min(ds, 1.0 - s)
        prev = tracker.previous
        fn = tracker.resolve(lambda_of_E(config, a + (s + ds) * (b - a), **mono_opts),
                             commit=False)
        jump = abs(fn.lam - prev.lam) + abs(fn.kappa - prev.kappa)
        used += 1
        if used > max_points:
            raise BranchTrackingError("branch tracking exceeded its sample budget")
        if jump > max_jump and ds > 1e-9:
            ds /= 2
            continue
        tracker.previous = fn
        s += ds
        if jump < max_jump / 4:
            ds *= 1.5
    return tracker


def solve_spectrum(config: OperConfig, label: QuantisationLabel, e0: complex,
                   options: SolverOptions | None = None,
                   tracker: FNTracker | None = None) -> SpectrumPoint:
    """Damped Newton on ``(Re E_free, Im E_free)`` for the label's conditions.

    With a seeded ``tracker`` (see :func:`continue_tracker`) the label refers
    to the continued branch of ``(lam, kappa)``.  Without one, the branch is
    fixed at ``e0`` as the representative nearest the label modulo the
    lattice and ``(lam, kappa) -> -(lam, kappa)``; only ``n`` and ``m`` mod 2
    are then meaningful.  The tracker is advanced only on accepted iterates.
    """
    from .sov import invariant_hermitian_form

    opt = options or SolverOptions()
    mono = opt.mono_opts
    e = complex(e0)
    if tracker is None or tracker.previous is None:
        ev0 = evaluate(config, e, None, **mono)
        tracker = FNTracker(nearest_representative(ev0.fn, label))
    else:
        tracker = tracker.copy()

    def resid(e):
        ev = evaluate(config, e, None, **mono)
        fn = tracker.resolve(ev.fn, commit=False)
        return np.array(residual_of_fn(fn, label)), ev, fn

    r, ev, fn = resid(e)
    tracker.previous = fn
    it = 0
    while np.abs(r).max() > opt.tol:
        if it >= opt.max_iter:
            raise ConvergenceError(
                f"no convergence for label ({label.n},{label.m}) after {it} iterations; "
                f"|residual| = {np.abs(r).max():.3g} at E = {e}")
        it += 1
        h = opt.fd_step * (1 + abs(e))
        jac = np.empty((2, 2))
        for k, de in enumerate((h, 1j * h)):
            rp = resid(e + de)[0]
            rm = resid(e - de)[0]
            jac[:, k] = (rp - rm) / (2 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at E = {e}") from exc
        damp = 1.0
        norm0 = np.abs(r).max()
        while True:
            cand = e + damp * complex(step[0], step[1])
            try:
                rc, evc, fnc = resid(cand)
                ok = np.abs(rc).max() < norm0
            except NumericalError:
                ok = False
            if ok:
                break
            damp /= 2
            if damp < opt.min_damping:
                raise ConvergenceError(f"line search failed at E = {e}")
        e, r, ev, fn = cand, rc, evc, fnc
        tracker.previous = fn

    fn = tracker.previous
    cls = invariant_hermitian_form(ev.rep)
    warnings = []
    accepted = cls.kind is HolonomyKind.SL2R and _max_imag(ev.traces) <= opt.reality_tol
    if cls.kind is not HolonomyKind.SL2R:
        warnings.append(f"holonomy class {cls.kind.value}, point not accepted")
    elif not accepted:
        warnings.append("traces not real to tolerance")
    return SpectrumPoint(
        label=label,
        accessory=ev.oper.accessory,
        fn=fn,
        residual=tuple(float(x) for x in r),
        holonomy_class=cls.kind,
        eigenvalues=(e,),
        traces=ev.traces,
        accepted=accepted,
        iterations=it,
        tracker_state=tracker.state(),
        warnings=tuple(warnings),
    )


def E_of_lambda(config: OperConfig, target: complex, e0: complex, tol: float = 1e-10,
                max_iter: int = 50, tracker: FNTracker | None = None,
                **mono_opts) -> AccessoryVector:
    """Invert ``E -> lam(E)`` by complex Newton starting from ``e0``.

    ``lam`` is continued with a tracker seeded at ``e0`` so that targets
    outside the principal strip are reachable.
    """
    tracker = tracker.copy() if tracker is not None else FNTracker()
    target = complex(target)
    e = complex(e0)
    lam = lambda_of_E(config, e, tracker, **mono_opts).lam
    for _ in range(max_iter):
        f = lam - target
        if abs(f) <= tol * max(1.0, abs(target)):
            return reduce_accessory(config, [e])
        h = 1e-6 * (1 + abs(e))
        probe = tracker.copy()
        lp = lambda_of_E(config, e + h, probe, **mono_opts).lam
        probe = tracker.copy()
        lm = lambda_of_E(config, e - h, probe, **mono_opts).lam
        deriv = (lp - lm) / (2 * h)
        if deriv == 0:
            raise ConvergenceError(f"d lam / dE vanishes at E = {e}")
        step = -f / deriv
        damp = 1.0
        while True:
            probe = tracker.copy()
            try:
                lc = lambda_of_E(config, e + damp * step, probe, **mono_opts).lam
                if abs(lc - target) < abs(f):
                    break
            except NumericalError:
                pass
            damp /= 2
            if damp < 2.0 ** -20:
                raise ConvergenceError(f"line search failed at E = {e}, |f| = {abs(f):.3g}")
        e += damp * step
        lam = lc
        tracker = probe
    raise ConvergenceError(f"E_of_lambda did not converge to {target}")


def grid_oracle(config: OperConfig, label: QuantisationLabel, re_range, im_range,
                step: float, refine: Callable | None = None, **mono_opts):
    """Brute-force minimiser of ``|r1| + |r2|`` over a rectangular grid.

    Returns ``(E_best, value)``.  Evaluations failing numerically are skipped.
    """
    xs = np.arange(re_range[0], re_range[1] + step / 2, step)
    ys = np.arange(im_range[0], im_range[1] + step / 2, step)
    best = (None, math.inf)
    for x in xs:
        for y in ys:
            e = complex(x, y)
            try:
                r = quantisation_residual(config, e, label, **mono_opts)
            except NumericalError:
                continue
            v = abs(r[0]) + abs(r[1])
            if v < best[1]:
                best = (e, v)
    return best
