import cmath
import math

import numpy as np
import pytest
import sympy as sp

from hitchinq.errors import ConvergenceError, DegenerateLocusError, ValidationError
from hitchinq.fenchel_nielsen import FNCoords, FNTracker
from hitchinq.oper import OperConfig, build_oper, infinity_constraints_residual
from hitchinq.quantiser import (E_of_lambda, HolonomyKind, QuantisationLabel, SolverOptions,
                                continue_tracker, evaluate, lambda_of_E, nearest_representative,
                                oper_of_E, quantisation_residual, reduce_accessory,
                                residual_of_fn, solve_spectrum)

E_STAR = 0.1 + 0.05j


def test_reduce_n3():
    cfg = OperConfig.from_arrays(1, [0, 1, 2.5j], [0.1, 0.2, 0.3])
    acc = reduce_accessory(cfg, [])
    assert max(abs(x) for x in infinity_constraints_residual(build_oper(cfg, acc))) <= 1e-14


def test_reduce_zero():
    cfg = OperConfig.from_arrays(1, [0, 1, 2, 3], [0] * 4)
    assert np.array_equal(reduce_accessory(cfg, [0]).as_array(), np.zeros(4))


def test_reduce_against_exact_solve():
    z = [sp.Integer(v) for v in (0, 1, 3, 6)]
    d = sp.Rational(1, 4)
    e1 = sp.Rational(1, 5)
    e2, e3, e4 = sp.symbols("e2 e3 e4")
    es = [e1, e2, e3, e4]
    eqs = [sum(es), sum(e * x + d for e, x in zip(es, z)),
           sum(e * x ** 2 + 2 * d * x for e, x in zip(es, z))]
    sol = sp.solve(eqs, [e2, e3, e4])
    exact = [float(e1)] + [float(sol[s]) for s in (e2, e3, e4)]
    cfg = OperConfig.from_arrays(1, [0, 1, 3, 6], [0.25] * 4)
    acc = reduce_accessory(cfg, [0.2])
    assert np.abs(acc.as_array() - exact).max() <= 1e-14
    assert max(abs(x) for x in infinity_constraints_residual(build_oper(cfg, acc))) <= 1e-14


def test_reduce_errors():
    cfg = OperConfig.from_arrays(1, [0, 1, 2, 3], [0] * 4)
    with pytest.raises(ValidationError, match="free"):
        reduce_accessory(cfg, [])


def test_label_nu():
    with pytest.raises(ValidationError):
        QuantisationLabel(1, 0, nu=2)


def test_zero_oper_degenerate():
    cfg = OperConfig.from_arrays(1, [0, 1, 2, 3], [0] * 4)
    with pytest.raises(DegenerateLocusError):
        lambda_of_E(cfg, 0)


def test_cauchy_riemann(symmetric4):
    h = 1e-4
    tr = FNTracker()
    lambda_of_E(symmetric4, E_STAR, tr)

    def lam(e):
        return lambda_of_E(symmetric4, e, tr.copy()).lam

    dx = (lam(E_STAR + h) - lam(E_STAR - h)) / (2 * h)
    dy = (lam(E_STAR + 1j * h) - lam(E_STAR - 1j * h)) / (2 * h)
    assert abs(dy - 1j * dx) <= 1e-6 * max(1, abs(dx))


def test_path_independence(symmetric4):
    target = 0.15 + 0.1j
    direct = continue_tracker(symmetric4, target, 0.0)
    via = continue_tracker(symmetric4, 0.05 + 0.12j, 0.0)
    via = continue_tracker(symmetric4, target, 0.05 + 0.12j, tracker=via)
    a, b = direct.previous, via.previous
    assert abs(a.lam - b.lam) <= 1e-8
    assert abs(a.kappa - b.kappa) <= 1e-8


def test_schwarz_reflection(symmetric4):
    a = evaluate(symmetric4, E_STAR)
    b = evaluate(symmetric4, E_STAR.conjugate())
    assert abs(b.traces.Ls - a.traces.Ls.conjugate()) <= 1e-8 * max(1, abs(a.traces.Ls))
    la, lb = a.fn.lam, b.fn.lam
    # lam(conj E) = +- conj lam(E) modulo 4 pi
    def lattice_dist(x):
        return abs(x - 4 * math.pi * round(x.real / (4 * math.pi)))

    d = min(lattice_dist(lb - s * la.conjugate()) for s in (1, -1))
    assert d <= 1e-8


def test_lattice_bookkeeping():
    fn = FNCoords(2 * math.pi + 0.3 + 1j, math.pi - 0.2 + 0.5j)
    lab = QuantisationLabel(1, 1)
    r = residual_of_fn(fn, lab)
    r2 = residual_of_fn(fn.shifted(1, 0), QuantisationLabel(3, 1))
    assert r == pytest.approx(r2, abs=1e-12)
    rep = nearest_representative(fn.shifted(2, 3), lab)
    assert residual_of_fn(rep, lab) == pytest.approx(r, abs=1e-12)


@pytest.fixture(scope="module")
def solved(symmetric4):
    tr = continue_tracker(symmetric4, -0.2, 0.0)
    return solve_spectrum(symmetric4, QuantisationLabel(1, -1), -0.2, tracker=tr)


def test_solution_properties(solved):
    assert solved.accepted and solved.holonomy_class is HolonomyKind.SL2R
    assert max(abs(x) for x in solved.residual) <= 1e-8
    assert max(abs(x.imag) for x in solved.traces.as_tuple()) <= 1e-7
    assert abs(solved.fn.lam.real - 2 * math.pi) <= 1e-8
    assert abs(solved.fn.kappa.real + math.pi) <= 1e-8


def test_fixed_point(symmetric4, solved):
    e = solved.eigenvalues[0]
    again = solve_spectrum(symmetric4, solved.label, e,
                           tracker=FNTracker.from_state(solved.tracker_state))
    assert again.iterations == 0
    assert abs(again.eigenvalues[0] - e) <= 1e-10


def test_orbit_mode_agrees(symmetric4, solved):
    r = quantisation_residual(symmetric4, solved.eigenvalues[0], QuantisationLabel(1, 1))
    assert max(abs(x) for x in r) <= 1e-8


def test_solver_gives_up():
    cfg = OperConfig.from_arrays(1, [0, 1, 2, 3], [0.1] * 4)
    with pytest.raises(ConvergenceError):
        solve_spectrum(cfg, QuantisationLabel(5, 7), 0.3 + 0.2j, SolverOptions(max_iter=2))


def test_E_of_lambda_inverse(symmetric4):
    tr = FNTracker()
    lam = lambda_of_E(symmetric4, E_STAR, tr).lam
    acc = E_of_lambda(symmetric4, lam, E_STAR + 0.02 - 0.01j)
    assert abs(acc.values[0] - E_STAR) <= 1e-9
    assert max(abs(x) for x in infinity_constraints_residual(build_oper(symmetric4, acc))) < 1e-13


def test_E_of_lambda_derivative_and_lipschitz(symmetric4):
    tr = FNTracker()
    lam = lambda_of_E(symmetric4, E_STAR, tr).lam
    h = 1e-4
    dl = (lambda_of_E(symmetric4, E_STAR + h, tr.copy()).lam
          - lambda_of_E(symmetric4, E_STAR - h, tr.copy()).lam) / (2 * h)
    k = 1e-4
    ep = E_of_lambda(symmetric4, lam + k, E_STAR, tracker=tr).values[0]
    em = E_of_lambda(symmetric4, lam - k, E_STAR, tracker=tr).values[0]
    de = (ep - em) / (2 * k)
    assert abs(de * dl - 1) <= 1e-5
    for step in (1e-3, 1e-2):
        e2 = E_of_lambda(symmetric4, lam + step * cmath.exp(0.4j), E_STAR, tracker=tr).values[0]
        assert abs(e2 - E_STAR) / step <= 2 * abs(de)


def test_oper_of_E_constraints(symmetric4):
    o = oper_of_E(symmetric4, 0.3j)
    assert max(abs(x) for x in infinity_constraints_residual(o)) < 1e-13
