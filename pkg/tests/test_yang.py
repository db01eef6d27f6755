import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hitchinq.oper import OperConfig, local_exponents
from hitchinq.quantiser import lambda_of_E
from hitchinq.yang import (MovingPuncture, PantsLengths, boundary_length, initial_sample,
                           natural_delta, pants_N, upsilon_cl, w_increment,
                           w_nodal_asymptotics, yang_Y)


def mp_upsilon_real(x):
    """Oracle for real ``x`` in ``(0, 3/2]``, continuing the log through the
    upper half plane past ``u = 1``."""
    with mp.workdps(30):
        f = lambda u: mp.log(mp.gamma(u)) - mp.log(abs(mp.gamma(1 - u)))
        if x <= 1:
            return complex(mp.quad(f, [0.5, x]))
        # Gamma(1 - u) < 0 on (1, 2): the upward continuation contributes -i pi
        return complex(mp.quad(f, [0.5, 1]) + mp.quad(lambda u: f(u) - 1j * mp.pi, [1, x]))


def test_upsilon_half():
    assert upsilon_cl(0.5) == 0


@pytest.mark.parametrize("x", [0.3, 0.9 + 0.2j, -1.3 + 0.5j, 0.1 - 0.7j])
def test_upsilon_reflection(x):
    assert abs(upsilon_cl(x) - upsilon_cl(1 - x)) <= 1e-10


@pytest.mark.parametrize("x", [0.2, 0.75, 1.0])
def test_upsilon_interval_oracle(x):
    assert abs(upsilon_cl(x) - mp_upsilon_real(x)) <= 1e-10


def test_upsilon_three_halves():
    val = upsilon_cl(1.5)
    assert abs(val - mp_upsilon_real(1.5)) <= 1e-10
    assert abs(val - (-1 - math.log(2) - 0.5j * math.pi)) <= 1e-10


def test_upsilon_derivative():
    x, h = 0.7 + 0.3j, 1e-4
    d = (upsilon_cl(x + h) - upsilon_cl(x - h)) / (2 * h)
    expect = complex(mp.loggamma(x) - mp.loggamma(1 - x))
    assert abs(d - expect) <= 1e-7


def test_pants_zero():
    assert abs(pants_N((0, 0, 0)) + 1.5 * mp_upsilon_real(1.0)) <= 1e-10
    assert pants_N(PantsLengths(0, 0, 0)) == pants_N((0, 0, 0))


lengths = st.floats(0.05, 8.0)


@settings(max_examples=10, deadline=None)
@given(lengths, lengths, lengths)
def test_pants_symmetries(l1, l2, l3):
    base = pants_N((l1, l2, l3))
    for other in ((l2, l1, l3), (-l1, l2, l3), (l1, -l2, l3)):
        assert abs(pants_N(other) - base) <= 1e-10


def test_natural_delta_matches_local_trace():
    for l in (1.3, 2.0 + 0.4j, 7.0):
        cfg = OperConfig.from_arrays(1, [0, 1, 2], [natural_delta(l), 0, 0])
        tr = local_exponents(cfg, 0).trace
        assert abs(tr - 2 * cmath.cos(l / 2)) <= 1e-10 * max(1, abs(tr))
        w = natural_delta(l)
        assert abs(natural_delta(boundary_length(w, 1)) - w) <= 1e-12
        assert abs(natural_delta(boundary_length(4 * w, 2)) - w) <= 1e-12


def test_nodal_log_slope():
    lam = 2 * math.pi * 0.7 + 0.3j
    b = [boundary_length(0.05, 1)] * 4
    q = 1e-3
    diff = w_nodal_asymptotics(lam, b, q * math.e) - w_nodal_asymptotics(lam, b, q)
    expect = natural_delta(lam) - 2 * 0.05
    assert abs(diff - expect) <= 1e-12
    # the pants terms are q independent
    a = w_nodal_asymptotics(lam, b, 1.0)
    assert abs(a - pants_N((b[0], b[1], lam)) - pants_N((b[2], b[3], lam))) <= 1e-12


def test_yang_rescaling():
    assert yang_Y(1 + 2j) == 4j * math.pi * (1 + 2j)


@pytest.fixture(scope="module")
def family_start():
    base = OperConfig.from_arrays(1.0, [0, 0.5, 1, 3], [0.1] * 4)
    fam = MovingPuncture(base, 1)
    e0 = -0.2 + 0.05j
    lam0 = lambda_of_E(base, e0).lam
    return fam, initial_sample(fam, lam0, 0.5, e0)


def test_moving_puncture(family_start):
    fam, start = family_start
    assert fam(0.7).positions[1] == 0.7
    assert abs(start.lam - lambda_of_E(fam(0.5), start.e_free).lam) <= 1e-8


def test_constant_path(family_start):
    fam, start = family_start
    w = w_increment(fam, [(start.lam, start.q)] * 2, start)
    assert w.increment == 0


def test_reversal(family_start):
    fam, start = family_start
    a = (start.lam, start.q)
    b = (start.lam + 0.01, start.q + 0.01j)
    fwd = w_increment(fam, [a, b], start)
    back = w_increment(fam, [b, a], fwd.samples[-1])
    assert abs(fwd.increment + back.increment) <= 1e-9
    assert abs(fwd.samples[-1].lam - b[0]) <= 1e-12
