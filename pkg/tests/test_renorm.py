import random

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempclt.checks import interval_digits
from tempclt.qfield import Surd
from tempclt.renorm import (
    ADMISSIBLE,
    CoboundaryError,
    InvalidParameter,
    State,
    cf_digits,
    classify_diophantine,
    gauss,
    ostrowski_partial_sum,
    renorm_orbit,
    renorm_step,
    to_internal,
)

SQRT2M1 = Surd(-1, 1, 1, 2)
HALF = Surd(1, 0, 2, 0)
GOLD = Surd(3, -1, 2, 5)


def test_to_internal_examples():
    p = to_internal(SQRT2M1, HALF)
    assert p.alpha0 == Surd(0, 1, 2, 2)
    assert p.beta0 == Surd(-2, 1, 4, 2)
    assert to_internal(GOLD, HALF).alpha0 == Surd(-1, 1, 2, 5)
    # the cocycle mean is beta itself
    assert p.mean == HALF


def test_to_internal_rejects():
    with pytest.raises(InvalidParameter):
        to_internal(Surd(1, 0, 3, 0), HALF)
    with pytest.raises(InvalidParameter, match="1−α"):
        to_internal(Surd(-1, 1, 2, 5), HALF)
    with pytest.raises(InvalidParameter):
        to_internal(SQRT2M1, Surd.coerce(1))
    with pytest.raises(InvalidParameter):
        to_internal(SQRT2M1, Surd(0, 1, 4, 3))


def test_step_examples():
    s = renorm_step(Surd(0, 1, 2, 2), Surd(-2, 1, 4, 2))
    assert (s.a, s.b, s.state) == (1, 0, State.BM)
    assert s.beta_next == Surd(-1, 1, 2, 2)
    s = renorm_step(SQRT2M1, -HALF)
    assert (s.a, s.b, s.state) == (2, 2, State.G)
    assert s.beta_next == -SQRT2M1 / 2
    s = renorm_step(SQRT2M1, SQRT2M1 / 2)
    assert (s.a, s.b, s.state) == (2, 0, State.BP)
    assert s.beta_next == -HALF


def test_step_rejects_terminal():
    with pytest.raises(CoboundaryError):
        renorm_step(SQRT2M1, Surd.coerce(0))
    with pytest.raises(InvalidParameter):
        renorm_step(SQRT2M1, Surd.coerce(1))


def test_pell_orbit():
    o = renorm_orbit(to_internal(SQRT2M1, HALF), 7)
    assert o.digits == [0, 0, 2, 2, 1, 2, 1]
    assert [str(s) for s in o.states] == ["B-", "B+", "G", "G", "G", "G", "G"]
    assert o.cycle == (3, 2)
    assert [str(o.steps[k].beta_n) for k in range(1, 5)] == ["(-1+√2)/2", "-1/2", "(1-√2)/2", "(1-2√2)/2"]
    assert o.state_at(100) is State.G


def test_interval_oracle_matches():
    for alpha, beta in [(SQRT2M1, HALF), (GOLD, GOLD / 2), (SQRT2M1, Surd(1, 0, 7, 0))]:
        p = to_internal(alpha, beta)
        o = renorm_orbit(p, 15)
        digits, states, _ = interval_digits(alpha, beta, o.depth)
        assert digits == o.digits
        assert states == [str(s) for s in o.states]


def test_coboundary_detected():
    o = renorm_orbit(to_internal(SQRT2M1, SQRT2M1), 10)
    assert o.coboundary_detected and o.coboundary_level == 1
    # beta = 2 alpha mod 1 is also on the orbit of 0
    o = renorm_orbit(to_internal(SQRT2M1, 2 * SQRT2M1), 20)
    assert o.coboundary_detected


def test_partial_sum_examples():
    o = renorm_orbit(to_internal(SQRT2M1, HALF), 10)
    total, rem = ostrowski_partial_sum(o, 1)
    assert total == 0 and rem == o.params.beta0
    for n, s in enumerate(o.steps):
        if s.b == 0:
            assert s.x_term == 0
    o = renorm_orbit(to_internal(GOLD, GOLD / 2), 13)
    _, rem = ostrowski_partial_sum(o, 10)
    assert abs(rem) == abs(o.marked(11))
    assert abs(rem) <= o.steps[10].alpha_prod


def test_diophantine():
    rep = classify_diophantine(renorm_orbit(to_internal(SQRT2M1, HALF), 12))
    assert (rep.a_max, rep.M, rep.exact) == (2, 1, True)
    rep = classify_diophantine(renorm_orbit(to_internal(GOLD, HALF), 40))
    assert rep.exact and rep.M is not None
    rep = classify_diophantine(renorm_orbit(to_internal(GOLD, GOLD / 2), 40))
    assert rep.M == 1


def test_all_g_itinerary_has_m_zero():
    o = renorm_orbit(to_internal(SQRT2M1, Surd(0, 1, 8, 2)), 30)
    assert all(s is State.G for s in o.states)
    rep = classify_diophantine(o)
    assert rep.M == 0 and rep.exact


def test_g_can_precede_b_minus():
    o = renorm_orbit(to_internal(SQRT2M1, Surd(0, 1, 3, 2)), 12)
    assert (o.states[8], o.states[9]) == (State.G, State.BM)


def test_gauss_coherence():
    p = to_internal(SQRT2M1, HALF)
    assert cf_digits(p.alpha0, 1)[0] == cf_digits(SQRT2M1, 1)[0] - 1
    assert gauss(p.alpha0) == gauss(SQRT2M1)


betas = st.tuples(st.integers(-200, 200), st.integers(-150, 150), st.integers(1, 300))


@settings(max_examples=60, deadline=None)
@given(betas)
def test_orbit_invariants(t):
    beta = Surd(t[0], t[1], t[2], 2)
    if not (0 < beta < 1):
        return
    p = to_internal(SQRT2M1, beta)
    o = renorm_orbit(p, 30)
    for k, s in enumerate(o.steps):
        assert -1 <= s.beta_n < s.alpha_n
        assert s.alpha_next == 1 / s.alpha_n - s.a
        assert 0 < s.alpha_prime < s.alpha_n
        assert 0 <= s.b <= s.a
        assert (s.state is State.G) == (s.b >= 1)
        if k + 1 < o.depth:
            assert o.steps[k + 1].state in ADMISSIBLE[s.state]
            assert o.steps[k + 1].alpha_n == gauss(s.alpha_n)
    for n in range(o.depth - 1):
        _, rem = ostrowski_partial_sum(o, n)
        assert abs(rem) == abs(o.marked(n + 1))


def test_float_oracle_digits():
    # independent float evaluation of the recursion at 300 digits
    rnd = random.Random(5)
    with mpmath.workdps(300):
        for _ in range(10):
            beta = Surd(rnd.randint(1, 99), 0, 100, 0)
            o = renorm_orbit(to_internal(GOLD, beta), 25)
            a = (3 - mpmath.sqrt(5)) / 2
            al = a / (1 - a)
            be = (1 + al) * mpmath.mpf(beta.p) / beta.r - 1
            for s in o.steps:
                ap = 1 - mpmath.floor(1 / al) * al
                if be < -ap:
                    t = (1 + be) / al
                    assert s.b == int(mpmath.floor(t)) + 1
                    be = -(t - mpmath.floor(t))
                else:
                    assert s.b == 0
                    be = -be / al
                al = 1 / al - mpmath.floor(1 / al)
