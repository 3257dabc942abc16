import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from tempclt.markov import build_markov
from tempclt.qfield import Surd
from tempclt.renorm import to_internal
from tempclt.towers import rotate
from tempclt.walk import (
    InsufficientDepth,
    WalkConfig,
    backward_sum,
    birkhoff,
    centering,
    code_point,
    depth_for,
    histogram,
    histogram_csv,
    ks_statistic,
    temporal_experiment,
    tower_distribution_check,
)

ZERO = Surd.coerce(0)


def test_config_validation(pell):
    with pytest.raises(ValueError):
        WalkConfig(pell, ZERO, 10, "fixed_point", frac_bits=64)
    with pytest.raises(ValueError):
        WalkConfig(pell, ZERO, 10, "fixed_point", guard_bits=32)
    with pytest.raises(ValueError):
        WalkConfig(pell, Surd.coerce(1), 10)
    with pytest.raises(ValueError):
        WalkConfig(pell, ZERO, 10, "float")


def test_trace_starts_at_zero(pell):
    tr = birkhoff(WalkConfig(pell, Surd(1, 0, 3, 0), 5, "exact"))
    assert tr.value(0) == 0


def test_direct_sum_oracle(golden):
    x = Surd(-1, 0, 7, 0)
    tr = birkhoff(WalkConfig(golden, x, 300, "exact"))
    total, y = ZERO, x
    for k in range(300):
        assert tr.value(k) == total
        total = total + ((1 if y < golden.beta0 else 0) - golden.mean)
        y = rotate(golden, y)


def test_denjoy_koksma_at_return_times(pell, pell_stack):
    tr = birkhoff(WalkConfig(pell, ZERO, 3000, "exact"))
    for n in range(1, 9):
        h = pell_stack[n].height("L")
        assert abs(tr.value(h)) <= 2


@pytest.mark.parametrize("which", ["pell", "golden"])
def test_mode_equivalence(request, which):
    params = request.getfixturevalue(which)
    x = Surd(-1, 0, 3, 0)
    exact = birkhoff(WalkConfig(params, x, 100_000, "exact"))
    fixed = birkhoff(WalkConfig(params, x, 100_000, "fixed_point", 96, 48))
    assert np.array_equal(exact.hits, fixed.hits)


def test_fixed_point_fallback_on_boundary(pell):
    # starting exactly on the discontinuity forces an exact resolution
    tr = birkhoff(WalkConfig(pell, pell.beta0, 1000))
    ex = birkhoff(WalkConfig(pell, pell.beta0, 1000, "exact"))
    assert tr.exact_fallbacks >= 1 and np.array_equal(tr.hits, ex.hits)


@settings(max_examples=40, deadline=None)
@given(st.integers(-999, 700))
def test_rotation_bijective(t):
    params = to_internal(Surd(-1, 1, 1, 2), Surd(1, 0, 2, 0))
    x = Surd(t, 0, 1000, 0)
    y = x
    for _ in range(50):
        y = rotate(params, y)
    for _ in range(50):
        y = y - params.alpha0 if y >= params.alpha0 - 1 else y + 1
    assert y == x


def test_code_point_base(pell_stack):
    lo, _ = pell_stack[8].pieces["L"]
    digits, floor = code_point(pell_stack, lo, 8)
    assert floor == 0 and all(j == 0 for _, j in digits)
    assert digits[-1][0] == "L"


def test_code_point_random(pell, pell_stack):
    rnd = random.Random(4)
    width = 1 + pell.alpha0
    for _ in range(25):
        x = Surd(rnd.randint(-10**6, 0), 0, 10**6, 0) + Surd(rnd.randint(0, 7 * 10**5), 0, 10**6, 0)
        if not (-1 <= x < pell.alpha0):
            continue
        digits, floor = code_point(pell_stack, x, 7)
        for i in range(1, 7):
            assert pell_stack[i].sub[digits[i][0]][digits[i][1]] == digits[i - 1][0]
        arr = build_markov(pell_stack, 7)
        from tempclt.markov import cylinder_measure

        assert cylinder_measure(arr, digits) == pell_stack[7].length(digits[-1][0]) / width
        # walking back 'floor' steps lands in the tower base
        y = x
        for _ in range(floor):
            y = y - pell.alpha0 if y >= pell.alpha0 - 1 else y + 1
        lo, hi = pell_stack[7].pieces[digits[-1][0]]
        assert lo <= y < hi


def test_centering_examples(pell, pell_stack, golden, golden_stack):
    assert depth_for(pell_stack, 1000) == 10
    assert pell_stack[9].height("S") == 985 and pell_stack[10].height("S") == 2378
    assert centering(pell_stack, ZERO, 1000) == (10, ZERO)
    rnd = random.Random(8)
    for params, stack in ((pell, pell_stack), (golden, golden_stack)):
        for _ in range(8):
            x = Surd(rnd.randint(-999, 0), 0, 1000, 0)
            for n in (10, 200, 1000):
                N, c = centering(stack, x, n)
                _, floor = code_point(stack, x, N)
                assert c == backward_sum(params, x, floor)


def test_insufficient_depth(pell_stack):
    with pytest.raises(InsufficientDepth):
        depth_for(pell_stack, 10**40)


def test_ks_examples():
    v = 0.3
    assert abs(ks_statistic([v]) - max(ndtr(v), 1 - ndtr(v))) < 1e-15
    assert ks_statistic([0.0]) == 0.5
    z = ndtr(np.linspace(-3, 3, 7))
    assert 0 <= ks_statistic(np.random.default_rng(0).normal(size=1000)) <= 1


def test_histogram_accounting():
    vals = np.array([-7.0, -5.0, -0.1, 0.0, 4.99, 5.0, 12.0])
    h = histogram(vals, 10)
    assert h.total == len(vals) and h.below == 1 and h.above == 2
    text = histogram_csv(h)
    lines = text.splitlines()
    assert lines[0] == "bin_left,bin_right,count,density"
    assert len(lines) == 1 + 10 + 2
    assert lines[-2].startswith("-inf,-5,1") and lines[-1].startswith("5,inf,2")


def test_temporal_experiment_small(pell):
    exp = temporal_experiment(WalkConfig(pell, ZERO, 5000), bins=40)
    assert exp.samples.size == 5000 and exp.sigma_N > 0
    assert exp.hist.total == 5000
    assert 0 <= exp.ks <= 1


@pytest.mark.parametrize("n", range(1, 9))
def test_tower_distribution(pell_stack, golden_stack, n):
    for stack in (pell_stack, golden_stack):
        arr = build_markov(stack, n)
        for J in "LMS":
            assert tower_distribution_check(stack, arr, n, J)


def test_tower_distribution_mutation(pell_stack):
    arr = build_markov(pell_stack, 5)
    xi = {k: list(v) for k, v in arr.xi.items()}
    xi[3][1] = xi[3][1] + 1
    assert not tower_distribution_check(pell_stack, arr, 5, "L", xi_override=xi)
