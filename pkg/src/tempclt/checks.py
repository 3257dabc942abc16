"""Acceptance checks A1-A10.

Each check returns a :class:`CheckResult`; the runtime budget is part of the
verdict.  ``selftest`` runs the exact-identity checks A1-A8.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable

import mpmath
from mpmath import iv
from scipy.special import ndtr

from .markov import (
    block_contraction,
    build_markov,
    chain_moments,
    cylinder_measure,
    moment_series,
    sample_paths,
    sum_distribution,
)
from .qfield import Surd
from .renorm import ADMISSIBLE, ALT_GRAPH, ParamPair, State, classify_diophantine, ostrowski_partial_sum, renorm_orbit, to_internal
from .towers import LETTERS, build_stack, first_return_oracle, window_positivity
from .walk import WalkConfig, ks_statistic, temporal_series, tower_distribution_check

__all__ = [
    "CheckResult",
    "CHECKS",
    "run_check",
    "selftest",
    "pell_pair",
    "golden_pair",
    "interval_digits",
    "admissible_words",
    "nonpositive_words",
    "exact_ks",
]


@dataclass
class CheckResult:
    name: str
    ok: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.ok and self.seconds < self.budget

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={v}" for k, v in self.detail.items())
        return f"{self.name} {verdict} ({self.seconds:.2f}s / {self.budget:g}s) {info}"


def pell_pair() -> ParamPair:
    return to_internal(Surd(-1, 1, 1, 2), Surd(1, 0, 2, 0))


def golden_pair() -> ParamPair:
    alpha = Surd(3, -1, 2, 5)
    return to_internal(alpha, alpha / 2)


def third_pair() -> ParamPair:
    return to_internal(Surd(-1, 1, 2, 3), Surd(1, 0, 5, 0))


# ---------------------------------------------------------------------------
# A1: digits against a 200-bit interval evaluation of the recursion


def _iv(x: Surd):
    if x.q == 0:
        return iv.mpf(x.p) / x.r
    return (x.p + x.q * iv.sqrt(x.d)) / x.r


def _less(x, y) -> bool:
    if x.b < y.a:
        return True
    if x.a >= y.b:
        return False
    raise ArithmeticError("interval comparison is undecided")


def _ifloor(x) -> int:
    lo, hi = int(mpmath.floor(x.a)), int(mpmath.floor(x.b))
    if lo != hi:
        raise ArithmeticError("interval floor is undecided")
    return lo


def interval_digits(alpha: Surd, beta: Surd, depth: int, prec: int = 200):
    """Digits, states and enclosures of ``(alpha_n, beta_n)`` computed in interval arithmetic."""
    old = iv.prec
    iv.prec = prec
    try:
        a_ = _iv(alpha)
        al = a_ / (1 - a_)
        be = (1 + al) * _iv(beta) - 1
        digits, states, pairs = [], [], []
        for _ in range(depth):
            pairs.append((al, be))
            a = _ifloor(1 / al)
            alpha_prime = 1 - a * al
            if _less(be, -alpha_prime):
                t = (1 + be) / al
                k = _ifloor(t)
                digits.append(k + 1)
                states.append("G")
                be = -(t - k)
            else:
                digits.append(0)
                states.append("B-" if _less(be, iv.mpf(0)) else "B+")
                be = -be / al
            al = 1 / al - a
        return digits, states, pairs
    finally:
        iv.prec = old


def _overlap(x, y) -> bool:
    return not (x.b < y.a or y.b < x.a)


def check_a1() -> dict:
    params = pell_pair()
    orbit = renorm_orbit(params, 12)
    digits, states, pairs = interval_digits(params.alpha, params.beta, 12)
    pre, per = orbit.cycle
    ok = (
        orbit.digits[:7] == [0, 0, 2, 2, 1, 2, 1]
        and [str(s) for s in orbit.states[:5]] == ["B-", "B+", "G", "G", "G"]
        and orbit.cycle == (3, 2)
        and digits == orbit.digits
        and states == [str(s) for s in orbit.states]
        and all(_overlap(u, v) for u, v in zip(pairs[pre], pairs[pre + per]))
    )
    return {"ok": ok, "digits": "".join(map(str, orbit.digits)), "cycle": orbit.cycle}


# ---------------------------------------------------------------------------
# A2: remainder identity


def random_beta(rnd: random.Random, d: int = 2) -> Surd:
    while True:
        u = Surd(rnd.randint(-60, 60), 0, rnd.randint(1, 40), 0)
        v = Surd(rnd.randint(-40, 40), 0, rnd.randint(1, 40), 0)
        beta = u + v * Surd.sqrt(d)
        if 0 < beta < 1 and not beta.is_rational:
            return beta


def check_a2(seed: int = 2024) -> dict:
    rnd = random.Random(seed)
    alpha = Surd(-1, 1, 1, 2)
    checked, bad = 0, 0
    for _ in range(50):
        params = to_internal(alpha, random_beta(rnd))
        orbit = renorm_orbit(params, 42)
        top = 40 if not orbit.coboundary_detected else orbit.depth - 2
        for n in range(top + 1):
            _, rem = ostrowski_partial_sum(orbit, n)
            checked += 1
            if abs(rem) != abs(orbit.marked(n + 1)):
                bad += 1
    return {"ok": bad == 0 and checked > 0, "identities": checked, "violations": bad}


# ---------------------------------------------------------------------------
# A3: heights


def check_a3() -> dict:
    params = pell_pair()
    stack = build_stack(renorm_orbit(params, 22), 21)
    oracle_ok = all(first_return_oracle(params, n)["heights"] == stack[n].heights for n in range(9))
    hl = stack.heights("L")
    pell_ok = hl[1:8] == [2, 5, 12, 29, 70, 169, 408]
    with mpmath.workdps(30):
        ratio = mpmath.mpf(hl[21]) / hl[20]
        gap = abs(ratio - (1 + mpmath.sqrt(2)))
    return {"ok": oracle_ok and pell_ok and gap < 1e-6, "oracle": oracle_ok, "pell": pell_ok, "ratio_gap": f"{float(gap):.2e}"}


# ---------------------------------------------------------------------------
# A4: Denjoy-Koksma bound and conservation


def check_a4() -> dict:
    worst = Surd.coerce(0)
    ok = True
    for params in (pell_pair(), golden_pair(), third_pair()):
        stack = build_stack(renorm_orbit(params, 202), 200)
        for lv in stack.levels:
            for J in LETTERS:
                v = abs(lv.special_sum(J))
                worst = max(worst, v)
                ok = ok and v <= 2
            total = sum((lv.length(J) * lv.special_sum(J) for J in LETTERS), Surd.coerce(0))
            ok = ok and not total
    return {"ok": ok, "max_abs_phi": str(worst)}


# ---------------------------------------------------------------------------
# A5: cylinder measures


def check_a5() -> dict:
    params = pell_pair()
    stack = build_stack(renorm_orbit(params, 10), 8)
    width = 1 + params.alpha0
    words = bad = 0
    total_ok = True
    for n in range(1, 7):
        arr = build_markov(stack, n)
        total = Surd.coerce(0)
        for word in itertools.product(*(arr.states[k] for k in range(1, n + 1))):
            m = cylinder_measure(arr, word)
            admissible = all(stack[i].sub[word[i][0]][word[i][1]] == word[i - 1][0] for i in range(1, n))
            expect = stack[n].length(word[-1][0]) / width if admissible else 0
            words += 1
            if m != expect:
                bad += 1
            total = total + m
        total_ok = total_ok and total == 1
    # states outside S_k
    arr = build_markov(stack, 2)
    stray = cylinder_measure(arr, [("S", 5), ("L", 0)]) == 0
    return {"ok": bad == 0 and total_ok and stray, "words": words, "mismatches": bad}


# ---------------------------------------------------------------------------
# A6: tower sums against chain sums


def check_a6() -> dict:
    bad = []
    for label, params in (("pell", pell_pair()), ("golden", golden_pair())):
        stack = build_stack(renorm_orbit(params, 12), 11)
        for n in range(1, 11):
            arr = build_markov(stack, n)
            for J in LETTERS:
                if not tower_distribution_check(stack, arr, n, J):
                    bad.append(f"{label}:{n}{J}")
    return {"ok": not bad, "failures": bad or "none"}


# ---------------------------------------------------------------------------
# A7: positivity and contraction


def admissible_words(length: int, graph=ADMISSIBLE):
    states = list(State)
    for w in itertools.product(states, repeat=length):
        if all(w[i + 1] in graph[w[i]] for i in range(length - 1)):
            yield w


def nonpositive_words(length: int = 5, graph=ADMISSIBLE) -> tuple[int, int, list[str]]:
    """Count B--free words and words opening with B- B+ G; list those with a non-positive product."""
    free = starts = 0
    failing = []
    for w in admissible_words(length, graph):
        if State.BM not in w or w[:3] == (State.BM, State.BP, State.G):
            # a = b = 1 gives the sparsest incidence matrices, equal to the sign patterns
            entries = [(s, 1, 1 if s is State.G else 0) for s in w]
            f_pos, a_pos = window_positivity(entries, length)[0]
            if not (f_pos and a_pos):
                failing.append(" ".join(map(str, w)))
            if State.BM in w:
                starts += 1
            else:
                free += 1
    return free, starts, failing


def check_a7() -> dict:
    free, starts, failing = nonpositive_words(5)
    _, _, alt_failing = nonpositive_words(5, ALT_GRAPH)
    ok = not failing
    params = pell_pair()
    orbit = renorm_orbit(params, 64)
    M = classify_diophantine(orbit).M
    stack = build_stack(orbit, 62)
    report = block_contraction(build_markov(stack, 60), 6, M)
    ok = ok and report.delta < 1
    return {
        "ok": ok,
        "bm_free_words": free,
        "bmbpg_words": starts,
        "nonpositive": failing or "none",
        "alt_graph_nonpositive": alt_failing or "none",
        "delta": f"{float(report.delta):.4g}",
    }


# ---------------------------------------------------------------------------
# A8: moment stability and variance growth


def check_a8() -> dict:
    stack = build_stack(renorm_orbit(pell_pair(), 64), 62)
    full = moment_series(stack, 60, "full")
    diffs = [0.0] * 61
    for J in LETTERS:
        for rep in moment_series(stack, 60, J):
            diffs[rep.n] = max(diffs[rep.n], float(abs(rep.e - full[rep.n - 1].e)))
    early, late = max(diffs[10:31]), max(diffs[40:61])
    var = {n: full[n - 1].var for n in (10, 30, 60)}
    ok = late <= 1.5 * early and var[60] > var[30] > var[10]
    return {
        "ok": ok,
        "max_diff_10_30": f"{early:.4g}",
        "max_diff_40_60": f"{late:.4g}",
        "var10_30_60": "/".join(f"{float(var[n]):.4g}" for n in (10, 30, 60)),
    }


# ---------------------------------------------------------------------------
# A9: chain-level CLT


def check_a9(seed: int = 7, count: int = 100_000) -> dict:
    stack = build_stack(renorm_orbit(pell_pair(), 44), 42)
    arr = build_markov(stack, 40)
    mom = chain_moments(arr)
    sums = sample_paths(arr, "full", count, seed)
    D = ks_statistic((sums - float(mom.e)) / mom.sigma)
    return {"ok": D < 0.05, "D": f"{D:.4f}", "sigma40": f"{mom.sigma:.4f}", "exact_law_D": f"{exact_ks(arr, mom):.4f}"}


def exact_ks(arr, mom) -> float:
    """Distance between the exact (atomic) law of the standardized chain sum and N(0, 1)."""
    law = sum_distribution(arr, "full")
    cum, D = 0.0, 0.0
    for v in sorted(law):
        F = float(ndtr((float(v) - float(mom.e)) / mom.sigma))
        D = max(D, abs(cum - F))
        cum += float(law[v])
        D = max(D, abs(cum - F))
    return D


# ---------------------------------------------------------------------------
# A10: temporal CLT


def check_a10() -> dict:
    ns = [10**3, 10**4, 10**5, 10**6, 10**7]
    ok = True
    detail = {}
    for label, params in (("pell", pell_pair()), ("golden", golden_pair())):
        runs = temporal_series(WalkConfig(params, Surd.coerce(0), ns[-1]), ns)
        D = {e.config.n: e.ks for e in runs}
        ok = ok and D[10**6] < 0.15 and D[10**7] < D[10**3]
        detail[label] = "/".join(f"{D[n]:.3f}" for n in ns)
    detail["ok"] = ok
    return detail


CHECKS: dict[str, tuple[Callable[[], dict], float]] = {
    "A1": (check_a1, 1),
    "A2": (check_a2, 5),
    "A3": (check_a3, 5),
    "A4": (check_a4, 5),
    "A5": (check_a5, 10),
    "A6": (check_a6, 30),
    "A7": (check_a7, 5),
    "A8": (check_a8, 60),
    "A9": (check_a9, 60),
    "A10": (check_a10, 600),
}


def run_check(name: str) -> CheckResult:
    fn, budget = CHECKS[name]
    t0 = time.perf_counter()
    detail = fn()
    elapsed = time.perf_counter() - t0
    ok = bool(detail.pop("ok"))
    return CheckResult(name, ok, elapsed, budget, detail)


def selftest(names=("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8")) -> list[CheckResult]:
    return [run_check(n) for n in names]
