"""Ostrowski renormalization of a rotation with a marked point.

Parameters ``(alpha, beta)`` of the standard rotation are moved to the
interval exchange convention used throughout the package:

    T(x) = x + alpha0   on [-1, 0)
    T(x) = x - 1        on [0, alpha0)

with the cocycle jump at ``beta0``.  One renormalization step induces the
rotation on ``[-alpha'_n, alpha_n)``, rescales by ``-alpha_n`` and records
the Ostrowski digit ``b_n`` of the marked point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .qfield import Surd

__all__ = [
    "State",
    "InvalidParameter",
    "CoboundaryError",
    "ParamPair",
    "RenormStep",
    "RenormOrbit",
    "DiophantineReport",
    "to_internal",
    "renorm_step",
    "renorm_orbit",
    "ostrowski_partial_sum",
    "classify_diophantine",
    "gauss",
    "cf_digits",
    "ADMISSIBLE",
    "ALT_GRAPH",
]


class State(str, enum.Enum):
    G = "G"
    BM = "B-"
    BP = "B+"

    def __str__(self):
        return self.value


# transition graph of the itinerary over {G, B-, B+}.  A G step leaves
# beta_{n+1} = -frac(...) <= 0 and a B- step leaves beta_{n+1} > 0, which
# forces the edges below.
ADMISSIBLE = {
    State.G: frozenset({State.G, State.BM}),
    State.BP: frozenset({State.G, State.BM}),
    State.BM: frozenset({State.BP}),
}

# the graph with G -> B+ in place of G -> B-; kept for comparison only
ALT_GRAPH = {
    State.G: frozenset({State.G, State.BP}),
    State.BP: frozenset({State.G, State.BM}),
    State.BM: frozenset({State.BP}),
}


_HALF = Surd(1, 0, 2, 0)


class InvalidParameter(ValueError):
    pass


class CoboundaryError(ValueError):
    """The marked point lies on the orbit of the discontinuity."""


@dataclass(frozen=True)
class ParamPair:
    alpha: Surd
    beta: Surd
    alpha0: Surd
    beta0: Surd

    @property
    def mean(self) -> Surd:
        """Value subtracted from the indicator so the cocycle has zero mean."""
        return (self.beta0 + 1) / (self.alpha0 + 1)


def to_internal(alpha, beta) -> ParamPair:
    alpha, beta = Surd.coerce(alpha), Surd.coerce(beta)
    if alpha.is_rational:
        raise InvalidParameter(f"alpha={alpha} is rational")
    if not (0 < alpha < _HALF):
        raise InvalidParameter(f"alpha={alpha} must lie in (0, 1/2); replace α by 1−α")
    if not (0 < beta < 1):
        raise InvalidParameter(f"beta={beta} must lie in (0, 1)")
    if beta.d not in (0, alpha.d):
        raise InvalidParameter("beta must lie in Q(alpha)")
    alpha0 = alpha / (1 - alpha)
    beta0 = (1 + alpha0) * beta - 1
    return ParamPair(alpha, beta, alpha0, beta0)



def gauss(x: Surd) -> Surd:
    return (1 / x).frac()


def cf_digits(x: Surd, count: int) -> list[int]:
    """First ``count`` continued fraction digits ``[1/x_i]`` with ``x_{i+1} = G(x_i)``."""
    out = []
    for _ in range(count):
        inv = 1 / x
        a = inv.floor()
        out.append(a)
        x = inv - a
        if not x:
            break
    return out


@dataclass(frozen=True)
class RenormStep:
    n: int
    alpha_n: Surd
    beta_n: Surd
    a: int
    b: int
    state: State
    alpha_prime: Surd
    x_local: Surd  # x_n in rescaled coordinates
    x_term: Surd  # x^(n) = (-1)^n alpha^(n-1) x_n
    beta_marked: Surd  # beta^(n) = (-1)^n alpha^(n-1) beta_n
    alpha_prev_prod: Surd  # alpha^(n-1), with alpha^(-1) = 1
    alpha_prod: Surd  # alpha^(n) = alpha_0 ... alpha_n
    alpha_next: Surd
    beta_next: Surd

    @property
    def scale(self) -> Surd:
        """Signed scale of the conjugacy from rescaled level-n coordinates."""
        return self.alpha_prev_prod if self.n % 2 == 0 else -self.alpha_prev_prod


def _is_terminal(alpha_n: Surd, beta_n: Surd) -> bool:
    # 0, -1 and alpha_n (identified with -1 on the circle) are orbit points of 0
    return not beta_n or beta_n == -1 or beta_n == alpha_n


def renorm_step(alpha_n, beta_n, n: int = 0, alpha_prev_prod=None) -> RenormStep:
    alpha_n, beta_n = Surd.coerce(alpha_n), Surd.coerce(beta_n)
    if alpha_n.is_rational or not (0 < alpha_n < 1):
        raise InvalidParameter(f"alpha_n={alpha_n} must be irrational in (0, 1)")
    if _is_terminal(alpha_n, beta_n):
        raise CoboundaryError(f"beta_{n}={beta_n} is on the orbit of 0")
    if not (-1 <= beta_n < alpha_n):
        raise InvalidParameter(f"beta_{n}={beta_n} outside [-1, alpha_{n})")
    if alpha_prev_prod is None:
        alpha_prev_prod = Surd.coerce(1)

    inv = 1 / alpha_n
    a = inv.floor()
    alpha_next = inv - a
    alpha_prime = 1 - a * alpha_n
    if beta_n < -alpha_prime:
        t = (1 + beta_n) / alpha_n
        k = t.floor()
        b = k + 1
        state = State.G
        x_local = -1 + (b - 1) * alpha_n
        beta_next = -(t - k)
    else:
        b = 0
        state = State.BM if beta_n < 0 else State.BP
        x_local = Surd.coerce(0)
        beta_next = -beta_n / alpha_n
    sign = 1 if n % 2 == 0 else -1
    return RenormStep(
        n=n,
        alpha_n=alpha_n,
        beta_n=beta_n,
        a=a,
        b=b,
        state=state,
        alpha_prime=alpha_prime,
        x_local=x_local,
        x_term=sign * alpha_prev_prod * x_local,
        beta_marked=sign * alpha_prev_prod * beta_n,
        alpha_prev_prod=alpha_prev_prod,
        alpha_prod=alpha_prev_prod * alpha_n,
        alpha_next=alpha_next,
        beta_next=beta_next,
    )


@dataclass(frozen=True)
class RenormOrbit:
    params: ParamPair
    steps: tuple[RenormStep, ...]
    coboundary_level: Optional[int] = None
    cycle: Optional[tuple[int, int]] = None  # (pre-period, period)

    @property
    def coboundary_detected(self) -> bool:
        return self.coboundary_level is not None

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def digits(self) -> list[int]:
        return [s.b for s in self.steps]

    @property
    def states(self) -> list[State]:
        return [s.state for s in self.steps]

    @property
    def cf(self) -> list[int]:
        return [s.a for s in self.steps]

    def marked(self, n: int) -> Surd:
        """beta^(n); zero past a coboundary termination."""
        if n < len(self.steps):
            return self.steps[n].beta_marked
        if self.coboundary_detected:
            return Surd.coerce(0)
        last = self.steps[-1]
        sign = 1 if n % 2 == 0 else -1
        if n == len(self.steps):
            return sign * last.alpha_prod * last.beta_next
        raise IndexError(n)

    def state_at(self, n: int) -> State:
        """Itinerary state at any level, extended periodically when a cycle is known."""
        if n < len(self.steps):
            return self.steps[n].state
        if self.cycle is None:
            raise IndexError(n)
        pre, per = self.cycle
        return self.steps[pre + (n - pre) % per].state


def renorm_orbit(params: ParamPair, depth: int) -> RenormOrbit:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    steps: list[RenormStep] = []
    seen: dict[tuple[Surd, Surd], int] = {}
    cycle = None
    alpha_n, beta_n = params.alpha0, params.beta0
    prod = Surd.coerce(1)
    for n in range(depth):
        if _is_terminal(alpha_n, beta_n):
            return RenormOrbit(params, tuple(steps), coboundary_level=n, cycle=cycle)
        key = (alpha_n, beta_n)
        if cycle is None:
            if key in seen:
                cycle = (seen[key], n - seen[key])
            else:
                seen[key] = n
        step = renorm_step(alpha_n, beta_n, n, prod)
        steps.append(step)
        alpha_n, beta_n, prod = step.alpha_next, step.beta_next, step.alpha_prod
    if cycle is None and (alpha_n, beta_n) in seen:
        m = seen[(alpha_n, beta_n)]
        cycle = (m, depth - m)
    return RenormOrbit(params, tuple(steps), cycle=cycle)


def ostrowski_partial_sum(orbit: RenormOrbit, n: int) -> tuple[Surd, Surd]:
    """Return ``(sum_{k<=n} x^(k), beta0 - sum)``."""
    if n >= orbit.depth and not orbit.coboundary_detected:
        raise IndexError(f"level {n} beyond orbit depth {orbit.depth}")
    total = Surd.coerce(0)
    for step in orbit.steps[: n + 1]:
        total = total + step.x_term
    return total, orbit.params.beta0 - total


@dataclass(frozen=True)
class DiophantineReport:
    a_max: int
    M: Optional[int]  # None: unbounded run of (B-B+) blocks
    horizon: int
    exact: bool


def _max_bm_bp_run(states: list[State]) -> int:
    best = run = 0
    i = 0
    while i < len(states):
        if states[i] is State.BM and i + 1 < len(states) and states[i + 1] is State.BP:
            run += 1
            best = max(best, run)
            i += 2
        else:
            run = 0
            i += 1
    return best


def classify_diophantine(orbit: RenormOrbit) -> DiophantineReport:
    if not orbit.steps:
        raise ValueError("empty orbit")
    if orbit.cycle is not None:
        pre, per = orbit.cycle
        period_states = [orbit.state_at(k) for k in range(pre, pre + per)]
        if all(s is not State.G for s in period_states) and State.BM in period_states:
            M = None
        else:
            M = _max_bm_bp_run([orbit.state_at(k) for k in range(pre + 3 * per + 2)])
        a_max = max(orbit.steps[k].a for k in range(min(orbit.depth, pre + per)))
        return DiophantineReport(a_max, M, orbit.depth, True)
    return DiophantineReport(max(orbit.cf), _max_bm_bp_run(orbit.states), orbit.depth, False)
