"""Rokhlin towers over the renormalization intervals.

Level ``n`` carries three towers with bases ``I_L, I_M, I_S`` partitioning
``I^(n)``.  The substitution ``tau_n`` describes how each level ``n+1`` tower is
stacked from level ``n`` towers, bottom first.  All geometry is kept in the
original coordinates as left-closed intervals ``(lo, hi)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .qfield import Surd
from .renorm import CoboundaryError, ParamPair, RenormOrbit, RenormStep, State, renorm_orbit

__all__ = [
    "LETTERS",
    "Substitution",
    "TowerLevel",
    "TowerStack",
    "SIGN_PATTERNS",
    "substitution_of",
    "incidence_of",
    "closed_form_incidence",
    "build_stack",
    "level_pieces",
    "rotate",
    "first_return_oracle",
    "window_positivity",
    "mat_mul",
    "is_positive",
]

LETTERS = ("L", "M", "S")
_IDX = {c: i for i, c in enumerate(LETTERS)}

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Substitution:
    words: dict  # letter -> word over LETTERS

    def __getitem__(self, letter: str) -> str:
        return self.words[letter]

    def __str__(self):
        return ", ".join(f"{c}->{self.words[c]}" for c in LETTERS)


def substitution_of(step: RenormStep) -> Substitution:
    a, b = step.a, step.b
    if step.state is State.G:
        words = {"L": "S" + "L" * (b - 1) + "M" * (a - b + 1), "M": "S" + "L" * b + "M" * (a - b), "S": "M"}
    elif step.state is State.BM:
        words = {"L": "S" + "L" * a, "M": "M", "S": "L"}
    else:
        words = {"L": "S" + "L" * a, "M": "M" + "L" * a, "S": "L"}
    return Substitution(words)


def incidence_of(sub: Substitution) -> Matrix:
    return tuple(tuple(sub[j].count(k) for k in LETTERS) for j in LETTERS)


def closed_form_incidence(state: State, a: int, b: int = 0) -> Matrix:
    if state is State.G:
        return ((b - 1, a - b + 1, 1), (b, a - b, 1), (0, 1, 0))
    if state is State.BM:
        return ((a, 0, 1), (0, 1, 0), (1, 0, 0))
    return ((a, 0, 1), (a, 1, 0), (1, 0, 0))


# zero-one shape of the incidence matrices, valid for every admissible (a, b)
SIGN_PATTERNS: dict = {
    State.G: ((0, 1, 1), (1, 0, 1), (0, 1, 0)),
    State.BM: ((1, 0, 1), (0, 1, 0), (1, 0, 0)),
    State.BP: ((1, 0, 1), (1, 1, 0), (1, 0, 0)),
}


def mat_mul(x: Sequence[Sequence], y: Sequence[Sequence]) -> Matrix:
    return tuple(
        tuple(sum(x[i][k] * y[k][j] for k in range(len(y))) for j in range(len(y[0])))
        for i in range(len(x))
    )


def is_positive(m: Sequence[Sequence]) -> bool:
    return all(v > 0 for row in m for v in row)


def _span(scale: Surd, u: Surd, v: Surd) -> tuple[Surd, Surd]:
    p, q = scale * u, scale * v
    return (p, q) if p < q else (q, p)


def level_pieces(alpha_n: Surd, beta_n: Surd, scale: Surd) -> tuple[tuple[Surd, Surd], dict]:
    """``I^(n)`` and the three bases in original coordinates.

    ``scale`` is the signed factor of the level conjugacy.
    """
    one = Surd.coerce(1)
    zero = Surd.coerce(0)
    if beta_n >= 0:
        cuts = {"L": (-one, zero), "M": (zero, beta_n), "S": (beta_n, alpha_n)}
    else:
        cuts = {"L": (-one, beta_n), "M": (beta_n, zero), "S": (zero, alpha_n)}
    whole = _span(scale, -one, alpha_n)
    return whole, {j: _span(scale, u, v) for j, (u, v) in cuts.items()}


@dataclass(frozen=True)
class TowerLevel:
    n: int
    step: RenormStep
    sub: Substitution
    incidence: Matrix
    heights: tuple[int, int, int]
    phi: tuple[Surd, Surd, Surd]
    interval: tuple[Surd, Surd]
    pieces: dict  # letter -> (lo, hi)

    @property
    def odd(self) -> bool:
        return self.n % 2 == 1

    def height(self, letter: str) -> int:
        return self.heights[_IDX[letter]]

    def special_sum(self, letter: str) -> Surd:
        return self.phi[_IDX[letter]]

    def length(self, letter: str) -> Surd:
        lo, hi = self.pieces[letter]
        return hi - lo

    def piece_of(self, y: Surd) -> Optional[str]:
        for j in LETTERS:
            lo, hi = self.pieces[j]
            if lo <= y < hi:
                return j
        return None

    def induced(self, y: Surd) -> Surd:
        """First return of the rotation to ``I^(n)``."""
        lo, hi = self.interval
        return y + hi if y < 0 else y + lo

    def induced_inverse(self, v: Surd) -> Surd:
        lo, hi = self.interval
        return v - hi if v >= lo + hi else v - lo


@dataclass(frozen=True)
class TowerStack:
    orbit: RenormOrbit
    levels: tuple[TowerLevel, ...]

    @property
    def params(self) -> ParamPair:
        return self.orbit.params

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def mean(self) -> Surd:
        return self.orbit.params.mean

    def __getitem__(self, n: int) -> TowerLevel:
        return self.levels[n]

    def heights(self, letter: str) -> list[int]:
        return [lv.height(letter) for lv in self.levels]


def build_stack(orbit: RenormOrbit, depth: int) -> TowerStack:
    """Levels ``0..depth``; needs ``depth + 1`` orbit steps."""
    if orbit.coboundary_detected and orbit.coboundary_level <= depth:
        raise CoboundaryError(f"expansion terminates at level {orbit.coboundary_level}")
    if depth < 0 or depth >= orbit.depth:
        raise ValueError(f"stack depth {depth} needs {depth + 1} orbit steps, have {orbit.depth}")
    params = orbit.params
    c = params.mean
    first = orbit.steps[0]
    if first.beta_n >= 0:
        phi = (1 - c, 1 - c, -c)
    else:
        phi = (1 - c, -c, -c)
    heights = (1, 1, 1)
    levels = []
    for n in range(depth + 1):
        step = orbit.steps[n]
        sub = substitution_of(step)
        inc = incidence_of(sub)
        whole, pieces = level_pieces(step.alpha_n, step.beta_n, step.scale)
        levels.append(TowerLevel(n, step, sub, inc, heights, phi, whole, pieces))
        heights = tuple(sum(inc[i][k] * heights[k] for k in range(3)) for i in range(3))
        phi = tuple(_word_sum(sub[j], phi) for j in LETTERS)
    return TowerStack(orbit, tuple(levels))


def _word_sum(word: str, values) -> Surd:
    total = Surd.coerce(0)
    for ch in word:
        total = total + values[_IDX[ch]]
    return total


# ---------------------------------------------------------------------------
# direct simulation oracle


def rotate(params: ParamPair, x: Surd) -> Surd:
    return x + params.alpha0 if x < 0 else x - 1


def _cocycle(params: ParamPair, x: Surd) -> Surd:
    return (1 if x < params.beta0 else 0) - params.mean


def _probes(lo: Surd, hi: Surd) -> list[Surd]:
    width = hi - lo
    return [lo, lo + width / 1000, lo + width / 2, hi - width / 1000]


def first_return_oracle(params: ParamPair, n: int, horizon: int = 10**6) -> dict:
    """Return times and special sums to ``I^(n)`` by orbit simulation.

    The level geometry is recomputed from a fresh orbit, not read from a stack.
    """
    orbit = renorm_orbit(params, n + 1)
    if orbit.coboundary_detected:
        raise CoboundaryError("coboundary parameters")
    step = orbit.steps[n]
    (lo_all, hi_all), pieces = level_pieces(step.alpha_n, step.beta_n, step.scale)
    heights, sums, constant = [], [], True
    for j in LETTERS:
        times, values = set(), set()
        for y in _probes(*pieces[j]):
            x, t, s = y, 0, Surd.coerce(0)
            while True:
                s = s + _cocycle(params, x)
                x = rotate(params, x)
                t += 1
                if lo_all <= x < hi_all:
                    break
                if t > horizon:
                    raise RuntimeError(f"no return to I^({n}) within {horizon} steps")
            times.add(t)
            values.add(s)
        constant = constant and len(times) == 1 and len(values) == 1
        heights.append(min(times))
        sums.append(min(values))
    return {"heights": tuple(heights), "sums": tuple(sums), "constant": constant}


# ---------------------------------------------------------------------------
# positivity of products over windows


def window_positivity(entries: Iterable, window: int) -> list[tuple[bool, bool]]:
    """For each start ``k``: (F-product positive, A-product positive).

    ``entries`` holds ``(state, a, b)`` triples in level order; products are
    taken with the latest level on the left.
    """
    entries = list(entries)
    out = []
    for k in range(len(entries) - window + 1):
        fp = ap = None
        for state, a, b in entries[k : k + window]:
            f = SIGN_PATTERNS[State(state)]
            m = closed_form_incidence(State(state), a, b)
            fp = f if fp is None else mat_mul(f, fp)
            ap = m if ap is None else mat_mul(m, ap)
        out.append((is_positive(fp), is_positive(ap)))
    return out
