"""Orbit simulation, coding and the temporal CLT experiment.

The walk position is ``x_k = T^k(x)`` and the Birkhoff sum of the centered
indicator is ``phi_k = hits_k - k*c``, where ``hits_k`` counts ``i < k`` with
``x_i < beta0``.  Traces store the integer hit counts, which keeps them exact
in every mode.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .markov import MarkovArray, build_markov, chain_moments, sum_distribution
from .qfield import Surd
from .renorm import CoboundaryError, ParamPair
from .towers import LETTERS, TowerStack, rotate

__all__ = [
    "WalkConfig",
    "WalkTrace",
    "TemporalExperiment",
    "InsufficientDepth",
    "birkhoff",
    "code_point",
    "centering",
    "depth_for",
    "backward_sum",
    "temporal_experiment",
    "temporal_series",
    "ks_statistic",
    "histogram",
    "histogram_csv",
    "tower_distribution_check",
]


class InsufficientDepth(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    params: ParamPair
    x: Surd
    n: int
    mode: str = "fixed_point"
    frac_bits: int = 128
    guard_bits: int = 64

    def __post_init__(self):
        if self.mode not in ("exact", "fixed_point"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "fixed_point" and (self.frac_bits < 96 or self.guard_bits < 48):
            raise ValueError("fixed_point mode needs frac_bits >= 96 and guard_bits >= 48")
        if self.guard_bits >= self.frac_bits:
            raise ValueError("guard_bits must be smaller than frac_bits")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (-1 <= self.x < self.params.alpha0):
            raise ValueError(f"x={self.x} outside [-1, alpha0)")


@dataclass
class WalkTrace:
    params: ParamPair
    x: Surd
    hits: np.ndarray  # hits[k] = #{i < k : x_i < beta0}, k = 0..n-1
    exact_fallbacks: int = 0

    @property
    def n(self) -> int:
        return len(self.hits)

    def value(self, k: int) -> Surd:
        return int(self.hits[k]) - k * self.params.mean

    def floats(self, n: Optional[int] = None) -> np.ndarray:
        n = self.n if n is None else n
        c = float(self.params.mean)
        return self.hits[:n] - c * np.arange(n, dtype=np.float64)


def _indicator_exact(params: ParamPair, n: int, x: Surd) -> bytearray:
    out = bytearray(n)
    b = params.beta0
    for k in range(n):
        if x < b:
            out[k] = 1
        x = rotate(params, x)
    return out


def _indicator_fixed(config: WalkConfig) -> tuple[bytearray, int]:
    params, n, F = config.params, config.n, config.frac_bits
    # positions are shifted by +1 so the circle is [0, W)
    start = config.x + 1
    width = params.alpha0 + 1
    bound = params.beta0 + 1

    def fix(v: Surd) -> int:
        return v.to_decimal(F)[0].mant

    P, A, Wf, B = fix(start), fix(params.alpha0), fix(width), fix(bound)
    margin = 1 << (F - config.guard_bits)
    # rounded A and W are each off by at most 2 units, so drift is < 4 units per step
    if 2 + 4 * n >= margin:
        raise ArithmeticError("guard band too narrow for this many steps")
    lo, hi = B - margin, B + margin
    out = bytearray(n)
    fallbacks = 0
    for k in range(n):
        if P < lo:
            out[k] = 1
        elif P < hi:
            pos = _exact_position(start, params.alpha0, width, k)
            fallbacks += 1
            if pos < bound:
                out[k] = 1
            P = fix(pos)
        P += A
        if P >= Wf:
            P -= Wf
            if P < margin or Wf - P < margin:
                pos = _exact_position(start, params.alpha0, width, k + 1)
                fallbacks += 1
                P = fix(pos)
        elif Wf - P < margin:
            pos = _exact_position(start, params.alpha0, width, k + 1)
            fallbacks += 1
            P = fix(pos)
    return out, fallbacks


def _exact_position(start: Surd, alpha0: Surd, width: Surd, k: int) -> Surd:
    v = start + k * alpha0
    m = (v / width).floor()
    return v - m * width


def birkhoff(config: WalkConfig) -> WalkTrace:
    """Hit counts along the orbit; ``trace.value(k)`` is the Birkhoff sum ``phi_k``."""
    if config.mode == "exact":
        ind, fallbacks = _indicator_exact(config.params, config.n, config.x), 0
    else:
        ind, fallbacks = _indicator_fixed(config)
    flags = np.frombuffer(bytes(ind), dtype=np.uint8)
    hits = np.zeros(config.n, dtype=np.int64)
    if config.n > 1:
        np.cumsum(flags[:-1], out=hits[1:])
    return WalkTrace(config.params, config.x, hits, fallbacks)


# ---------------------------------------------------------------------------
# coding and centering


def code_point(stack: TowerStack, x: Surd, depth: int) -> tuple[list[tuple[str, int]], int]:
    """Digits ``(J_k, j_k)`` for ``k = 1..depth`` and the floor of ``x`` in its level ``depth`` tower."""
    if depth > stack.depth:
        raise InsufficientDepth(f"coding depth {depth} exceeds stack depth {stack.depth}")
    base = stack[0]
    if base.piece_of(x) is None:
        raise ValueError(f"x={x} outside the domain")
    y, floor = x, 0
    digits = []
    for k in range(depth):
        lower, upper = stack[k], stack[k + 1]
        J_low = lower.piece_of(y)
        steps = 0
        ulo, uhi = upper.interval
        while not (ulo <= y < uhi):
            y = lower.induced_inverse(y)
            steps += 1
            if steps > lower.step.a + 2:
                raise RuntimeError("coding failed to reach the next base")
        J = upper.piece_of(y)
        word = lower.sub[J]
        # the first visited subtower is the one containing the original point
        j = steps
        if j >= len(word) or word[j] != J_low:
            raise RuntimeError(f"inconsistent coding at level {k + 1}")
        floor += sum(lower.height(ch) for ch in word[:j])
        digits.append((J, j))
    return digits, floor


def depth_for(stack: TowerStack, n: int) -> int:
    """Smallest ``N >= 1`` with ``n <= h_S^(N)``."""
    for N in range(1, stack.depth + 1):
        if n <= stack[N].height("S"):
            return N
    raise InsufficientDepth(f"h_S stays below {n} up to depth {stack.depth}")


def centering(stack: TowerStack, x: Surd, n: int) -> tuple[int, Surd]:
    """``(N, c)`` where ``c`` is the Birkhoff sum from the base of x's level ``N`` tower up to ``x``."""
    N = depth_for(stack, n)
    digits, _ = code_point(stack, x, N)
    c = Surd.coerce(0)
    for k, (J, j) in enumerate(digits, start=1):
        lower = stack[k - 1]
        for ch in lower.sub[J][:j]:
            c = c + lower.special_sum(ch)
    return N, c


def backward_sum(params: ParamPair, x: Surd, steps: int) -> Surd:
    """``sum_{t=1}^{steps} phi(T^{-t} x)`` by direct backward iteration."""
    total = Surd.coerce(0)
    for _ in range(steps):
        x = x - params.alpha0 if x >= params.alpha0 - 1 else x + 1
        total = total + ((1 if x < params.beta0 else 0) - params.mean)
    return total


# ---------------------------------------------------------------------------
# statistics


def ks_statistic(values: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``values`` and N(0, 1)."""
    z = np.sort(np.asarray(values, dtype=np.float64))
    n = len(z)
    if n == 0:
        raise ValueError("no samples")
    cdf = ndtr(z)
    i = np.arange(1, n + 1)
    return float(max((i / n - cdf).max(), (cdf - (i - 1) / n).max()))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    below: int
    above: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.below + self.above


def histogram(values: Sequence[float], bins: int, lo: float = -5.0, hi: float = 5.0) -> Histogram:
    v = np.asarray(values, dtype=np.float64)
    edges = np.linspace(lo, hi, bins + 1)
    inside = (v >= lo) & (v < hi)
    counts, _ = np.histogram(v[inside], bins=edges)
    return Histogram(edges, counts, int((v < lo).sum()), int((v >= hi).sum()))


def _g(v: float) -> str:
    return f"{v:.12g}"


def histogram_csv(h: Histogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count", "density"])
    total = h.total
    for left, right, c in zip(h.edges[:-1], h.edges[1:], h.counts):
        w.writerow([_g(left), _g(right), int(c), _g(c / (total * (right - left)))])
    w.writerow(["-inf", _g(h.edges[0]), h.below, _g(0.0)])
    w.writerow([_g(h.edges[-1]), "inf", h.above, _g(0.0)])
    return buf.getvalue()


@dataclass
class TemporalExperiment:
    config: WalkConfig
    N: int
    c_n_x: Surd
    e_N: float
    sigma_N: float
    samples: np.ndarray
    hist: Histogram
    ks: float
    exact_fallbacks: int = 0
    extra: dict = field(default_factory=dict)


SIGMA_FLOOR = 1e-9


def _experiment(config, trace, stack, n, bins, exact_cap, variant="full") -> TemporalExperiment:
    N, c = centering(stack, config.x, n)
    mom = chain_moments(build_markov(stack, N), variant, exact_cap=exact_cap)
    sigma = mom.sigma
    if not sigma > SIGMA_FLOOR:
        raise CoboundaryError(f"sigma_N={sigma} below positivity threshold")
    e = float(mom.e)
    # phi_k(x) + c is the Birkhoff sum from the tower base, which is what the chain models
    z = (trace.floats(n) + float(c) - e) / sigma
    return TemporalExperiment(config, N, c, e, sigma, z, histogram(z, bins), ks_statistic(z), trace.exact_fallbacks)


def _stack_for(params: ParamPair, n: int, stack: Optional[TowerStack]) -> TowerStack:
    if stack is not None:
        return stack
    from .renorm import renorm_orbit
    from .towers import build_stack

    depth = 8
    while True:
        orbit = renorm_orbit(params, depth + 1)
        if orbit.coboundary_detected:
            raise CoboundaryError("expansion terminates")
        st = build_stack(orbit, depth)
        if st[depth].height("S") >= n:
            return st
        depth *= 2
        if depth > 4096:
            raise InsufficientDepth("tower heights do not reach n")


def temporal_experiment(config: WalkConfig, bins: int = 80, stack: Optional[TowerStack] = None, exact_cap: int = 60) -> TemporalExperiment:
    stack = _stack_for(config.params, config.n, stack)
    trace = birkhoff(config)
    return _experiment(config, trace, stack, config.n, bins, exact_cap)


def temporal_series(config: WalkConfig, ns: Sequence[int], bins: int = 80, stack: Optional[TowerStack] = None, exact_cap: int = 60) -> list[TemporalExperiment]:
    """Experiments for several ``n`` sharing one trace of length ``max(ns)``."""
    top = max(ns)
    full = WalkConfig(config.params, config.x, top, config.mode, config.frac_bits, config.guard_bits)
    stack = _stack_for(config.params, top, stack)
    trace = birkhoff(full)
    out = []
    for n in ns:
        cfg = WalkConfig(config.params, config.x, n, config.mode, config.frac_bits, config.guard_bits)
        out.append(_experiment(cfg, trace, stack, n, bins, exact_cap))
    return out


# ---------------------------------------------------------------------------
# tower sums versus chain sums


def tower_distribution_check(stack: TowerStack, markov: Optional[MarkovArray], n: int, J: str, xi_override=None) -> bool:
    """Compare the Birkhoff sums up the level ``n`` tower ``J`` with the chain law under ``pi^J``."""
    if J not in LETTERS:
        raise ValueError(f"unknown letter {J!r}")
    arr = markov if markov is not None and markov.n == n else build_markov(stack, n)
    params = stack.params
    lo, _ = stack[n].pieces[J]
    h = stack[n].height(J)
    tower: dict = {}
    x, s = lo, Surd.coerce(0)
    for _ in range(h):
        s = s + ((1 if x < params.beta0 else 0) - params.mean)
        tower[s] = tower.get(s, 0) + 1
        x = rotate(params, x)
    tower = {v: Fraction(c, h) for v, c in tower.items()}
    chain = sum_distribution(arr, J, xi_override)
    chain = {v: p for v, p in chain.items() if p}
    return tower == chain
