"""Non-homogeneous Markov chain coding the towers.

States at level ``k`` are pairs ``(J, j)`` with ``j < |tau_{k-1}(J)|``: the
level ``k`` tower ``J`` and the position ``j`` of the level ``k-1`` subtower
inside it.  The chain starts at level ``n`` and runs down to level 1; the
transition ``p[k]`` maps level ``k+1`` states to level ``k`` states.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .qfield import Surd
from .towers import LETTERS, TowerStack

__all__ = [
    "MarkovArray",
    "MomentReport",
    "ContractionReport",
    "VARIANTS",
    "build_markov",
    "cylinder_measure",
    "chain_moments",
    "moment_series",
    "pairwise_moments",
    "brute_force_moments",
    "sum_distribution",
    "contraction_coeff",
    "block_contraction",
    "sample_paths",
    "rho_bound",
    "SAMPLE_BLOCK",
]

VARIANTS = ("full", "L", "M", "S")
SAMPLE_BLOCK = 8192

StateT = tuple[str, int]


@dataclass
class MarkovArray:
    stack: TowerStack
    n: int
    states: dict  # k -> list of (J, j), k = 1..n
    index: dict  # k -> {(J, j): position}
    # trans[k][i] = list of (position in S_k, Fraction) for the i-th state of S_{k+1}
    trans: dict
    xi: dict  # k -> list of Surd, aligned with states[k]
    pi: list  # Surd weights on S_n
    pi_letter: dict  # J -> list of Fraction on S_n
    _dense: dict = field(default_factory=dict, repr=False)

    def initial(self, variant: str) -> list:
        if variant == "full":
            return self.pi
        if variant in LETTERS:
            return self.pi_letter[variant]
        raise ValueError(f"unknown variant {variant!r}")

    def dense(self, k: int) -> list[list[Fraction]]:
        """Transition ``p[k]`` as a dense matrix, rows ``S_{k+1}``, columns ``S_k``."""
        if k not in self._dense:
            width = len(self.states[k])
            rows = []
            for row in self.trans[k]:
                dense = [Fraction(0)] * width
                for t, pr in row:
                    dense[t] = pr
                rows.append(dense)
            self._dense[k] = rows
        return self._dense[k]


def build_markov(stack: TowerStack, n: int) -> MarkovArray:
    if n < 1 or n > stack.depth:
        raise ValueError(f"chain length {n} needs stack depth >= {n}, have {stack.depth}")
    states, index, xi = {}, {}, {}
    for k in range(1, n + 1):
        sub = stack[k - 1].sub
        phi = stack[k - 1]
        states[k] = [(J, j) for J in LETTERS for j in range(len(sub[J]))]
        index[k] = {s: i for i, s in enumerate(states[k])}
        vals = []
        for J, j in states[k]:
            word = sub[J]
            upto = j + 1 if k == 1 else j
            total = Surd.coerce(0)
            for ch in word[:upto]:
                total = total + phi.special_sum(ch)
            vals.append(total)
        xi[k] = vals

    trans = {}
    for k in range(1, n):
        upper, lower = stack[k], stack[k - 1]
        rows = []
        for J, j in states[k + 1]:
            K = upper.sub[J][j]
            hK = upper.height(K)
            row = []
            for kk, ch in enumerate(lower.sub[K]):
                row.append((index[k][(K, kk)], Fraction(lower.height(ch), hK)))
            assert sum(p for _, p in row) == 1
            rows.append(row)
        trans[k] = rows

    top, below = stack[n], stack[n - 1]
    width = 1 + stack.params.alpha0
    pi, pi_letter = [], {J: [] for J in LETTERS}
    for K, kk in states[n]:
        hsub = below.height(below.sub[K][kk])
        pi.append(top.length(K) * hsub / width)
        for J in LETTERS:
            pi_letter[J].append(Fraction(hsub, top.height(K)) if J == K else Fraction(0))
    return MarkovArray(stack, n, states, index, trans, xi, pi, pi_letter)


def cylinder_measure(arr: MarkovArray, word: Sequence[StateT]):
    """Measure of the cylinder fixed by ``word = (w_1, ..., w_n)`` under ``pi_n``."""
    n = arr.n
    if len(word) != n:
        raise ValueError(f"word length {len(word)} != chain length {n}")
    pos = []
    for k, s in enumerate(word, start=1):
        i = arr.index[k].get(tuple(s))
        if i is None:
            return Surd.coerce(0)
        pos.append(i)
    value = arr.pi[pos[-1]]
    for k in range(1, n):
        row = dict(arr.trans[k][pos[k]])
        pr = row.get(pos[k - 1])
        if pr is None:
            return Surd.coerce(0)
        value = value * pr
    return value


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentReport:
    n: int
    variant: str
    e: object  # Surd when exact, mpmath.mpf otherwise
    var: object
    exact: bool

    @property
    def sigma(self) -> float:
        return math.sqrt(float(self.var))


def _conditional_tables(arr: MarkovArray, upto: int, exact: bool):
    """``g[k][s] = E[sum_{i<=k} xi_i | X_k = s]`` and the matching second moments."""
    conv = (lambda v: v) if exact else _mp
    g, m2 = {}, {}
    g[1] = [conv(v) for v in arr.xi[1]]
    m2[1] = [v * v for v in g[1]]
    for k in range(2, upto + 1):
        gk, mk = [], []
        for i, x in enumerate(arr.xi[k]):
            x = conv(x)
            eg = em = 0
            for t, pr in arr.trans[k - 1][i]:
                w = pr if exact else mpmath.mpf(pr.numerator) / pr.denominator
                eg = eg + w * g[k - 1][t]
                em = em + w * m2[k - 1][t]
            gk.append(x + eg)
            mk.append(x * x + 2 * x * eg + em)
        g[k], m2[k] = gk, mk
    return g, m2


def _mp(v: Surd):
    if v.q == 0:
        return mpmath.mpf(v.p) / v.r
    return (v.p + v.q * mpmath.sqrt(v.d)) / v.r


def _zero(exact: bool):
    return Surd.coerce(0) if exact else mpmath.mpf(0)


def chain_moments(arr: MarkovArray, variant: str = "full", method: str = "dp", exact_cap: int = 60) -> MomentReport:
    """Mean and variance of ``sum_{k=1}^n xi_k(X_k)`` with ``X_n`` drawn from the variant's law."""
    n = arr.n
    exact = n <= exact_cap
    if method == "pairwise":
        e, var = pairwise_moments(arr, variant, exact)
        return MomentReport(n, variant, e, var, exact)
    if method != "dp":
        raise ValueError(f"unknown method {method!r}")
    with mpmath.workdps(50):
        g, m2 = _conditional_tables(arr, n, exact)
        init = arr.initial(variant)
        e = s2 = _zero(exact)
        for i, w in enumerate(init):
            if not exact:
                w = _mp(Surd.coerce(w))
            e = e + w * g[n][i]
            s2 = s2 + w * m2[n][i]
        var = s2 - e * e
    return MomentReport(n, variant, e, var, exact)


def moment_series(stack: TowerStack, upto: int, variant: str = "full", exact_cap: int = 60) -> list[MomentReport]:
    """Moments for every chain length ``1..upto`` from one pass of the recursion.

    The conditional tables do not depend on the chain length, only the initial
    law does, so they are shared across lengths.
    """
    arr = build_markov(stack, upto)
    exact = upto <= exact_cap
    out = []
    with mpmath.workdps(50):
        g, m2 = _conditional_tables(arr, upto, exact)
        for n in range(1, upto + 1):
            sub = build_markov(stack, n) if n < upto else arr
            init = sub.initial(variant)
            e = s2 = _zero(exact)
            for i, w in enumerate(init):
                if not exact:
                    w = _mp(Surd.coerce(w))
                e = e + w * g[n][i]
                s2 = s2 + w * m2[n][i]
            out.append(MomentReport(n, variant, e, s2 - e * e, exact))
    return out


def pairwise_moments(arr: MarkovArray, variant: str = "full", exact: bool = True):
    """Same moments from marginals and pairwise covariances."""
    n = arr.n
    conv = (lambda v: v) if exact else (lambda v: _mp(Surd.coerce(v)))
    prob = (lambda p: p) if exact else (lambda p: mpmath.mpf(p.numerator) / p.denominator)
    with mpmath.workdps(50):
        marg = {n: [conv(w) for w in arr.initial(variant)]}
        for k in range(n - 1, 0, -1):
            nxt = [_zero(exact)] * len(arr.states[k])
            for i, row in enumerate(arr.trans[k]):
                for t, p in row:
                    nxt[t] = nxt[t] + marg[k + 1][i] * prob(p)
            marg[k] = nxt
        xi = {k: [conv(v) for v in arr.xi[k]] for k in range(1, n + 1)}
        mean = {k: sum((m * x for m, x in zip(marg[k], xi[k])), _zero(exact)) for k in marg}
        e = sum((mean[k] for k in range(1, n + 1)), _zero(exact))
        var = _zero(exact)
        for i in range(1, n + 1):
            second = sum((m * x * x for m, x in zip(marg[i], xi[i])), _zero(exact))
            var = var + second - mean[i] * mean[i]
            # v[s] = E[xi_i(X_i) | X_j = s], pushed up one level at a time
            v = xi[i]
            for j in range(i + 1, n + 1):
                v = [sum((prob(p) * v[t] for t, p in row), _zero(exact)) for row in arr.trans[j - 1]]
                joint = sum((m * x * w for m, x, w in zip(marg[j], xi[j], v)), _zero(exact))
                var = var + 2 * (joint - mean[i] * mean[j])
    return e, var


def _paths(arr: MarkovArray, variant: str):
    """All positive-weight paths as (weight, xi-sum), enumerated top down."""
    init = arr.initial(variant)
    n = arr.n
    out = []

    def walk(k, i, w, s):
        s = s + arr.xi[k][i]
        if k == 1:
            out.append((w, s))
            return
        for t, p in arr.trans[k - 1][i]:
            walk(k - 1, t, w * p, s)

    for i, w in enumerate(init):
        if w:
            walk(n, i, w, Surd.coerce(0))
    return out


def brute_force_moments(arr: MarkovArray, variant: str = "full"):
    """Exact moments by enumerating every cylinder; for small ``n`` only."""
    paths = _paths(arr, variant)
    e = sum((w * s for w, s in paths), Surd.coerce(0))
    s2 = sum((w * s * s for w, s in paths), Surd.coerce(0))
    return e, s2 - e * e


def sum_distribution(arr: MarkovArray, variant: str, xi_override: Optional[dict] = None) -> dict:
    """Exact law of ``sum_k xi_k(X_k)`` as ``{value: probability}``."""
    xi = arr.xi if xi_override is None else xi_override
    memo: dict = {}

    def dist(k, i):
        key = (k, i)
        if key in memo:
            return memo[key]
        x = xi[k][i]
        if k == 1:
            res = {x: Fraction(1)}
        else:
            res = {}
            for t, p in arr.trans[k - 1][i]:
                for v, q in dist(k - 1, t).items():
                    res[x + v] = res.get(x + v, 0) + p * q
        memo[key] = res
        return res

    out: dict = {}
    for i, w in enumerate(arr.initial(variant)):
        if w:
            for v, q in dist(arr.n, i).items():
                out[v] = out.get(v, 0) + w * q
    return out


# ---------------------------------------------------------------------------
# contraction


def contraction_coeff(P) -> object:
    """Half the largest L1 distance between two rows of a stochastic matrix."""
    rows = [list(r) for r in P]
    if not rows:
        raise ValueError("empty matrix")
    exact = all(isinstance(v, (int, Fraction, Surd)) for r in rows for v in r)
    for r in rows:
        total = sum(r, Fraction(0)) if exact else float(sum(float(v) for v in r))
        if any(v < 0 for v in r) or (total != 1 if exact else abs(total - 1) > 1e-9):
            raise ValueError("matrix is not row stochastic")
    best = Fraction(0) if exact else 0.0
    for a in range(len(rows)):
        for b in range(a + 1, len(rows)):
            d = sum((abs(x - y) for x, y in zip(rows[a], rows[b])), Fraction(0) if exact else 0.0)
            if d > best:
                best = d
    return best / 2


@dataclass(frozen=True)
class ContractionReport:
    block_len: int
    taus: tuple  # tau of the block starting at each level k = 1..n-block_len
    delta: object
    M: Optional[int]

    @property
    def contracting(self) -> bool:
        return self.delta < 1


def block_contraction(arr: MarkovArray, block_len: int, M: Optional[int] = None) -> ContractionReport:
    """``tau(p[k+b-1] ... p[k])`` for every block that fits in the chain."""
    if block_len < 1:
        raise ValueError("block_len must be >= 1")
    taus = []
    for k in range(1, arr.n - block_len + 1):
        prod = arr.dense(k + block_len - 1)
        for j in range(k + block_len - 2, k - 1, -1):
            low = arr.dense(j)
            prod = [
                [sum((row[m] * low[m][c] for m in range(len(low))), Fraction(0)) for c in range(len(low[0]))]
                for row in prod
            ]
        taus.append(contraction_coeff(prod))
    delta = max(taus) if taus else Fraction(0)
    report = ContractionReport(block_len, tuple(taus), delta, M)
    if M is not None and block_len >= 5 * M + 1 and taus and not delta < 1:
        raise AssertionError(f"block length {block_len} >= 5M+1 but delta = {delta}")
    return report


def rho_bound(phi: float) -> float:
    """Upper bound on the rho mixing coefficient from the phi coefficient."""
    return 2 * math.sqrt(phi)


# ---------------------------------------------------------------------------
# sampling


def _cdf_tables(arr: MarkovArray, variant: str):
    init = np.array([float(w) for w in arr.initial(variant)])
    init = np.cumsum(init / init.sum())
    init[-1] = 1.0
    tables = {}
    for k in range(1, arr.n):
        dense = np.array([[float(p) for p in row] for row in arr.dense(k)])
        cum = np.cumsum(dense, axis=1)
        cum[:, -1] = 1.0
        tables[k] = cum
    xi = {k: np.array([float(v) for v in arr.xi[k]]) for k in arr.xi}
    return init, tables, xi


def _sample_block(arr, tables, seed: int, block: int, count: int) -> np.ndarray:
    init, cum, xi = tables
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    u = rng.random((arr.n, count))
    cur = np.searchsorted(init, u[0], side="right")
    total = xi[arr.n][cur].copy()
    for k in range(arr.n - 1, 0, -1):
        rows = cum[k][cur]
        cur = (u[arr.n - k][:, None] >= rows).sum(axis=1)
        total += xi[k][cur]
    return total


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TCLT_THREADS", "1")))
    except ValueError:
        return 1


def sample_paths(arr: MarkovArray, variant: str, count: int, seed: int) -> np.ndarray:
    """Path sums of ``count`` independent chains.

    Samples are split into fixed blocks, each with its own counter-based
    stream keyed by ``(seed, block)``, so the output does not depend on the
    number of worker threads.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return np.empty(0)
    tables = _cdf_tables(arr, variant)
    blocks = [(b, min(SAMPLE_BLOCK, count - b * SAMPLE_BLOCK)) for b in range(-(-count // SAMPLE_BLOCK))]
    workers = _threads()
    if workers == 1:
        parts = [_sample_block(arr, tables, seed, b, c) for b, c in blocks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda bc: _sample_block(arr, tables, seed, *bc), blocks))
    return np.concatenate(parts)
