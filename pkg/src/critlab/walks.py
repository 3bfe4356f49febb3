"""Left-continuous random walks: survival probabilities and ballot estimates.

A walk is described by the law of ``X`` (values in the nonnegative integers);
its increments are ``X - 1``, so it moves down by at most one per step.  That
is what makes absorption above a level exact: a walker at height ``x`` cannot
die within fewer than ``x`` steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from numba import njit
from scipy import special, stats

from . import randsrc
from .errors import InvariantViolation, ParameterError
from .stats import TailEstimate, proportion

TAIL_MASS = 1e-15


@dataclass(frozen=True)
class IncrementLaw:
    """Finite law of X; the walk steps by X - 1.

    ``truncation_mass`` records how much upper-tail mass was lumped onto the
    largest value when an unbounded law was cut off.
    """

    values: tuple
    probs: tuple
    truncation_mass: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.values) == 0:
            raise ParameterError("increment law has empty support")
        if len(self.values) != len(self.probs):
            raise ParameterError("values and probs differ in length")
        vals = [int(v) for v in self.values]
        if any(v < 0 for v in vals):
            raise ParameterError("law values must be nonnegative integers")
        if any(v != w for v, w in zip(vals, self.values)):
            raise ParameterError("law values must be integers")
        if len(set(vals)) != len(vals):
            raise ParameterError("law values must be distinct")
        if any(p < 0 for p in self.probs):
            raise ParameterError("negative probability")
        total = sum(self.probs)
        if abs(float(total) - 1.0) > 1e-12:
            raise ParameterError(f"probabilities sum to {float(total)!r}, not 1")

    @classmethod
    def from_pairs(cls, pairs, **kw) -> "IncrementLaw":
        pairs = sorted((int(v), p) for v, p in pairs if p != 0)
        return cls(tuple(v for v, _ in pairs), tuple(p for _, p in pairs), **kw)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self.probs)

    @property
    def max_value(self) -> int:
        return max(self.values)

    def prob(self, value: int):
        for v, p in zip(self.values, self.probs):
            if v == value:
                return p
        return Fraction(0) if self.exact else 0.0

    @property
    def mean(self):
        return sum(v * p for v, p in zip(self.values, self.probs))

    @property
    def variance(self):
        m = self.mean
        return sum((v - m) ** 2 * p for v, p in zip(self.values, self.probs))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.values, dtype=np.int64),
                np.asarray([float(p) for p in self.probs], dtype=np.float64))


def _lump_tail(values, probs, tail=TAIL_MASS):
    """Cut an (already computed) pmf once the remaining upper mass is below tail."""
    probs = np.asarray(probs, dtype=np.float64)
    upper = np.cumsum(probs[::-1])[::-1]  # upper[i] = P(X >= values[i])
    keep = len(probs)
    for i in range(len(probs)):
        if i > 0 and upper[i] < tail:
            keep = i
            break
    kept = probs[:keep].copy()
    removed = float(max(0.0, 1.0 - kept.sum()))
    kept[-1] += removed
    nz = kept > 0
    return list(np.asarray(values)[:keep][nz]), list(kept[nz]), removed


def binomial_law(N: int, q) -> IncrementLaw:
    """Bin(N, q); exact rationals when q is a Fraction."""
    if N < 0:
        raise ParameterError("N must be nonnegative")
    if isinstance(q, Fraction):
        pairs = [(k, math.comb(N, k) * q ** k * (1 - q) ** (N - k)) for k in range(N + 1)]
        return IncrementLaw.from_pairs(pairs, label=f"Bin({N},{q})")
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ParameterError("q must lie in [0, 1]")
    ks = np.arange(N + 1)
    pmf = stats.binom.pmf(ks, N, q)
    pmf = pmf / pmf.sum()
    vals, probs, removed = _lump_tail(ks, pmf)
    return IncrementLaw.from_pairs(zip(vals, probs), truncation_mass=removed,
                                   label=f"Bin({N},{q:g})")


def poisson_law(mu: float) -> IncrementLaw:
    mu = float(mu)
    if mu < 0:
        raise ParameterError("mu must be nonnegative")
    top = int(mu + 40 * math.sqrt(mu + 1) + 40)
    ks = np.arange(top + 1)
    pmf = stats.poisson.pmf(ks, mu)
    vals, probs, removed = _lump_tail(ks, pmf)
    return IncrementLaw.from_pairs(zip(vals, probs), truncation_mass=removed,
                                   label=f"Poisson({mu:g})")


def mixed_poisson_cut_gamma_law(theta: float, lam: float) -> IncrementLaw:
    """Law of xi ~ Poisson(J / lam) with J = min(E1 + E2, theta).

    P(xi = k) = (k+1) P(k+2, a theta) / (a^{k+2} lam^k) + e^{-theta}(1+theta) e^{-theta/lam} (theta/lam)^k / k!
    with a = 1 + 1/lam and P the regularized lower incomplete gamma function.
    """
    if theta <= 0 or lam <= 0:
        raise ParameterError("theta and lam must be positive")
    a = 1.0 + 1.0 / lam
    top = int(theta / lam + 40 * math.sqrt(theta / lam + 1) + 40)
    ks = np.arange(top + 1, dtype=np.float64)
    log_cont = np.log(ks + 1) + np.log(special.gammainc(ks + 2, a * theta)) \
        - (ks + 2) * math.log(a) - ks * math.log(lam)
    atom = randsrc.cut_gamma_atom(theta) * stats.poisson.pmf(ks, theta / lam)
    with np.errstate(divide="ignore"):
        pmf = np.exp(log_cont) + atom
    pmf = pmf / pmf.sum()
    vals, probs, removed = _lump_tail(ks.astype(np.int64), pmf)
    return IncrementLaw.from_pairs(zip(vals, probs), truncation_mass=removed,
                                   label=f"MixPoisson(theta={theta:g},lam={lam:g})")


def mixed_binomial_law(n: int, m: int, p: float) -> IncrementLaw:
    """Law of X ~ Bin(n, min(1, N p)) with N ~ Bin(m, p)."""
    Ns = np.arange(m + 1)
    wN = stats.binom.pmf(Ns, m, p)
    upper = np.cumsum(wN[::-1])[::-1]
    cut = int(np.searchsorted(-upper, -TAIL_MASS))  # first index whose upper mass < TAIL_MASS
    cut = max(cut, 1)
    Ns, wN = Ns[:cut], wN[:cut]
    wN = wN / wN.sum()
    top = int(min(n, n * min(1.0, Ns[-1] * p) + 40 * math.sqrt(n * p * Ns[-1] + 1) + 40))
    ks = np.arange(top + 1)
    pmf = np.zeros(top + 1)
    for N, w in zip(Ns, wN):
        pmf += w * stats.binom.pmf(ks, n, min(1.0, N * p))
    pmf = pmf / pmf.sum()
    vals, probs, removed = _lump_tail(ks, pmf)
    return IncrementLaw.from_pairs(zip(vals, probs), truncation_mass=removed,
                                   label=f"MixBin(n={n},m={m},p={p:g})")


def law_from_dict(d) -> IncrementLaw:
    return IncrementLaw.from_pairs(d.items())


# ---------------------------------------------------------------- survival DP

@njit(cache=True)
def _survival_curve(vals, probs, r, K):
    out = np.ones(K + 1)
    if r > K:
        return out
    # walkers at height >= K - t + 1 after t steps survive to K; absorb them
    width = K + 2
    cur = np.zeros(width)
    nxt = np.zeros(width)
    cur[r] = 1.0
    hi = r
    absorbed = 0.0
    comp = 0.0
    vmax = 0
    for i in range(vals.shape[0]):
        if vals[i] > vmax:
            vmax = vals[i]
    for t in range(1, K + 1):
        level = K - t + 1
        new_hi = 0
        for x in range(1, hi + 1):
            mass = cur[x]
            if mass == 0.0:
                continue
            cur[x] = 0.0
            for i in range(vals.shape[0]):
                y = x + vals[i] - 1
                if y <= 0:
                    continue
                w = mass * probs[i]
                if y >= level:
                    yk = w - comp
                    tk = absorbed + yk
                    comp = (tk - absorbed) - yk
                    absorbed = tk
                else:
                    nxt[y] += w
                    if y > new_hi:
                        new_hi = y
        s = 0.0
        c = 0.0
        for x in range(1, new_hi + 1):
            yk = nxt[x] - c
            tk = s + yk
            c = (tk - s) - yk
            s = tk
        out[t] = s + absorbed
        tmp = cur
        cur = nxt
        nxt = tmp
        hi = new_hi
    return out


def _survival_exact(law: IncrementLaw, r: int, K: int) -> list:
    out = [Fraction(1)] * (K + 1)
    if r > K:
        return out
    cur = {r: Fraction(1)}
    absorbed = Fraction(0)
    for t in range(1, K + 1):
        level = K - t + 1
        nxt: dict = {}
        for x, mass in cur.items():
            for v, p in zip(law.values, law.probs):
                y = x + v - 1
                if y <= 0:
                    continue
                if y >= level:
                    absorbed += mass * p
                else:
                    nxt[y] = nxt.get(y, 0) + mass * p
        cur = nxt
        out[t] = sum(cur.values(), Fraction(0)) + absorbed
    return out


def survival_curve(law: IncrementLaw, r: int, K: int, exact: bool = False):
    """P(r + S_t > 0 for all t <= k) for every k = 0..K."""
    if r < 1:
        raise ParameterError("start r must be a positive integer")
    if K < 1:
        raise ParameterError("horizon must be a positive integer")
    if exact:
        if not law.exact:
            raise ParameterError("exact mode needs rational probabilities")
        return _survival_exact(law, int(r), int(K))
    vals, probs = law.arrays()
    return _survival_curve(vals, probs, np.int64(r), np.int64(K))


def positivity_prob_dp(law: IncrementLaw, r: int, k: int, cap: int | None = None,
                       exact: bool = False):
    """Exact P(r + S_t > 0 for all t <= k) by forward dynamic programming.

    Heights at or above ``cap`` are treated as surviving; the default cap makes
    this exact.  A smaller user cap is rejected unless it is still exact.
    """
    if cap is not None:
        needed = min(k + 1, r + k * max(law.max_value - 1, 0) + 1)
        if cap < needed:
            raise ParameterError(f"cap {cap} below the exact level {needed}")
    curve = survival_curve(law, r, k, exact=exact)
    return curve[k] if exact else float(curve[k])


def dp_error_bound(law: IncrementLaw, k: int) -> float:
    """Bound on the effect of tail truncation on a k-step survival probability."""
    return k * law.truncation_mass


# ---------------------------------------------------------------- simulation

@njit(cache=True)
def _simulate_survival(st, vals, cdf, r, k, reps):
    hits = 0
    last = vals.shape[0] - 1
    for _ in range(reps):
        pos = r
        alive = True
        for _t in range(k):
            u = randsrc.uniform(st)
            j = np.searchsorted(cdf, u, side="right")
            if j > last:
                j = last
            pos += vals[j] - 1
            if pos <= 0:
                alive = False
                break
        if alive:
            hits += 1
    return hits


def simulate_survival(law: IncrementLaw, r: int, k: int, reps: int, seed) -> TailEstimate:
    """Monte Carlo estimate of the survival probability with a Wilson interval."""
    if reps < 1:
        raise ParameterError("reps must be at least 1")
    if r < 1 or k < 1:
        raise ParameterError("r and k must be positive")
    stream = randsrc.as_stream(seed)
    vals, probs = law.arrays()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    hits = _simulate_survival(stream.state, vals, cdf, np.int64(r), np.int64(k), np.int64(reps))
    return proportion(int(hits), reps, model="walk", n=0, A=None, direction="survival",
                      threshold=int(k))


# ---------------------------------------------------------------- ballot estimate

def favourable_count(increments, a: float) -> int:
    """Number of rotations whose partial sums all exceed a.

    When the total is j >= 1 the count cannot exceed j / floor(a + 1).
    """
    inc = [int(x) for x in increments]
    n = len(inc)
    count = 0
    for r in range(1, n + 1):
        s = 0
        ok = True
        for t in range(n):
            s += inc[(r + t) % n]
            if s <= a:
                ok = False
                break
        if ok:
            count += 1
    j = sum(inc)
    if j >= 1 and count > j / math.floor(a + 1):
        raise InvariantViolation(f"{count} favourable rotations exceed {j}/floor({a}+1)")
    return count


@dataclass
class BallotReport:
    r: int
    a: float
    n: int
    mode: str
    rows: list  # (j, lhs, rhs, ratio)
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def max_ratio(self) -> float:
        return max((float(row[3]) for row in self.rows), default=0.0)


def _step_distribution(law, steps, zero):
    dist = {0: zero + 1}
    for _ in range(steps):
        nd: dict = {}
        for s, w in dist.items():
            for v, p in zip(law.values, law.probs):
                nd[s + v - 1] = nd.get(s + v - 1, zero) + w * p
        dist = nd
    return dist


def _ballot_lhs_enumerate(law, r, a, n, zero):
    lhs: dict = {}
    pairs = list(zip(law.values, law.probs))
    for path in product(pairs, repeat=n):
        s = r
        w = zero + 1
        for v, p in path:
            s += v - 1
            w *= p
            if s <= a:
                break
        else:
            lhs[s] = lhs.get(s, zero) + w
    return lhs


def _ballot_lhs_dp(law, r, a, n, zero):
    cur = {r: zero + 1}
    for _ in range(n):
        nxt: dict = {}
        for x, w in cur.items():
            for v, p in zip(law.values, law.probs):
                y = x + v - 1
                if y > a:
                    nxt[y] = nxt.get(y, zero) + w * p
        cur = nxt
    return cur


def ballot_check(law: IncrementLaw, r: int, a: float, n: int, mode: str = "auto",
                 exact: bool | None = None, rtol: float = 1e-12) -> BallotReport:
    """Compare both sides of the ballot-type estimate for every attainable end level j.

    LHS(j) = P(r + S_t > a for t = 1..n, r + S_n = j)
    RHS(j) = P(xi = r)^{-1} j / ((n + 1) floor(a + 1)) P(S_{n+1} = j)
    where xi = X - 1 is the increment and S the increment walk started at 0.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if a < 0:
        raise ParameterError("barrier a must be nonnegative")
    p_r = law.prob(r + 1)
    if p_r == 0:
        raise ParameterError(f"P(increment = {r}) is zero; the estimate is undefined")
    if exact is None:
        exact = law.exact
    if exact and not law.exact:
        raise ParameterError("exact mode needs rational probabilities")
    zero = Fraction(0) if exact else 0.0
    if not exact:
        law = IncrementLaw(law.values, tuple(float(p) for p in law.probs),
                           law.truncation_mass, law.label)
        p_r = float(p_r)
    if mode == "auto":
        mode = "enumerate" if len(law.values) ** n <= 2_000_000 else "dp"
    if mode == "enumerate":
        lhs = _ballot_lhs_enumerate(law, r, a, n, zero)
    elif mode == "dp":
        lhs = _ballot_lhs_dp(law, r, a, n, zero)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    end = _step_distribution(law, n + 1, zero)
    floor_a = math.floor(a + 1)
    rows = []
    violations = []
    for j in sorted(lhs):
        left = lhs[j]
        right = (zero + j) / (p_r * (n + 1) * floor_a) * end.get(j, zero)
        if right > 0:
            ratio = left / right
        else:
            ratio = math.inf if left > 0 else 0.0
        rows.append((j, left, right, ratio))
        bad = left > right if exact else left > right * (1 + rtol)
        if bad:
            violations.append((j, left, right))
    return BallotReport(r=r, a=a, n=n, mode=mode, rows=rows, violations=violations)


# ---------------------------------------------------------------- k^{-1/2} bound

def _check_mean(law):
    if float(law.mean) > 1.0 + 1e-12:
        raise ParameterError(f"E[X] = {float(law.mean)} exceeds 1")


def survival_bound(law: IncrementLaw, r: int, k: int) -> float:
    """P(X = r+1)^{-1} (1 + 2 Var X) k^{-1/2}; may exceed 1."""
    _check_mean(law)
    c = float(law.prob(r + 1))
    if c <= 0:
        raise ParameterError(f"P(X = {r + 1}) must be positive")
    if k < 1:
        raise ParameterError("k must be positive")
    return (1.0 + 2.0 * float(law.variance)) / c / math.sqrt(k)


def survival_bound_printed(law: IncrementLaw, r: int, k: int) -> float:
    """The variant with P(X = r+1) as a multiplier instead of a divisor."""
    _check_mean(law)
    return float(law.prob(r + 1)) * (1.0 + 2.0 * float(law.variance)) / math.sqrt(k)


@dataclass
class WalkBoundReport:
    k: int
    exact_prob: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.exact_prob


def survival_report(law: IncrementLaw, r: int, k: int) -> WalkBoundReport:
    return WalkBoundReport(k, positivity_prob_dp(law, r, k), survival_bound(law, r, k))


def domination_violations(law: IncrementLaw, r: int, K: int) -> list:
    """All k in [1, K] where the DP survival probability exceeds the k^{-1/2} bound."""
    curve = survival_curve(law, r, K)
    ks = np.arange(1, K + 1)
    bounds = (1.0 + 2.0 * float(law.variance)) / float(law.prob(r + 1)) / np.sqrt(ks)
    _check_mean(law)
    bad = np.nonzero(curve[1:] > bounds)[0]
    return [(int(ks[i]), float(curve[i + 1]), float(bounds[i])) for i in bad]
