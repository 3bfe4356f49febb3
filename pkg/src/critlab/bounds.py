"""Tail-bound formulas, per-model hypothesis constants and their checkers.

The lower-tail argument needs, for each model, constants c0, sigma2, eps1,
eps2 (first hypothesis, before tau_h) and c1, eps3 (second hypothesis, after
tau_h) bounding the conditional moments of the exploration increments.
``lower_tail_spec`` builds them; ``check_conditions`` verifies them against
exact conditional moments on the whole (t, R) state grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import walks
from .errors import ParameterError
from .randsrc import cut_gamma_mean, cut_gamma_second_moment

SAFETY = 2.0
DEFAULT_BRACKET = (1e-6, 50.0)


# ------------------------------------------------------------ thresholds

def _frac(x) -> Fraction:
    # floats are read as the decimal they print as, so A=1.5 means 3/2
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def ceil_n23_over(n: int, A=1) -> int:
    """ceil(n^{2/3} / A) in exact arithmetic."""
    A = _frac(A)
    if A <= 0:
        raise ParameterError("A must be positive")
    guess = max(1, int(n ** (2.0 / 3.0) / float(A)))
    # smallest T with (T A)^3 >= n^2
    T = max(1, guess - 2)
    while (T * A) ** 3 < n * n:
        T += 1
    while T > 1 and ((T - 1) * A) ** 3 >= n * n:
        T -= 1
    return T


def floor_A_n23(n: int, A) -> int:
    """floor(A n^{2/3}) in exact arithmetic."""
    A = _frac(A)
    k = max(0, int(float(A) * n ** (2.0 / 3.0)) - 2)
    while (k + 1) ** 3 <= A ** 3 * n * n:
        k += 1
    while k > 0 and k ** 3 > A ** 3 * n * n:
        k -= 1
    return k


def lower_threshold(n: int, A) -> int:
    """|C_max| < n^{2/3}/A holds exactly when |C_max| < this integer."""
    return ceil_n23_over(n, A)


def upper_threshold(n: int, A) -> int:
    """|C_max| > A n^{2/3} holds exactly when |C_max| > this integer."""
    return floor_A_n23(n, A)


# ------------------------------------------------------------ formulas

def phi(N1: int, N2: int, h: float, sigma2: float, z: float, p_tau1: float = 0.0) -> float:
    """3 (sigma2 - 1)^{-1} (2h^2 - z^2) / N2 + P(tau_1 <= N2); may exceed 1."""
    if not sigma2 > 1:
        raise ParameterError("sigma2 must exceed 1")
    if not 1 <= N1 <= N2:
        raise ParameterError("need 1 <= N1 <= N2")
    if not 0.0 <= p_tau1 <= 1.0:
        raise ParameterError("p_tau1 must be a probability")
    return 3.0 / (sigma2 - 1.0) / N2 * (2.0 * h * h - z * z) + p_tau1


def return_bound(c1: float, N1: int, h: float, p_tau2: float = 0.0, p_reach: float = 1.0) -> float:
    """(c1 + 3) N1 / h^2 + P(tau_2 <= N1) / P(R_{tau_h} >= h)."""
    if h <= 0:
        raise ParameterError("h must be positive")
    if p_tau2 == 0.0:
        return (c1 + 3.0) * N1 / (h * h)
    if p_reach <= 0.0:
        return math.inf
    return (c1 + 3.0) * N1 / (h * h) + p_tau2 / p_reach


def jointprop_value(phi_value: float, c1: float, N1: int, h: float, p_tau2: float = 0.0) -> float:
    """Phi + (c1 + 3) N1 / h^2 + P(tau_2 <= N1) / (1 - Phi); infinite when Phi >= 1."""
    if phi_value >= 1.0:
        return math.inf
    return phi_value + (c1 + 3.0) * N1 / (h * h) + p_tau2 / (1.0 - phi_value)


def jointprop_bound(spec: "BoundSpec", p_tau1: float = 0.0, p_tau2: float = 0.0) -> float:
    """Bound on P(every excursion lasts fewer than N1 steps); >= 1 means vacuous."""
    ph = phi(spec.N1, spec.N2, spec.h, spec.sigma2, spec.z, p_tau1)
    return jointprop_value(ph, spec.c1, spec.N1, spec.h, p_tau2)


def is_vacuous(value: float) -> bool:
    return not value < 1.0


def chernoff_binomial(N: int, q: float, x: float) -> float:
    """exp(-x^2 / (2Nq + 2x/3)), a bound on P(Bin(N, q) >= Nq + x)."""
    if not x > 0:
        raise ParameterError("x must be positive")
    if N < 0 or not 0.0 <= q <= 1.0:
        raise ParameterError("need N >= 0 and q in [0, 1]")
    return math.exp(-x * x / (2.0 * N * q + 2.0 * x / 3.0))


# ------------------------------------------------------------ critical curve

def F_eval(beta: float, lam: float) -> float:
    """lam^{-1} (2(1 - e^{-lam beta}) - lam beta e^{-lam beta})."""
    if not (beta > 0 and lam > 0):
        raise ParameterError("beta and lam must be positive")
    theta = lam * beta
    return (2.0 * -math.expm1(-theta) - theta * math.exp(-theta)) / lam


def _residual(beta: float, lam: float) -> float:
    # 1 - F(beta, lam) without cancellation near the top of F
    theta = lam * beta
    return (lam - 2.0 + math.exp(-theta) * (2.0 + theta)) / lam


def _bisect(f, lo: float, hi: float, what: str) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ParameterError(f"no sign change of F - 1 on [{lo}, {hi}] for {what}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo <= 4e-16 * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_beta(lam: float, bracket=DEFAULT_BRACKET) -> float:
    """beta with F(beta, lam) = 1; none exists when lam >= 2 since F < 2/lam."""
    if not lam > 0:
        raise ParameterError("lam must be positive")
    return _bisect(lambda b: _residual(b, lam), float(bracket[0]), float(bracket[1]),
                   f"lam={lam}")


def critical_lambda(beta: float, bracket=DEFAULT_BRACKET) -> float:
    """lam with F(beta, lam) = 1; none exists when beta <= 1 since F < beta."""
    if not beta > 0:
        raise ParameterError("beta must be positive")
    return _bisect(lambda l: _residual(beta, l), float(bracket[0]), float(bracket[1]),
                   f"beta={beta}")


def simple_graph_factor(d: int) -> tuple[float, float]:
    """(c_d, 2/c_d) with c_d = exp((1 - d^2)/4), the limiting simplicity probability."""
    if d < 3:
        raise ParameterError("d must be at least 3")
    c = math.exp((1.0 - d * d) / 4.0)
    return c, 2.0 / c


# ------------------------------------------------------------ conditional moments

def _M(n: int, t: int, R: int) -> int:
    if t < 1 or R < 0:
        raise ParameterError("need t >= 1 and R >= 0")
    U = n - (t - 1) - R
    if U < 0:
        raise ParameterError(f"U = {U} is negative at t={t}, R={R}")
    return max(U - 1, 0) if R == 0 else U


def er_conditional_moments(n: int, p: float, t: int, R: int) -> tuple[float, float]:
    M = _M(n, t, R)
    mean = M * p
    return mean, M * p * (1.0 - p) + mean * mean


def _intersection_q_moments(K: int, p: float) -> tuple[float, float]:
    # E[q], E[q^2] for q = 1 - (1-p)^N, N ~ Bin(K, p)
    if K <= 0 or p <= 0.0:
        return 0.0, 0.0
    if p >= 1.0:
        return 1.0, 1.0
    la = K * math.log1p(-p * p)
    lb = K * math.log1p(-2.0 * p * p + p ** 3)
    a = math.exp(la)
    Eq = -math.expm1(la)
    Eq2 = Eq - a * -math.expm1(lb - la)
    return Eq, max(Eq2, 0.0)


def intersection_conditional_moments(n: int, m: int, p: float, t: int, R: int,
                                     D: int) -> tuple[float, float]:
    if not 0 <= D <= m:
        raise ParameterError("D must lie in [0, m]")
    M = _M(n, t, R)
    Eq, Eq2 = _intersection_q_moments(m - D, p)
    return M * Eq, M * Eq + M * (M - 1) * Eq2


def _laplace_cut_gamma(theta: float, b: float) -> float:
    """E[exp(-b J)] for J = min(E1 + E2, theta)."""
    a = 1.0 + b
    cont = (1.0 - math.exp(-a * theta) * (1.0 + a * theta)) / (a * a)
    return cont + math.exp(-b * theta) * math.exp(-theta) * (1.0 + theta)


def quantum_conditional_moments(n: int, theta: float, lam: float, t: int,
                                R: int) -> tuple[float, float]:
    if not (theta > 0 and lam > 0):
        raise ParameterError("theta and lam must be positive")
    M = _M(n, t, R)
    b = 1.0 / (lam * n)
    psi1 = _laplace_cut_gamma(theta, b)
    psi2 = _laplace_cut_gamma(theta, 2.0 * b)
    Eq = 1.0 - psi1
    Eq2 = 1.0 - 2.0 * psi1 + psi2
    return M * Eq, M * Eq + M * (M - 1) * Eq2


# ------------------------------------------------------------ model constants

@dataclass(frozen=True)
class BoundSpec:
    """Hypothesis constants and window parameters for one (model, n, A)."""

    model: str
    n: int
    A: float
    c0: float
    sigma2: float
    eps1: float
    eps2: float
    c1: float
    eps3: float
    h: float
    T: int
    T_prime: int
    z: float
    N1: int
    N2: int
    x: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def window(self) -> tuple[float, float]:
        lo = max(self.c0, 1.0)
        hi = min((self.sigma2 - 1.0) / 6.0 / self.eps1, 1.0 / self.eps3)
        return lo, hi

    @property
    def in_window(self) -> bool:
        lo, hi = self.window
        return lo <= self.h <= hi

    @property
    def degenerate(self) -> bool:
        """2h^2 < z^2: the first term of Phi is negative and the bound meaningless."""
        return 2.0 * self.h * self.h < self.z * self.z

    def issues(self) -> list[str]:
        out = []
        if not self.sigma2 > 1.0 + 3.0 * self.eps2:
            out.append(f"sigma2={self.sigma2:g} <= 1 + 3 eps2={1 + 3 * self.eps2:g}")
        lo, hi = self.window
        if self.h < lo:
            out.append(f"h={self.h:.4g} below the window floor {lo:.4g}")
        if self.h > hi:
            out.append(f"h={self.h:.4g} above the window ceiling {hi:.4g}")
        if self.degenerate:
            out.append(f"2h^2 < z^2 (h={self.h:.4g}, z={self.z:g})")
        return out

    def with_overrides(self, **kw) -> "BoundSpec":
        unknown = set(kw) - set(self.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown BoundSpec field(s): {sorted(unknown)}")
        return replace(self, **kw)


def intersection_constants(n: int, m: int, safety: float = SAFETY) -> dict:
    """c_1..c_4 for the intersection graph at aspect ratio m/n.

    From the exact moments: E[eta^2] <= 2 + sqrt(n/m) + o(1), the mean falls
    short of 1 by at most (3 + 3 sqrt(n/m)) T'/n + o(T'/n) before tau_1 and
    the second moment of eta^2 by three times that plus lower order terms.
    Each constant carries the multiplicative safety factor.
    """
    s = math.sqrt(n / m)
    base = 3.5 + 3.5 * s
    return {"c1": safety * s, "c2": safety * base, "c3": safety * (3.0 * base + 2.0),
            "c4": safety * (4.5 + 3.5 * s)}


def quantum_constants(theta: float, lam: float, safety: float = SAFETY) -> dict:
    """c_1..c_4 for the quantum graph: E[eta^2] ~ 2 + Var(J)/lam^2 at criticality."""
    EJ = cut_gamma_mean(theta)
    E2 = cut_gamma_second_moment(theta)
    var = E2 - EJ * EJ
    base = 3.0 + E2 / (2.0 * lam * lam)
    return {"c1": safety * var / (lam * lam), "c2": safety * base,
            "c3": safety * (3.0 * base + 2.0), "c4": safety * (4.0 + E2 / (2.0 * lam * lam))}


def _check_A(n: int, A) -> None:
    Af = _frac(A)
    if not (Af > 1 and Af ** 3 < n * n):
        raise ParameterError(f"A={A} must satisfy 1 < A < n^(2/3) = {n ** (2 / 3):.4g}")


def lower_tail_spec(model, n: int | None = None, A: float = 2.0, *, d: int = 3,
                    beta: float = 1.0, m: int | None = None, lam: float = 1.0,
                    C_tilde: float = 24.0, safety: float = SAFETY, **overrides) -> BoundSpec:
    """Constants for the lower-tail bound of ``model`` at (n, A).

    ``model`` is a kind string or a parameter record (whose n, d, beta, m, lam
    are then used).  Any BoundSpec field can be overridden by keyword.
    """
    kind = model if isinstance(model, str) else model.kind
    if not isinstance(model, str):
        n = model.n
        d = getattr(model, "d", d)
        beta = getattr(model, "beta", beta) or beta
        m = getattr(model, "m", m)
        lam = getattr(model, "lam", lam)
    if n is None:
        raise ParameterError("n is required")
    n = int(n)
    _check_A(n, A)
    T = ceil_n23_over(n, A)
    Tp = ceil_n23_over(n, 1)
    root = n ** (1.0 / 3.0) / float(A) ** 0.25
    extra: dict = {}
    if kind == "er":
        vals = dict(c0=2.0, sigma2=2.0, eps1=4.0 * Tp / n, eps2=5.0 * Tp / n, c1=2.0,
                    eps3=8.0 * Tp / n, h=root / 24.0, z=1.0, N1=T, x=None)
    elif kind == "regular":
        if d < 3:
            raise ParameterError("d must be at least 3")
        c = 4.0 * (d - 1) ** 2
        vals = dict(c0=c, sigma2=float(d - 1), eps1=12.0 * d * Tp / n, eps2=24.0 * d * Tp / n,
                    c1=c, eps3=24.0 * d * Tp / n, h=root / (24.0 * d), z=float(d),
                    N1=(d - 1) * T, x=None)
        extra["d"] = d
    elif kind == "intersection":
        if m is None:
            m = math.floor(_frac(beta) * n)
        p = 1.0 / math.sqrt(n * m)
        k = intersection_constants(n, m, safety)
        vals = dict(c0=2.0 + k["c1"], sigma2=2.0, eps1=k["c2"] * Tp / n,
                    eps2=k["c3"] * Tp / n, c1=2.0 + k["c1"], eps3=k["c4"] * Tp / n,
                    h=root / C_tilde, z=1.0, N1=T, x=3.0 * m * p * Tp)
        extra.update(m=m, p=p, beta=beta, **{f"k_{key}": v for key, v in k.items()})
    elif kind == "quantum":
        if beta is None:
            beta = critical_beta(lam)
        theta = lam * beta
        k = quantum_constants(theta, lam, safety)
        vals = dict(c0=2.0 + k["c1"], sigma2=2.0, eps1=k["c2"] * Tp / n,
                    eps2=k["c3"] * Tp / n, c1=2.0 + k["c1"], eps3=k["c4"] * Tp / n,
                    h=root / C_tilde, z=1.0, N1=T, x=None)
        extra.update(theta=theta, lam=lam, beta=beta,
                     **{f"k_{key}": v for key, v in k.items()})
    else:
        raise ParameterError(f"unknown model {kind!r}")
    spec = BoundSpec(model=kind, n=n, A=float(A), T=T, T_prime=Tp, N2=Tp, extra=extra, **vals)
    return spec.with_overrides(**overrides) if overrides else spec


# ------------------------------------------------------------ condition checks

class Violation(NamedTuple):
    t: int
    R: int
    quantity: str
    value: float
    bound: float


@dataclass
class ConditionReport:
    model: str
    grid: str
    violations: list
    checked: int = 0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _regular_moment_bounds(n: int, d: int, p: float, t: int, R: int):
    """Worst-case moment bounds from the dominated increments eta', eta''.

    Returns (mean_lower, mean_upper, m2_lower, m2_upper).  Uses at most
    2t - 1 partially seen vertices, each with at most d - 1 unseen stubs,
    among the dn - 2(t-1) - 1 stubs available to h at step t.
    """
    Nu = d * n - 2 * (t - 1) - 1
    if Nu <= 0:
        return None
    partial = min(1.0, (d - 1) * (2 * t - 1) / Nu)
    if R >= 1:
        pa = (R - 1) / Nu
        mean_lo = (d - 1) * p * (1.0 - partial) - pa * ((d - 1) * p + 1.0)
        m2_lo = (d - 1) ** 2 * p * max(0.0, 1.0 - partial - pa) + pa
        mean_hi = (d - 1) * p
        m2_hi = (d - 1) ** 2 * p + pa
    else:
        bad = min(1.0, ((d - 1) * (2 * t - 1) + d - 1) / Nu)
        mean_lo = (d - 1) * p * (1.0 - bad)
        m2_lo = (d - 1) ** 2 * p * (1.0 - bad)
        mean_hi = 2.0 * (d - 1)
        m2_hi = (d - 1) ** 2 * (1.0 + 3.0 * p)
    return mean_lo, mean_hi, m2_lo, m2_hi


def check_conditions(model, n: int | None = None, spec: BoundSpec | None = None, *,
                     d: int = 3, beta: float = 1.0, m: int | None = None, lam: float = 1.0,
                     p: float | None = None, A: float = 2.0, tol: float = 1e-12) -> ConditionReport:
    """Verify both hypotheses on the state grid.

    The first hypothesis is checked for t in [1, T'] and R in [0, ceil(h)];
    the second for t in [1, T' + N1] (the time tau_h + t can reach) and
    R in [0, ceil(h) - 1].  For the intersection graph the discovered-attribute
    count D ranges over [0, ceil(x) - 1]; both moments decrease in D, so upper
    bounds are checked at D = 0 and lower bounds at the largest D.
    """
    kind = model if isinstance(model, str) else model.kind
    if not isinstance(model, str):
        n = model.n
        d = getattr(model, "d", d)
        beta = getattr(model, "beta", beta) or beta
        m = getattr(model, "m", m)
        lam = getattr(model, "lam", lam)
        p = getattr(model, "p", p)
    if spec is None:
        spec = lower_tail_spec(kind, n, A, d=d, beta=beta, m=m, lam=lam)
    n = spec.n
    hmax = max(1, math.ceil(spec.h))
    t1 = spec.T_prime
    t2 = spec.T_prime + spec.N1
    viol: list = []
    checked = 0

    if kind == "er":
        pp = 1.0 / n if p is None else p

        def moments(t, R, lower):
            return er_conditional_moments(n, pp, t, R) + (None,)
    elif kind == "intersection":
        mm = spec.extra["m"]
        pp = spec.extra["p"] if p is None else p
        Dmax = max(0, math.ceil(spec.x) - 1)

        def moments(t, R, lower):
            D = min(Dmax, mm) if lower else 0
            return intersection_conditional_moments(n, mm, pp, t, R, D) + (None,)
    elif kind == "quantum":
        theta = spec.extra["theta"]
        lq = spec.extra["lam"]

        def moments(t, R, lower):
            return quantum_conditional_moments(n, theta, lq, t, R) + (None,)
    elif kind == "regular":
        dd = spec.extra.get("d", d)
        pp = 1.0 / (dd - 1) if p is None else p

        def moments(t, R, lower):
            b = _regular_moment_bounds(n, dd, pp, t, R)
            if b is None:
                return None
            mean_lo, mean_hi, m2_lo, m2_hi = b
            return (mean_lo, m2_lo, (mean_hi, m2_hi)) if lower else (mean_hi, m2_hi, None)
    else:
        raise ParameterError(f"unknown model {kind!r}")

    def feasible(t, R):
        if kind == "regular":
            return R <= spec.z + 2 * (spec.z - 1) * t and not (t == 1 and R == 0)
        return n - (t - 1) - R >= 0 and not (t == 1 and R == 0)

    def add(t, R, name, value, bound, upper):
        if (value > bound + tol) if upper else (value < bound - tol):
            viol.append(Violation(t, R, name, float(value), float(bound)))

    for t in range(1, t2 + 1):
        for R in range(0, hmax + 1):
            if not feasible(t, R):
                continue
            lo = moments(t, R, True)
            hi = moments(t, R, False)
            if lo is None or hi is None:
                continue
            checked += 1
            mean_lo, m2_lo = lo[0], lo[1]
            mean_hi, m2_hi = hi[0], hi[1]
            if t <= t1:
                add(t, R, "H1.second_moment_upper", m2_hi, spec.c0, True)
                if R >= 1:
                    add(t, R, "H1.mean_upper", mean_hi, 1.0, True)
                add(t, R, "H1.mean_lower", mean_lo, 1.0 - spec.eps1, False)
                add(t, R, "H1.second_moment_lower", m2_lo, spec.sigma2 - spec.eps2, False)
            add(t, R, "H2.second_moment_upper", m2_hi, spec.c1, True)
            if R < spec.h:
                add(t, R, "H2.mean_lower", mean_lo, 1.0 - spec.eps3, False)
    grid = f"t in [1,{t2}] (first hypothesis to {t1}), R in [0,{hmax}]"
    return ConditionReport(model=kind, grid=grid, violations=viol, checked=checked,
                           notes=spec.issues())


# ------------------------------------------------------------ upper tail

@dataclass
class UpperTailConstant:
    model: str
    computed: float
    printed: float | None
    c0: float
    point_mass: float
    variance: float
    law: walks.IncrementLaw

    def bound(self, A: float) -> float:
        return self.computed / float(A) ** 1.5


def dominating_law(params) -> tuple[walks.IncrementLaw, float]:
    """Increment law of the dominating walk and the multiplier c0 (start r = 1)."""
    kind = params.kind
    if kind == "er":
        return walks.binomial_law(params.n, 1.0 / params.n if params.p is None else params.p), 1.0
    if kind == "regular":
        d, p = params.d, params.p
        if d < 3:
            raise ParameterError("d must be at least 3")
        c0 = 1.0 / ((d - 2) * p * (1.0 - p) ** (d - 3))
        return walks.binomial_law(d - 1, p), c0
    if kind == "intersection":
        return walks.mixed_binomial_law(params.n, params.m, params.p), 1.0
    raise ParameterError(f"no single dominating law for model {kind!r}")


def upper_tail_constant(model, params=None) -> UpperTailConstant:
    """c_* = c0 P(X = 2)^{-1} (1 + 2 Var X) and, where printed, the quoted constant."""
    if params is None:
        params = model
    law, c0 = dominating_law(params)
    pm = float(law.prob(2))
    var = float(law.variance)
    kind = params.kind
    if kind == "er":
        printed = 10.0 * math.e
    elif kind == "regular":
        d = params.d
        printed = 10.0 * (d - 1) ** 2 / (d - 2) ** 2 * (1.0 - 1.0 / (d - 1)) ** (-2 * (d - 3))
    else:
        printed = None
    return UpperTailConstant(kind, c0 / pm * (1.0 + 2.0 * var), printed, c0, pm, var, law)


def intersection_increment_moments(n: int, m: int, p: float) -> tuple[float, float]:
    """Mean and variance of X ~ Bin(n, N p), N ~ Bin(m, p), by conditioning on N."""
    EN = m * p
    EN2 = m * p * (1 - p) + EN * EN
    mean = n * p * EN
    var = n * p * EN - n * p * p * EN2 + n * n * p * p * (EN2 - EN * EN)
    return mean, var


class QuantumUpperTail(NamedTuple):
    main: float
    error: float
    total: float
    walk_prob: float
    critical: bool


def quantum_upper_decomposition(n: int, theta: float, lam: float, T: int, method: str = "auto",
                                reps: int = 100_000, seed: int = 0,
                                crit_tol: float = 1e-6) -> QuantumUpperTail:
    """Bound on P(|C_max| > 2T) for the quantum graph.

    error = 2n E[k_v^2] / T^2 with k_v = max(Poisson(theta), 1);
    main = n E[k_v] / T * P(1 + S_t > 0 for t <= T) for the walk with
    Poisson(J/lam) increments.  ``method`` is "dp", "mc" or "auto" (DP up to
    T = 20000).
    """
    if T < 1:
        raise ParameterError("T must be positive")
    Ek = theta + math.exp(-theta)
    Ek2 = theta + theta * theta + math.exp(-theta)
    critical = abs(F_eval(theta / lam, lam) - 1.0) <= crit_tol
    law = walks.mixed_poisson_cut_gamma_law(theta, lam)
    if method == "auto":
        method = "dp" if T <= 20000 else "mc"
    if method == "dp":
        prob = float(walks.positivity_prob_dp(law, 1, int(T)))
    elif method == "mc":
        est = walks.simulate_survival(law, 1, int(T), int(reps), seed)
        prob = est.ci_hi
    else:
        raise ParameterError("method must be 'dp', 'mc' or 'auto'")
    main = n * Ek / T * prob
    error = 2.0 * n * Ek2 / (T * T)
    return QuantumUpperTail(main, error, main + error, prob, critical)
