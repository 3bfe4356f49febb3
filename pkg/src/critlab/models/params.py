"""Parameter records for the four critical models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar

from ..errors import ParameterError


def _probability(p, name="p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ParameterError(f"{name}={p} is not a probability")
    return p


def _positive_int(x, name) -> int:
    if isinstance(x, float) and not x.is_integer():
        raise ParameterError(f"{name} must be an integer, got {x}")
    x = int(x)
    if x < 1:
        raise ParameterError(f"{name} must be at least 1, got {x}")
    return x


@dataclass(frozen=True)
class ErParams:
    """G(n, p); p defaults to the critical 1/n."""

    n: int
    p: float | None = None
    kind: ClassVar[str] = "er"

    def __post_init__(self):
        n = _positive_int(self.n, "n")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", 1.0 / n if self.p is None else _probability(self.p))


REG_BASES = ("config", "simple", "circulant")


@dataclass(frozen=True)
class RegParams:
    """Bond percolation on a d-regular base graph.

    ``base="config"`` is the configuration multigraph, ``"simple"`` conditions
    the pairing on having no loops or multi-edges, ``"circulant"`` is a fixed
    circulant graph.  p defaults to 1/(d-1).
    """

    n: int
    d: int
    p: float | None = None
    base: str = "config"
    kind: ClassVar[str] = "regular"

    def __post_init__(self):
        n = _positive_int(self.n, "n")
        d = _positive_int(self.d, "d")
        if d < 3:
            raise ParameterError("d must be at least 3")
        if (n * d) % 2:
            raise ParameterError("n*d must be even")
        if self.base not in REG_BASES:
            raise ParameterError(f"base must be one of {REG_BASES}")
        if self.base != "config" and d >= n:
            raise ParameterError("a simple d-regular graph needs d < n")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", 1.0 / (d - 1) if self.p is None else _probability(self.p))


@dataclass(frozen=True)
class IntersectionParams:
    """Random intersection graph G(n, m, p).

    m defaults to floor(beta*n) (beta read as a decimal) and p to 1/sqrt(n*m).
    """

    n: int
    beta: float = 1.0
    m: int | None = None
    p: float | None = None
    kind: ClassVar[str] = "intersection"

    def __post_init__(self):
        n = _positive_int(self.n, "n")
        beta = float(self.beta)
        if not beta > 0:
            raise ParameterError("beta must be positive")
        if self.m is None:
            m = math.floor(Fraction(repr(beta)) * n)
        else:
            m = self.m
        m = _positive_int(m, "m")
        p = 1.0 / math.sqrt(n * m) if self.p is None else _probability(self.p)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class QuantumParams:
    """Quantum random graph on n circles of length theta = lam*beta.

    Holes are Poisson of rate 1 per circle, links between each pair arrive at
    rate 1/(lam*n).  beta defaults to the critical value for ``lam``.
    """

    n: int
    beta: float | None = None
    lam: float = 1.0
    kind: ClassVar[str] = "quantum"

    def __post_init__(self):
        n = _positive_int(self.n, "n")
        lam = float(self.lam)
        if not lam > 0:
            raise ParameterError("lam must be positive")
        if self.beta is None:
            from ..bounds import critical_beta
            beta = critical_beta(lam)
        else:
            beta = float(self.beta)
        if not beta > 0:
            raise ParameterError("beta must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "beta", beta)

    @property
    def theta(self) -> float:
        return self.lam * self.beta


MODEL_KINDS = {"er": ErParams, "regular": RegParams, "intersection": IntersectionParams,
               "quantum": QuantumParams}


def make_params(kind: str, **kw):
    """Build a parameter record from keyword values; unknown keys are rejected."""
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ParameterError(f"unknown model {kind!r}; choose from {sorted(MODEL_KINDS)}") from None
    allowed = set(cls.__dataclass_fields__) - {"kind"}
    extra = set(kw) - allowed
    if extra:
        raise ParameterError(f"unknown parameter(s) for {kind}: {sorted(extra)}")
    return cls(**{k: v for k, v in kw.items() if v is not None})
