"""Binomial-proportion intervals and the tail-estimate record."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import ParameterError

Z99 = 2.576
Z99_ONE_SIDED = 2.326


def wilson_interval(hits: int, reps: int, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval.

    When no hits (or all hits) are observed, the open side is replaced by the
    one-sided bound at the same confidence level.
    """
    if reps <= 0:
        raise ParameterError("reps must be positive")
    if not 0 <= hits <= reps:
        raise ParameterError("hits must lie in [0, reps]")
    if hits == 0:
        z1 = Z99_ONE_SIDED if z == Z99 else z
        return 0.0, z1 * z1 / (reps + z1 * z1)
    if hits == reps:
        z1 = Z99_ONE_SIDED if z == Z99 else z
        return reps / (reps + z1 * z1), 1.0
    p = hits / reps
    z2 = z * z
    denom = 1.0 + z2 / reps
    centre = (p + z2 / (2 * reps)) / denom
    half = z * math.sqrt(p * (1 - p) / reps + z2 / (4 * reps * reps)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class TailEstimate:
    model: str
    n: int
    A: float | None
    direction: str
    threshold: int
    hits: int
    reps: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    theorem_bound: float | None = None
    vacuous: bool = False
    note: str = field(default="", compare=False)

    def as_dict(self) -> dict:
        return asdict(self)


def proportion(hits: int, reps: int, **fields) -> TailEstimate:
    lo, hi = wilson_interval(hits, reps)
    bound = fields.pop("theorem_bound", None)
    vac = bound is not None and bound >= 1.0
    return TailEstimate(hits=int(hits), reps=int(reps), p_hat=hits / reps, ci_lo=lo,
                        ci_hi=hi, theorem_bound=bound, vacuous=vac, **fields)


def kahan_sum(values) -> float:
    total = 0.0
    comp = 0.0
    for v in values:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
