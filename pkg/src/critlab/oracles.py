"""Exact |C_max| distributions of tiny instances by exhaustive enumeration.

Probabilities are rationals when p is given as a Fraction (or int); a float p
is converted exactly to a rational for the enumeration and the results are
returned as floats.
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ParameterError


@dataclass
class ExactPmf:
    """|C_max| law as {size: probability}."""

    support: dict
    descriptor: str = ""

    def __post_init__(self):
        self.support = {int(k): v for k, v in sorted(self.support.items()) if v != 0}
        total = sum(self.support.values())
        exact = all(isinstance(v, Fraction) for v in self.support.values())
        if exact and total != 1:
            raise ParameterError(f"rational pmf sums to {total}")
        if not exact and abs(float(total) - 1.0) > 1e-12:
            raise ParameterError(f"pmf sums to {float(total)}")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.support.values())

    def prob(self, size: int):
        return self.support.get(int(size), 0)

    def mean(self) -> float:
        return float(sum(k * v for k, v in self.support.items()))

    def as_floats(self) -> dict:
        return {k: float(v) for k, v in self.support.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["size", "prob"])
            for k, v in self.support.items():
                w.writerow([k, str(v) if isinstance(v, Fraction) else repr(float(v))])

    @classmethod
    def from_csv(cls, path, descriptor: str = "") -> "ExactPmf":
        rows = list(csv.reader(Path(path).read_text().splitlines()))
        if not rows or rows[0] != ["size", "prob"]:
            raise ParameterError("pmf csv must start with the header 'size,prob'")
        sup = {}
        for size, prob in rows[1:]:
            sup[int(size)] = Fraction(prob) if "/" in prob or prob.isdigit() else float(prob)
        return cls(sup, descriptor)


def _as_rational(p) -> tuple[Fraction, bool]:
    if isinstance(p, Fraction):
        q, exact = p, True
    elif isinstance(p, (int, np.integer)):
        q, exact = Fraction(int(p)), True
    elif isinstance(p, str):
        q, exact = Fraction(p), True
    else:
        q, exact = Fraction(float(p)), False
    if not 0 <= q <= 1:
        raise ParameterError(f"p={p} is not a probability")
    return q, exact


def _pmf_from_counts(counts: dict, E: int, p: Fraction, exact: bool, desc: str) -> ExactPmf:
    """counts[(cmax, k)] = number of configurations with k retained edges."""
    pw = [p ** k for k in range(E + 1)]
    qw = [(1 - p) ** k for k in range(E + 1)]
    sup: dict = {}
    for (c, k), num in counts.items():
        sup[c] = sup.get(c, Fraction(0)) + num * pw[k] * qw[E - k]
    if not exact:
        sup = {k: float(v) for k, v in sup.items()}
    return ExactPmf(sup, desc)


def _largest_component(n: int, adj: list) -> int:
    # adj[v] is a bitmask of neighbours
    seen = 0
    best = 0
    for s in range(n):
        if seen >> s & 1:
            continue
        comp = 1 << s
        frontier = 1 << s
        while frontier:
            v = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            new = adj[v] & ~comp
            comp |= new
            frontier |= new
        seen |= comp
        best = max(best, bin(comp).count("1"))
    return best


def er_exact(n: int, p) -> ExactPmf:
    """Enumerate all 2^{C(n,2)} edge subsets (n <= 6)."""
    if not 1 <= n <= 6:
        raise ParameterError("er_exact supports 1 <= n <= 6")
    q, exact = _as_rational(p)
    pairs = list(combinations(range(n), 2))
    E = len(pairs)
    counts: Counter = Counter()
    for mask in range(1 << E):
        adj = [0] * n
        for i, (u, v) in enumerate(pairs):
            if mask >> i & 1:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
        counts[(_largest_component(n, adj), bin(mask).count("1"))] += 1
    return _pmf_from_counts(counts, E, q, exact, f"er(n={n},p={p})")


def perfect_matchings(items: list):
    """All perfect matchings of ``items`` as lists of pairs."""
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        b = items[i]
        rest = items[1:i] + items[i + 1:]
        for m in perfect_matchings(rest):
            yield [(a, b)] + m


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def config_exact(n: int, d: int, p, simple: bool = False) -> ExactPmf:
    """Percolated configuration multigraph (dn <= 10); ``simple`` conditions on simplicity.

    Every one of the (dn - 1)!! stub matchings is equally likely.
    """
    S = n * d
    if S % 2:
        raise ParameterError("dn must be even")
    if S > 10:
        raise ParameterError("config_exact supports dn <= 10")
    q, exact = _as_rational(p)
    E = S // 2
    counts: Counter = Counter()
    matchings = 0
    kept = 0
    for mt in perfect_matchings(list(range(S))):
        matchings += 1
        edges = [(a // d, b // d) for a, b in mt]
        if simple:
            if any(u == v for u, v in edges):
                continue
            if len({(min(u, v), max(u, v)) for u, v in edges}) < len(edges):
                continue
        kept += 1
        for mask in range(1 << E):
            adj = [0] * n
            for i, (u, v) in enumerate(edges):
                if mask >> i & 1 and u != v:
                    adj[u] |= 1 << v
                    adj[v] |= 1 << u
            counts[(_largest_component(n, adj), bin(mask).count("1"))] += 1
    if matchings != double_factorial(S - 1):
        raise AssertionError("matching enumeration is incomplete")
    if kept == 0:
        raise ParameterError(f"no simple {d}-regular multigraph on {n} vertices")
    scaled = {key: Fraction(v, kept) for key, v in counts.items()}
    tag = "simple " if simple else ""
    return _pmf_from_counts(scaled, E, q, exact, f"{tag}config(n={n},d={d},p={p})")


@njit(cache=True)
def _intersection_counts(n, m):
    nm = n * m
    counts = np.zeros((n + 1, nm + 1), dtype=np.int64)
    attrs = np.zeros(n, dtype=np.int64)
    parent = np.zeros(n, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    full = (1 << m) - 1
    for mask in range(1 << nm):
        k = 0
        for v in range(n):
            attrs[v] = (mask >> (v * m)) & full
            parent[v] = v
            size[v] = 1
        x = mask
        while x:
            x &= x - 1
            k += 1
        for u in range(n):
            for v in range(u + 1, n):
                if attrs[u] & attrs[v]:
                    ru = u
                    while parent[ru] != ru:
                        ru = parent[ru]
                    rv = v
                    while parent[rv] != rv:
                        rv = parent[rv]
                    if ru != rv:
                        parent[rv] = ru
                        size[ru] += size[rv]
        best = 0
        for v in range(n):
            if parent[v] == v and size[v] > best:
                best = size[v]
        counts[best, k] += 1
    return counts


def intersection_exact(n: int, m: int, p) -> ExactPmf:
    """Enumerate all 2^{nm} bipartite subsets (nm <= 20); sizes count V-side vertices."""
    if n < 1 or m < 1 or n * m > 20:
        raise ParameterError("intersection_exact supports n, m >= 1 with nm <= 20")
    q, exact = _as_rational(p)
    table = _intersection_counts(np.int64(n), np.int64(m))
    counts = {(int(c), int(k)): int(table[c, k])
              for c, k in zip(*np.nonzero(table))}
    return _pmf_from_counts(counts, n * m, q, exact, f"intersection(n={n},m={m},p={p})")


def empirical_pmf(samples) -> dict:
    vals, cnt = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    total = cnt.sum()
    return {int(v): c / total for v, c in zip(vals, cnt)}


def _as_mapping(x) -> dict:
    if isinstance(x, ExactPmf):
        return x.as_floats()
    return {int(k): float(v) for k, v in dict(x).items()}


def tv_distance(pmf_a, pmf_b) -> float:
    """Half the L1 distance between two pmfs on the integers."""
    a = _as_mapping(pmf_a)
    b = _as_mapping(pmf_b)
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
