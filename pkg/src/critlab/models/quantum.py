"""Quantum random graph: n circles of length theta with holes and links.

Each circle carries Poisson(theta) holes (rate 1) placed uniformly; the holes
cut it into intervals, the arc through the origin wrapping round.  Each pair
of circles receives links at the times of a Poisson process of intensity
1/(lam*n) on [0, theta), and a link at time s joins the intervals containing
s on both circles.  Components are unions of intervals.

The reduced exploration replaces an interval by its length J (a cut gamma
variable) and reveals Bin(M, 1 - exp(-J/(lam*n))) new circles.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import InvariantViolation
from ..explore import ExcursionState, advance, build_trace, check_vertex_trace, etas_from_R
from ..randsrc import (as_stream, binomial_draw, cut_gamma_draw, geometric_draw, init_state,
                       poisson_draw, positive_poisson_draw, uniform)
from .graph import uf_find, uf_new, uf_union
from .params import QuantumParams


@njit(cache=True)
def _reduced_draw(st, M, theta, rate):
    J = cut_gamma_draw(st, theta)
    return J, binomial_draw(st, M, -math.expm1(-J * rate))


@njit(cache=True)
def _reduced_step(st, M, theta, rate):
    return _reduced_draw(st, M, theta, rate)[1]


def quantum_reduced_step(state: ExcursionState, params: QuantumParams, rng) -> tuple[float, int]:
    """Draw (J, eta*) and advance ``state``; J is the explored interval length."""
    M = state.U - 1 if state.R == 0 else state.U
    rate = 1.0 / (params.lam * params.n)
    J, eta = _reduced_draw(as_stream(rng).state, np.int64(M), params.theta, rate)
    advance(state, int(eta), params.n)
    return float(J), int(eta)


class QuantumStepper:
    vertex_consuming = True
    R0 = 1

    def __init__(self, params: QuantumParams):
        self.params = params
        self.n = params.n
        self.rate = 1.0 / (params.lam * params.n)

    def draw(self, state, rng):
        if state.t >= self.n:
            return None
        M = state.U - 1 if state.R == 0 else state.U
        return _reduced_step(as_stream(rng).state, np.int64(M), self.params.theta, self.rate)


@njit(cache=True, nogil=True)
def _reduced_run(st, n, theta, rate, rec):
    L = rec.shape[0]
    R = 1
    if L > 0:
        rec[0] = 1
    start = 0
    cmax = 0
    ncomp = 0
    for t in range(1, n + 1):
        U = n - (t - 1) - R
        M = U - 1 if R == 0 else U
        eta = _reduced_step(st, M, theta, rate)
        if R >= 1:
            R = R + eta - 1
        else:
            R = eta
        if t < L:
            rec[t] = R
        if R == 0:
            size = t - start
            start = t
            ncomp += 1
            if size > cmax:
                cmax = size
    return cmax, ncomp, R == 0 and start == n


def quantum_reduced_explore(params: QuantumParams, rng, record: int | None = None):
    L = 0 if record is None else min(int(record), params.n) + 1
    rec = np.empty(L, dtype=np.int64)
    cmax, _, ok = _reduced_run(as_stream(rng).state, np.int64(params.n), params.theta,
                               1.0 / (params.lam * params.n), rec)
    if not ok:
        raise InvariantViolation("reduced quantum exploration did not close")
    if record is None:
        return int(cmax)
    return int(cmax), rec


def quantum_reduced_trace(params: QuantumParams, rng):
    _, Rs = quantum_reduced_explore(params, rng, record=params.n)
    t = np.arange(params.n + 1)
    tr = build_trace(etas_from_R(Rs), Rs, n=params.n, Us=params.n - t - Rs)
    check_vertex_trace(tr)
    return tr


@njit(cache=True, inline="always")
def _interval(pos, hstart, count, off, v, s):
    c = count[v]
    if c == 0:
        return off[v]
    i = np.searchsorted(pos[hstart[v]:hstart[v] + c], s, side="right")
    if i == 0 or i == c:
        return off[v] + c - 1
    return off[v] + i - 1


@njit(cache=True, nogil=True)
def _direct(st, n, theta, lam, holes):
    count = np.zeros(n, dtype=np.int64)
    if holes:
        for v in range(n):
            count[v] = poisson_draw(st, theta)
    hstart = np.zeros(n + 1, dtype=np.int64)
    off = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        hstart[v + 1] = hstart[v] + count[v]
        off[v + 1] = off[v] + max(count[v], 1)
    pos = np.empty(hstart[n], dtype=np.float64)
    for v in range(n):
        for i in range(hstart[v], hstart[v + 1]):
            pos[i] = uniform(st) * theta
        pos[hstart[v]:hstart[v + 1]] = np.sort(pos[hstart[v]:hstart[v + 1]])
    nint = off[n]
    parent, size = uf_new(nint)
    mu = theta / (lam * n)
    q = -math.expm1(-mu)
    total = n * (n - 1) // 2
    u = 0
    row_start = 0
    row_len = n - 1
    idx = geometric_draw(st, q)
    while idx < total:
        while idx >= row_start + row_len:
            row_start += row_len
            u += 1
            row_len -= 1
        w = u + 1 + (idx - row_start)
        links = positive_poisson_draw(st, mu)
        for _ in range(links):
            s = uniform(st) * theta
            a = _interval(pos, hstart, count, off, u, s)
            b = _interval(pos, hstart, count, off, w, s)
            uf_union(parent, size, a, b)
        idx += 1 + geometric_draw(st, q)
    ncomp = 0
    for r in range(nint):
        if parent[r] == r:
            ncomp += 1
    sizes = np.empty(ncomp, dtype=np.int64)
    k = 0
    for r in range(nint):
        if parent[r] == r:
            sizes[k] = size[r]
            k += 1
    return sizes, nint


@njit(cache=True, nogil=True)
def quantum_batch(root, first, n, theta, lam, holes, cmax_out, ncomp_out):
    st = np.empty(9, dtype=np.uint64)
    for k in range(cmax_out.shape[0]):
        init_state(st, root, first + k)
        sizes, nint = _direct(st, n, theta, lam, holes)
        cmax_out[k] = sizes.max() if sizes.sum() == nint else -1
        ncomp_out[k] = sizes.shape[0]


def quantum_direct(params: QuantumParams, rng, holes_enabled: bool = True) -> np.ndarray:
    """Component sizes, counted in intervals, of an explicit draw (largest first).

    With ``holes_enabled=False`` every circle is a single interval and the
    model reduces to G(n, 1 - exp(-theta/(lam*n))).
    """
    sizes, nint = _direct(as_stream(rng).state, np.int64(params.n), params.theta,
                          params.lam, bool(holes_enabled))
    if int(sizes.sum()) != int(nint):
        raise InvariantViolation("interval sizes do not sum to the interval count")
    return np.sort(sizes)[::-1]
