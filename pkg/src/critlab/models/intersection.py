"""Random intersection graph G(n, m, p).

Vertices V = {1..n} and attributes W = {1..m}; each pair (v, w) is present
with probability p and two vertices are adjacent when they share an
attribute.  The exploration reveals, at each step, the N ~ Bin(m - D, p)
attributes of the current vertex not seen before (D counts discovered
attributes); every unseen vertex owning one of them joins, so given N the
number of new vertices is Bin(M, 1 - (1 - p)^N).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import InvariantViolation, ParameterError
from ..explore import ExcursionState, advance, build_trace, check_vertex_trace, etas_from_R
from ..randsrc import as_stream, binomial_draw, geometric_draw, init_state
from .graph import uf_find, uf_new, uf_union
from .params import IntersectionParams


@njit(cache=True)
def _step(st, M, attrs_left, p):
    N = binomial_draw(st, attrs_left, p)
    q = -math.expm1(N * math.log1p(-p)) if p < 1.0 else (1.0 if N > 0 else 0.0)
    return binomial_draw(st, M, q), N


def intersection_step(state: ExcursionState, params: IntersectionParams, rng) -> tuple[int, int]:
    """One step; returns (N, eta) with N the number of newly found attributes.

    ``state.aux`` holds D, the number of attributes discovered so far.
    """
    D = int(state.aux or 0)
    if not 0 <= D <= params.m:
        raise ParameterError(f"discovered-attribute count {D} outside [0, m]")
    M = state.U - 1 if state.R == 0 else state.U
    eta, N = _step(as_stream(rng).state, np.int64(M), np.int64(params.m - D), params.p)
    advance(state, int(eta), params.n)
    state.aux = D + int(N)
    return int(N), int(eta)


class IntersectionStepper:
    vertex_consuming = True
    R0 = 1

    def __init__(self, params: IntersectionParams):
        self.params = params
        self.n = params.n
        self.D = 0

    def draw(self, state, rng):
        if state.t >= self.n:
            return None
        M = state.U - 1 if state.R == 0 else state.U
        eta, N = _step(as_stream(rng).state, np.int64(M), np.int64(self.params.m - self.D),
                       self.params.p)
        self.D += int(N)
        return eta


@njit(cache=True, nogil=True)
def _rig_run(st, n, m, p, rec, drec):
    L = rec.shape[0]
    R = 1
    D = 0
    if L > 0:
        rec[0] = 1
        drec[0] = 0
    start = 0
    cmax = 0
    ncomp = 0
    for t in range(1, n + 1):
        U = n - (t - 1) - R
        M = U - 1 if R == 0 else U
        eta, N = _step(st, M, m - D, p)
        D += N
        if R >= 1:
            R = R + eta - 1
        else:
            R = eta
        if t < L:
            rec[t] = R
            drec[t] = D
        if R == 0:
            size = t - start
            start = t
            ncomp += 1
            if size > cmax:
                cmax = size
    ok = R == 0 and start == n and D <= m
    return cmax, ncomp, ok


@njit(cache=True, nogil=True)
def intersection_batch(root, first, n, m, p, cmax_out, ncomp_out):
    st = np.empty(9, dtype=np.uint64)
    rec = np.empty(0, dtype=np.int64)
    for k in range(cmax_out.shape[0]):
        init_state(st, root, first + k)
        c, nc, ok = _rig_run(st, n, m, p, rec, rec)
        cmax_out[k] = c if ok else -1
        ncomp_out[k] = nc


def intersection_explore(params: IntersectionParams, rng, record: int | None = None):
    """Largest component; with ``record`` also R_0..R_record and D_0..D_record."""
    L = 0 if record is None else min(int(record), params.n) + 1
    rec = np.empty(L, dtype=np.int64)
    drec = np.empty(L, dtype=np.int64)
    cmax, _, ok = _rig_run(as_stream(rng).state, np.int64(params.n), np.int64(params.m),
                           params.p, rec, drec)
    if not ok:
        raise InvariantViolation("intersection exploration did not close")
    if record is None:
        return int(cmax)
    return int(cmax), rec, drec


def intersection_trace(params: IntersectionParams, rng):
    cmax, Rs, Ds = intersection_explore(params, rng, record=params.n)
    t = np.arange(params.n + 1)
    tr = build_trace(etas_from_R(Rs), Rs, n=params.n, Us=params.n - t - Rs)
    check_vertex_trace(tr)
    tr.info["D"] = Ds
    return tr


@njit(cache=True)
def _materialize(st, n, m, p):
    parent, size = uf_new(n + m)
    total = n * m
    idx = geometric_draw(st, p)
    while idx < total:
        v = idx // m
        w = idx - v * m
        uf_union(parent, size, v, n + w)
        idx += 1 + geometric_draw(st, p)
    counts = np.zeros(n + m, dtype=np.int64)
    for v in range(n):
        counts[uf_find(parent, v)] += 1
    k = 0
    for r in range(n + m):
        if counts[r] > 0:
            k += 1
    out = np.empty(k, dtype=np.int64)
    k = 0
    for r in range(n + m):
        if counts[r] > 0:
            out[k] = counts[r]
            k += 1
    return out


def intersection_materialize(params: IntersectionParams, rng) -> np.ndarray:
    """Vertex counts of the components of an explicit draw, largest first."""
    if params.p <= 0.0:
        return np.ones(params.n, dtype=np.int64)
    sizes = _materialize(as_stream(rng).state, np.int64(params.n), np.int64(params.m), params.p)
    return np.sort(sizes)[::-1]
