"""Erdos-Renyi G(n, p): the reduced exploration and an explicit sampler."""
from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import InvariantViolation
from ..explore import ExcursionState, advance, build_trace, check_vertex_trace, etas_from_R
from ..randsrc import as_stream, binomial_draw, geometric_draw, init_state
from .graph import components_unionfind
from .params import ErParams


def er_step(state: ExcursionState, params: ErParams, rng) -> int:
    """Draw eta ~ Bin(U - [R = 0], p) and advance ``state`` by one step."""
    M = state.U - 1 if state.R == 0 else state.U
    eta = int(binomial_draw(as_stream(rng).state, np.int64(M), params.p))
    advance(state, eta, params.n)
    return eta


class ErStepper:
    """Conditional law eta ~ Bin(U - [R = 0], p) for the generic engine."""

    vertex_consuming = True
    R0 = 1

    def __init__(self, params: ErParams):
        self.params = params
        self.n = params.n

    def draw(self, state, rng):
        if state.t >= self.n:
            return None
        M = state.U - 1 if state.R == 0 else state.U
        return binomial_draw(as_stream(rng).state, np.int64(M), self.params.p)


@njit(cache=True, nogil=True)
def _er_run(st, n, p, rec):
    """Run the exploration to completion; R_0..R_{L-1} go to ``rec``.

    Returns (largest component, number of components, ok flag).
    """
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
        eta = binomial_draw(st, M, p)
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
    ok = R == 0 and start == n
    return cmax, ncomp, ok


@njit(cache=True, nogil=True)
def er_batch(root, first, n, p, cmax_out, ncomp_out):
    st = np.empty(9, dtype=np.uint64)
    rec = np.empty(0, dtype=np.int64)
    for k in range(cmax_out.shape[0]):
        init_state(st, root, first + k)
        c, m, ok = _er_run(st, n, p, rec)
        cmax_out[k] = c if ok else -1
        ncomp_out[k] = m


def er_explore(params: ErParams, rng, record: int | None = None):
    """Largest component from one full exploration.

    With ``record`` set, also return the trace of R_0..R_record.
    """
    st = as_stream(rng).state
    L = 0 if record is None else min(int(record), params.n) + 1
    rec = np.empty(L, dtype=np.int64)
    cmax, ncomp, ok = _er_run(st, np.int64(params.n), params.p, rec)
    if not ok:
        raise InvariantViolation("ER exploration did not exhaust the vertex set")
    if record is None:
        return int(cmax)
    return int(cmax), rec


def er_trace(params: ErParams, rng):
    """Full trace of one exploration, with U_t = n - t - R_t."""
    cmax, Rs = er_explore(params, rng, record=params.n)
    t = np.arange(params.n + 1)
    tr = build_trace(etas_from_R(Rs), Rs, n=params.n, Us=params.n - t - Rs)
    check_vertex_trace(tr)
    return tr


@njit(cache=True)
def _skip_pairs(st, n, q, cap):
    """Endpoints of the selected pairs among the C(n, 2) pairs, each kept with prob q."""
    out = np.empty((cap, 2), dtype=np.int64)
    k = 0
    total = n * (n - 1) // 2
    i = 0
    row_start = 0
    row_len = n - 1
    idx = geometric_draw(st, q)
    while idx < total:
        while idx >= row_start + row_len:
            row_start += row_len
            i += 1
            row_len -= 1
        j = i + 1 + (idx - row_start)
        if k == out.shape[0]:
            bigger = np.empty((2 * out.shape[0] + 1, 2), dtype=np.int64)
            bigger[:k] = out[:k]
            out = bigger
        out[k, 0] = i
        out[k, 1] = j
        k += 1
        idx += 1 + geometric_draw(st, q)
    return out[:k]


def skip_pairs(n: int, q: float, rng) -> np.ndarray:
    if q <= 0.0 or n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    cap = int(n * (n - 1) / 2 * q * 1.2) + 16
    return _skip_pairs(as_stream(rng).state, np.int64(n), float(q), np.int64(cap))


def er_materialize(params: ErParams, rng) -> np.ndarray:
    """Edge list of an explicit G(n, p) draw."""
    return skip_pairs(params.n, params.p, rng)


def er_component_sizes(params: ErParams, rng) -> np.ndarray:
    return components_unionfind(params.n, er_materialize(params, rng))
