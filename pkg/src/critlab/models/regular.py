"""Percolation on random d-regular graphs.

The configuration-model exploration works on stubs.  At the start the seed
vertex has all d stubs active.  Each step pops an active stub e and pairs it
with a uniform unexplored stub h, then draws J ~ Ber(p) for the pair:

* h unseen, J = 1: the other unseen stubs of v(h) become active;
* h unseen, J = 0: h is consumed and nothing else happens;
* h active: h leaves the active set (the step contributes eta = -1).

When no stub is active, all unseen stubs of the lowest-labelled vertex that
still has some become active and one of them plays the role of e.  Vertices
whose stubs are all consumed without ever being reached through a retained
edge are isolated in the percolated graph.

Alongside the walk the kernel keeps the dominated increments
eta' (R >= 1) and eta'' (R = 0), the fresh-vertex and active-count envelopes,
and the excursion length against vertex count, and counts any breaches.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import InvariantViolation, ParameterError
from ..explore import build_trace, etas_from_R
from ..randsrc import as_stream, bernoulli_draw, init_state, randbelow
from .graph import _component_sizes
from .params import RegParams

# slots of the instrumentation counter array
ETA1_BREACH = 0       # eta' > eta at a step with R >= 1
ETA2_BREACH = 1       # eta'' > eta at a step with R = 0
FRESH_BREACH = 2      # fewer than n - 1 - 2t fully unseen vertices
ACTIVE_BREACH = 3     # R_t > d + 2(d-1)t
LENGTH_BREACH = 4     # excursion length > (d-1) * vertices
LENGTH1_BREACH = 5    # excursion length > (d-1) * vertices + 1
STEPS_POSITIVE = 6
STEPS_ZERO = 7
EXCURSIONS = 8
N_COUNTERS = 9

COUNTER_NAMES = ("eta1_breach", "eta2_breach", "fresh_breach", "active_breach",
                 "length_breach", "length_plus1_breach", "steps_positive", "steps_zero",
                 "excursions")

# kernel status codes
_OK = 0
_ACTIVE_MISMATCH = 1
_LENGTH_FAIL = 2
_VERTEX_FAIL = 3


@njit(cache=True, nogil=True)
def _config_run(st, n, d, p, rec, vcounts, counters):
    """Stub-level exploration of the percolated configuration model.

    R_t is written to ``rec`` while it has room, vertex counts of closed
    excursions to ``vcounts``.  Returns (cmax, ncomp, n_excursions, status).
    """
    S = n * d
    status = np.zeros(S, dtype=np.int8)       # 0 unseen, 1 active, 2 consumed
    pool = np.arange(S)                        # unseen or active stubs
    ppos = np.arange(S)
    psize = S
    act = np.empty(S, dtype=np.int64)
    apos = np.full(S, -1, dtype=np.int64)
    asize = 0
    unseen = np.full(n, d, dtype=np.int64)
    fresh = n
    scan = 0
    L = rec.shape[0]

    v0 = randbelow(st, n)
    for s in range(v0 * d, v0 * d + d):
        status[s] = 1
        apos[s] = asize
        act[asize] = s
        asize += 1
    unseen[v0] = 0
    fresh -= 1
    R = d
    if L > 0:
        rec[0] = R
    comp_vertices = 1
    start = 0
    cmax = 0
    nexc = 0
    covered = 0
    for t in range(1, S // 2 + 1):
        Rprev = R
        ve = -1
        seed_part = 0
        if R == 0:
            while scan < n and unseen[scan] == 0:
                scan += 1
            if scan == n:
                return cmax, nexc, nexc, _VERTEX_FAIL
            ve = scan
            k = unseen[ve]
            if k == d:
                fresh -= 1
            for s in range(ve * d, ve * d + d):
                if status[s] == 0:
                    status[s] = 1
                    apos[s] = asize
                    act[asize] = s
                    asize += 1
            unseen[ve] = 0
            seed_part = k - 1
            comp_vertices = 1
            start = t - 1
        # pop e
        asize -= 1
        e = act[asize]
        apos[e] = -1
        status[e] = 2
        j = ppos[e]
        psize -= 1
        last = pool[psize]
        pool[j] = last
        ppos[last] = j
        # pair with a uniform unexplored stub
        j = randbelow(st, psize)
        h = pool[j]
        psize -= 1
        last = pool[psize]
        pool[j] = last
        ppos[last] = j
        J = bernoulli_draw(st, p)
        vh = h // d
        was_active = status[h] == 1
        partial = (not was_active) and 0 < unseen[vh] < d
        status[h] = 2
        if was_active:
            i = apos[h]
            asize -= 1
            moved = act[asize]
            act[i] = moved
            apos[moved] = i
            apos[h] = -1
            main = -1
        else:
            if unseen[vh] == d:
                fresh -= 1
            unseen[vh] -= 1
            if J == 1:
                c = 0
                for s in range(vh * d, vh * d + d):
                    if status[s] == 0:
                        status[s] = 1
                        apos[s] = asize
                        act[asize] = s
                        asize += 1
                        c += 1
                unseen[vh] = 0
                comp_vertices += 1
                main = c
            else:
                main = 0
        if Rprev >= 1:
            eta = main
            R = Rprev + eta - 1
            counters[STEPS_POSITIVE] += 1
            eta1 = J * (d - 1) - (d - 1) * J * (1 if partial else 0) \
                - (1 if was_active else 0) * (J * (d - 1) + 1)
            if eta1 > eta:
                counters[ETA1_BREACH] += 1
        else:
            eta = seed_part + main
            R = eta
            counters[STEPS_ZERO] += 1
            bad = partial or vh == ve
            eta2 = J * (d - 1) * (0 if bad else 1)
            if eta2 > eta:
                counters[ETA2_BREACH] += 1
        if R != asize:
            return cmax, nexc, nexc, _ACTIVE_MISMATCH
        if fresh < n - 1 - 2 * t:
            counters[FRESH_BREACH] += 1
        if R > d + 2 * (d - 1) * t:
            counters[ACTIVE_BREACH] += 1
        if t < L:
            rec[t] = R
        if R == 0:
            length = t - start
            if length > (d - 1) * comp_vertices:
                counters[LENGTH_BREACH] += 1
            if length > (d - 1) * comp_vertices + 1:
                counters[LENGTH1_BREACH] += 1
                return cmax, nexc, nexc, _LENGTH_FAIL
            if nexc < vcounts.shape[0]:
                vcounts[nexc] = comp_vertices
            nexc += 1
            counters[EXCURSIONS] += 1
            covered += comp_vertices
            if comp_vertices > cmax:
                cmax = comp_vertices
    if R != 0 or psize != 0:
        return cmax, nexc, nexc, _VERTEX_FAIL
    leftover = n - covered
    if leftover < 0:
        return cmax, nexc, nexc, _VERTEX_FAIL
    if leftover > 0 and cmax < 1:
        cmax = 1
    return cmax, nexc + leftover, nexc, _OK


_STATUS_TEXT = {_ACTIVE_MISMATCH: "active stub count differs from R",
                _LENGTH_FAIL: "excursion longer than (d-1)*vertices + 1",
                _VERTEX_FAIL: "vertex bookkeeping does not close"}


@dataclass
class ConfigChecks:
    """Counters gathered along configuration-model explorations."""

    counts: dict

    def merge(self, other: "ConfigChecks") -> "ConfigChecks":
        return ConfigChecks({k: self.counts[k] + other.counts[k] for k in self.counts})

    def __getitem__(self, key):
        return self.counts[key]


def _checks(arr) -> ConfigChecks:
    return ConfigChecks({name: int(arr[i]) for i, name in enumerate(COUNTER_NAMES)})


def _require_config(params: RegParams):
    if params.base != "config":
        raise ParameterError("the stub-level exploration needs base='config'")


def config_percolation_explore(params: RegParams, rng, dump_path=None):
    """One full exploration; returns the trace with per-excursion vertex counts.

    ``trace.info["checks"]`` carries the instrumentation counters.
    """
    _require_config(params)
    n, d = params.n, params.d
    steps = n * d // 2
    rec = np.empty(steps + 1, dtype=np.int64)
    vc = np.empty(n, dtype=np.int64)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    cmax, ncomp, nexc, status = _config_run(as_stream(rng).state, np.int64(n), np.int64(d),
                                            params.p, rec, vc, counters)
    if status != _OK:
        dump = None
        if dump_path is not None:
            np.savetxt(dump_path, rec, fmt="%d")
            dump = str(dump_path)
        raise InvariantViolation(_STATUS_TEXT[status], dump=dump)
    covered = int(vc[:nexc].sum())
    tr = build_trace(etas_from_R(rec), rec, n=None, vertex_consuming=False,
                     vertex_counts=vc[:nexc].copy(),
                     extra_components=np.ones(n - covered, dtype=np.int64))
    tr.n = n
    tr.info["checks"] = _checks(counters)
    tr.info["cmax"] = int(cmax)
    tr.info["components"] = int(ncomp)
    return tr


def config_checks(params: RegParams, rng, reps: int) -> ConfigChecks:
    """Aggregate instrumentation counters over ``reps`` explorations of one stream."""
    _require_config(params)
    st = as_stream(rng).state
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    rec = np.empty(0, dtype=np.int64)
    vc = np.empty(0, dtype=np.int64)
    for _ in range(int(reps)):
        _, _, _, status = _config_run(st, np.int64(params.n), np.int64(params.d), params.p,
                                      rec, vc, counters)
        if status != _OK:
            raise InvariantViolation(_STATUS_TEXT[status])
    return _checks(counters)


@njit(cache=True, nogil=True)
def config_batch(root, first, n, d, p, cmax_out, ncomp_out):
    st = np.empty(9, dtype=np.uint64)
    rec = np.empty(0, dtype=np.int64)
    vc = np.empty(0, dtype=np.int64)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    for k in range(cmax_out.shape[0]):
        init_state(st, root, first + k)
        c, m, _, status = _config_run(st, n, d, p, rec, vc, counters)
        cmax_out[k] = c if status == 0 else -1
        ncomp_out[k] = m


# ------------------------------------------------------------ explicit graphs

@njit(cache=True, nogil=True)
def _pair_simple(st, n, d, edges):
    """Uniform pairing with early rejection; True when the result is simple."""
    S = n * d
    pool = np.arange(S)
    size = S
    nbr = np.full((n, d), -1, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    k = 0
    while size > 0:
        size -= 1
        a = pool[size]
        j = randbelow(st, size)
        b = pool[j]
        size -= 1
        pool[j] = pool[size]
        u = a // d
        v = b // d
        if u == v:
            return False
        for i in range(deg[u]):
            if nbr[u, i] == v:
                return False
        nbr[u, deg[u]] = v
        deg[u] += 1
        nbr[v, deg[v]] = u
        deg[v] += 1
        edges[k, 0] = u
        edges[k, 1] = v
        k += 1
    return True


@dataclass
class SimpleSample:
    edges: np.ndarray | None
    attempts: int

    @property
    def success(self) -> bool:
        return self.edges is not None


def config_sample_simple(n: int, d: int, rng, max_tries: int = 1000) -> SimpleSample:
    """Uniform simple d-regular graph by rejection from the pairing model."""
    RegParams(n, d, base="simple")
    st = as_stream(rng).state
    edges = np.empty((n * d // 2, 2), dtype=np.int64)
    for attempt in range(1, int(max_tries) + 1):
        if _pair_simple(st, np.int64(n), np.int64(d), edges):
            return SimpleSample(edges.copy(), attempt)
    return SimpleSample(None, int(max_tries))


def circulant(n: int, d: int) -> np.ndarray:
    """Circulant d-regular graph: offsets 1..d//2, plus n/2 when d is odd."""
    if d < 1 or d >= n or (n * d) % 2:
        raise ParameterError("circulant needs 1 <= d < n and n*d even")
    rows = []
    idx = np.arange(n, dtype=np.int64)
    for k in range(1, d // 2 + 1):
        rows.append(np.stack((idx, (idx + k) % n), axis=1))
    if d % 2:
        half = np.arange(n // 2, dtype=np.int64)
        rows.append(np.stack((half, half + n // 2), axis=1))
    return np.concatenate(rows)


@njit(cache=True, nogil=True)
def _percolate_sizes(st, n, edges, p):
    kept = np.empty_like(edges)
    k = 0
    for i in range(edges.shape[0]):
        if bernoulli_draw(st, p):
            kept[k] = edges[i]
            k += 1
    return _component_sizes(n, kept[:k])


def regular_percolate_explicit(n: int, edges, p: float, rng) -> np.ndarray:
    """Component sizes (largest first) after keeping each edge with probability p."""
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    sizes = _percolate_sizes(as_stream(rng).state, np.int64(n), arr, float(p))
    return np.sort(sizes)[::-1]


def regular_component_sizes(params: RegParams, rng, max_tries: int = 1000) -> np.ndarray:
    """Percolation cluster sizes (largest first) on an explicit base graph."""
    if params.base == "config":
        edges = config_pairing(params.n, params.d, rng)
    elif params.base == "simple":
        sample = config_sample_simple(params.n, params.d, rng, max_tries)
        if not sample.success:
            raise InvariantViolation(f"no simple pairing in {max_tries} attempts")
        edges = sample.edges
    else:
        edges = circulant(params.n, params.d)
    return regular_percolate_explicit(params.n, edges, params.p, rng)


def regular_cmax(params: RegParams, rng, max_tries: int = 1000) -> int:
    """Largest percolation cluster; the configuration model uses the stub exploration."""
    if params.base == "config":
        return config_percolation_explore(params, rng).info["cmax"]
    return int(regular_component_sizes(params, rng, max_tries)[0])


@njit(cache=True, nogil=True)
def _pair_any(st, n, d, edges):
    S = n * d
    pool = np.arange(S)
    size = S
    k = 0
    while size > 0:
        size -= 1
        a = pool[size]
        j = randbelow(st, size)
        b = pool[j]
        size -= 1
        pool[j] = pool[size]
        edges[k, 0] = a // d
        edges[k, 1] = b // d
        k += 1


def config_pairing(n: int, d: int, rng) -> np.ndarray:
    """Uniform stub pairing; loops and multi-edges are kept."""
    RegParams(n, d)
    edges = np.empty((n * d // 2, 2), dtype=np.int64)
    _pair_any(as_stream(rng).state, np.int64(n), np.int64(d), edges)
    return edges
