"""Excursion engine for exploration processes.

The active count follows R_t = R_{t-1} + eta_t - 1 while R_{t-1} >= 1 and
R_t = eta_t when a new component is started (R_{t-1} = 0).  The zeros of R
close components; the closing step belongs to the component it closes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from numba import njit

from .errors import InvariantViolation, ParameterError


@dataclass
class ExcursionState:
    t: int
    R: int
    U: int
    aux: Any = None


@dataclass
class ExcursionTrace:
    """History of one exploration.

    ``Rs`` holds R_0..R_K (length K+1) and ``etas`` holds eta_1..eta_K.
    ``vertex_counts`` is set by models whose excursion length is not the
    component size (stub-level explorations); ``extra_components`` holds
    components never visited by an excursion (isolated leftovers).
    """

    etas: np.ndarray
    Rs: np.ndarray
    boundaries: np.ndarray
    component_sizes: np.ndarray
    total_steps: int
    n: int | None = None
    Us: np.ndarray | None = None
    unfinished: bool = False
    vertex_counts: np.ndarray | None = None
    extra_components: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    vertex_consuming: bool = True
    info: dict = field(default_factory=dict)

    def dump(self, path) -> None:
        """Tab-separated ``t eta R U`` lines (t = 0 carries R_0 only)."""
        lines = []
        U = self.Us if self.Us is not None else np.full(self.total_steps + 1, -1)
        lines.append(f"0\t\t{self.Rs[0]}\t{U[0]}")
        for t in range(1, self.total_steps + 1):
            lines.append(f"{t}\t{self.etas[t - 1]}\t{self.Rs[t]}\t{U[t]}")
        Path(path).write_text("\n".join(lines) + "\n", newline="\n")


class Excursion(NamedTuple):
    start: int
    end: int
    size: int
    closed: bool


def advance(state: ExcursionState, eta: int, n: int | None = None) -> None:
    """Apply one step of the recursion to ``state`` in place."""
    if state.R >= 1:
        state.R = state.R + eta - 1
    else:
        state.R = eta
    state.t += 1
    if state.R < 0:
        raise InvariantViolation(f"R became negative at t={state.t}")
    if n is not None:
        state.U = n - state.t - state.R


def boundaries_from_R(Rs) -> np.ndarray:
    Rs = np.asarray(Rs)
    return np.nonzero(Rs[1:] == 0)[0] + 1


def run_exploration(stepper, K: int, rng=None, R0: int | None = None,
                    check_recursion: bool = True) -> ExcursionTrace:
    """Run ``stepper`` for at most K steps and record the trace.

    The stepper provides ``draw(state, rng) -> eta`` (or None when it has
    nothing left to explore), ``vertex_consuming`` and optionally ``n`` and
    ``R0``.  For vertex-consuming models U = n - t - R is maintained here.
    """
    if K < 1:
        raise ParameterError("horizon K must be at least 1")
    vertex = getattr(stepper, "vertex_consuming", True)
    n = getattr(stepper, "n", None)
    if R0 is None:
        R0 = getattr(stepper, "R0", 1)
    U0 = (n - R0) if (vertex and n is not None) else getattr(stepper, "U0", -1)
    state = ExcursionState(t=0, R=int(R0), U=int(U0))
    etas = []
    Rs = [int(R0)]
    Us = [int(U0)]
    for _ in range(K):
        eta = stepper.draw(state, rng)
        if eta is None:
            break
        eta = int(eta)
        if vertex and eta < 0:
            raise InvariantViolation(f"negative eta={eta} at t={state.t + 1} for a vertex model")
        prev = state.R
        advance(state, eta, n if vertex else None)
        if not vertex and hasattr(stepper, "unseen"):
            state.U = int(stepper.unseen())
        if check_recursion:
            expect = prev + eta - 1 if prev >= 1 else eta
            if state.R != expect:
                raise InvariantViolation(f"recursion broken at t={state.t}")
        etas.append(eta)
        Rs.append(state.R)
        Us.append(state.U)
    return build_trace(np.array(etas, dtype=np.int64), np.array(Rs, dtype=np.int64),
                       n=n, Us=np.array(Us, dtype=np.int64), vertex_consuming=vertex)


def build_trace(etas, Rs, n=None, Us=None, vertex_consuming=True,
                vertex_counts=None, extra_components=None) -> ExcursionTrace:
    Rs = np.asarray(Rs, dtype=np.int64)
    bnd = boundaries_from_R(Rs)
    sizes = np.diff(np.concatenate(([0], bnd))).astype(np.int64)
    K = len(Rs) - 1
    tr = ExcursionTrace(etas=np.asarray(etas, dtype=np.int64), Rs=Rs, boundaries=bnd,
                        component_sizes=sizes, total_steps=K, n=n, Us=Us,
                        unfinished=bool(K > 0 and Rs[-1] > 0),
                        vertex_consuming=vertex_consuming)
    if vertex_counts is not None:
        tr.vertex_counts = np.asarray(vertex_counts, dtype=np.int64)
    if extra_components is not None:
        tr.extra_components = np.asarray(extra_components, dtype=np.int64)
    return tr


def etas_from_R(Rs) -> np.ndarray:
    """Invert the recursion: eta_t from consecutive R values."""
    Rs = np.asarray(Rs, dtype=np.int64)
    prev = Rs[:-1]
    cur = Rs[1:]
    return np.where(prev >= 1, cur - prev + 1, cur)


def segment_excursions(trace) -> list[Excursion]:
    """Maximal positive stretches of R; each includes its closing step."""
    Rs = trace.Rs if isinstance(trace, ExcursionTrace) else np.asarray(trace)
    K = len(Rs) - 1
    out = []
    start = 1
    for t in range(1, K + 1):
        if Rs[t] == 0:
            out.append(Excursion(start, t, t - start + 1, True))
            start = t + 1
    if start <= K:
        out.append(Excursion(start, K, K - start + 1, False))
    return out


@dataclass
class StoppingObservation:
    tau_h: int
    tau_0: int
    reached_h: bool
    h: float
    N1: int
    N2: int

    @property
    def died_quickly(self) -> bool:
        """Reached h and then returned to zero within fewer than N1 steps."""
        return self.reached_h and self.tau_0 < self.N1


@njit(cache=True)
def _stopping(Rs, h, N1, N2):
    K = Rs.shape[0] - 1
    tau_h = N2
    for t in range(1, min(N2, K) + 1):
        if Rs[t] >= h:
            tau_h = t
            break
    reached = Rs[tau_h] >= h if tau_h <= K else False
    tau_0 = -1
    for t in range(1, N1 + 1):
        if tau_h + t > K:
            break
        if Rs[tau_h + t] == 0:
            tau_0 = t
            break
    if tau_0 == -1 and tau_h + N1 <= K:
        tau_0 = N1
    return tau_h, tau_0, reached


def observe_stopping(trace, h: float, N1: int, N2: int) -> StoppingObservation:
    """tau_h = min(first t >= 1 with R_t >= h, N2); tau_0 = min(first t >= 1 with R_{tau_h+t} = 0, N1)."""
    Rs = trace.Rs if isinstance(trace, ExcursionTrace) else np.asarray(trace, dtype=np.int64)
    N1, N2 = int(N1), int(N2)
    if not 1 <= N1 <= N2:
        raise ParameterError("need 1 <= N1 <= N2")
    if N2 > len(Rs) - 1:
        raise ParameterError("N2 exceeds the trace length")
    hh = math.inf if h is None else float(h)
    tau_h, tau_0, reached = _stopping(np.asarray(Rs, dtype=np.int64), hh, np.int64(N1), np.int64(N2))
    if tau_0 < 0:
        raise ParameterError("trace too short to determine tau_0")
    return StoppingObservation(int(tau_h), int(tau_0), bool(reached), hh, N1, N2)


def max_component(trace: ExcursionTrace, model_kind: str = "", lower_bound: bool = False) -> int:
    """Largest component size recorded in the trace."""
    if trace.unfinished and not lower_bound:
        raise ParameterError("final excursion is unfinished; pass lower_bound=True to accept")
    sizes = trace.vertex_counts if trace.vertex_counts is not None else trace.component_sizes
    if trace.unfinished and trace.vertex_counts is None:
        last = trace.total_steps - (trace.boundaries[-1] if len(trace.boundaries) else 0)
        sizes = np.concatenate((sizes, [last]))
    candidates = [int(sizes.max()) if len(sizes) else 0]
    if len(trace.extra_components):
        candidates.append(int(trace.extra_components.max()))
    return max(candidates)


def check_vertex_trace(trace: ExcursionTrace) -> None:
    """Invariants of a complete vertex-consuming trace."""
    if trace.n is None:
        return
    if trace.total_steps != trace.n:
        raise InvariantViolation(f"trace has {trace.total_steps} steps, expected n={trace.n}")
    if int(trace.component_sizes.sum()) != trace.n:
        raise InvariantViolation("component sizes do not sum to n")
    if trace.Us is not None:
        t = np.arange(trace.total_steps + 1)
        if np.any(trace.Us != trace.n - t - trace.Rs):
            raise InvariantViolation("U != n - t - R somewhere on the trace")
