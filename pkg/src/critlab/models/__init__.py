"""Drivers for the four critical random graph models."""
from __future__ import annotations

import numpy as np

from ..errors import InvariantViolation, ParameterError
from ..randsrc import Stream, as_stream
from .er import er_batch, er_explore
from .intersection import intersection_batch, intersection_explore
from .params import (ErParams, IntersectionParams, MODEL_KINDS, QuantumParams, RegParams,
                     make_params)
from .quantum import quantum_batch, quantum_direct
from .regular import config_batch, regular_cmax, regular_component_sizes

__all__ = ["ErParams", "RegParams", "IntersectionParams", "QuantumParams", "MODEL_KINDS",
           "make_params", "cmax_sample", "cmax_batch"]


def cmax_sample(params, rng) -> int:
    """One |C_max| sample from the driver appropriate to ``params``.

    The quantum model is always sampled explicitly (sizes in intervals).
    """
    rng = as_stream(rng)
    if isinstance(params, ErParams):
        return er_explore(params, rng)
    if isinstance(params, RegParams):
        return regular_cmax(params, rng)
    if isinstance(params, IntersectionParams):
        return intersection_explore(params, rng)
    if isinstance(params, QuantumParams):
        return int(quantum_direct(params, rng)[0])
    raise ParameterError(f"unsupported parameter record {type(params).__name__}")


def cmax_batch(params, root_seed: int, first: int, count: int,
               holes: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """|C_max| and component counts for replicates first..first+count-1.

    ``holes=False`` switches off the holes of the quantum graph.

    Replicate i uses stream (root_seed, i), so results do not depend on how
    replicates are split into batches.
    """
    cmax = np.empty(int(count), dtype=np.int64)
    ncomp = np.empty(int(count), dtype=np.int64)
    root = np.uint64(root_seed)
    first = np.uint64(first)
    if isinstance(params, ErParams):
        er_batch(root, first, np.int64(params.n), params.p, cmax, ncomp)
    elif isinstance(params, IntersectionParams):
        intersection_batch(root, first, np.int64(params.n), np.int64(params.m), params.p,
                           cmax, ncomp)
    elif isinstance(params, QuantumParams):
        quantum_batch(root, first, np.int64(params.n), params.theta, params.lam, bool(holes),
                      cmax, ncomp)
    elif isinstance(params, RegParams) and params.base == "config":
        config_batch(root, first, np.int64(params.n), np.int64(params.d), params.p, cmax, ncomp)
    elif isinstance(params, RegParams):
        for k in range(int(count)):
            sizes = regular_component_sizes(params, Stream(int(root), int(first) + k))
            cmax[k] = sizes[0]
            ncomp[k] = len(sizes)
    else:
        raise ParameterError(f"unsupported parameter record {type(params).__name__}")
    bad = np.nonzero(cmax < 0)[0]
    if len(bad):
        raise InvariantViolation(f"replicate {int(first) + int(bad[0])} broke a kernel invariant")
    return cmax, ncomp
