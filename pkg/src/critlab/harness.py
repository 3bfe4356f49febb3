"""Replicated Monte Carlo experiments, tail estimates and their exports.

Replicate i always draws from stream (seed, i).  Work is cut into fixed
chunks of replicate indices that do not depend on the worker count, so the
merged sample arrays are identical for any number of threads.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import bounds
from .errors import InvariantViolation, ParameterError
from .explore import observe_stopping
from .models import ErParams, IntersectionParams, QuantumParams, RegParams, cmax_batch, make_params
from .models.er import er_explore
from .models.intersection import intersection_explore
from .models.quantum import quantum_reduced_explore
from .models.regular import config_percolation_explore
from .randsrc import SeedSpec, Stream
from .stats import TailEstimate, proportion, wilson_interval

CHUNK = 1024
DIRECTIONS = ("lower", "upper")

SAMPLES_HEADER = ["replicate", "cmax", "num_components"]
TAILS_HEADER = ["model", "n", "A", "direction", "threshold", "hits", "reps", "p_hat", "ci_lo",
                "ci_hi", "theorem_bound", "vacuous"]
SCALING_HEADER = ["n", "median_cmax", "reps"]


def default_threads() -> int:
    raw = os.environ.get("CRITLAB_THREADS")
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise ParameterError(f"CRITLAB_THREADS={raw!r} is not an integer") from None
    if val < 1:
        raise ParameterError("CRITLAB_THREADS must be at least 1")
    return val


@dataclass
class ExperimentConfig:
    model: object
    replicates: int
    seed: int | SeedSpec = 0
    A_grid: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    n_grid: list | None = None
    threads: int = 1
    outputs: tuple = ("csv",)

    def __post_init__(self):
        if int(self.replicates) < 1:
            raise ParameterError("replicates must be at least 1")
        # A = 1 is allowed so that upper sweeps can start at the n^{2/3} scale
        if any(not float(a) >= 1.0 for a in self.A_grid):
            raise ParameterError("A_grid values must be at least 1")
        if int(self.threads) < 1:
            raise ParameterError("threads must be at least 1")
        if isinstance(self.seed, SeedSpec):
            self.seed = self.seed.root_seed
        if int(self.seed) < 0:
            raise ParameterError("seed must be nonnegative")

    @property
    def root_seed(self) -> int:
        return int(self.seed)


@dataclass
class ReplicateSamples:
    cmax: np.ndarray
    num_components: np.ndarray
    model: str
    n: int
    seed: int

    def __len__(self):
        return len(self.cmax)


def run_replicates(config: ExperimentConfig, holes: bool = True) -> ReplicateSamples:
    """|C_max| and component counts for replicates 0..replicates-1.

    ``holes`` only matters for the quantum graph (False gives the hole-free
    reduction to G(n, p)).
    """
    params = config.model
    R = int(config.replicates)
    chunks = [(s, min(CHUNK, R - s)) for s in range(0, R, CHUNK)]
    cmax = np.empty(R, dtype=np.int64)
    ncomp = np.empty(R, dtype=np.int64)

    def work(chunk):
        first, count = chunk
        try:
            return first, cmax_batch(params, config.root_seed, first, count, holes)
        except InvariantViolation as exc:
            raise InvariantViolation(f"replicates {first}..{first + count - 1}: {exc}") from exc

    threads = min(int(config.threads), len(chunks))
    if threads <= 1:
        results = map(work, chunks)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(work, chunks)
    try:
        for first, (c, m) in results:
            cmax[first:first + len(c)] = c
            ncomp[first:first + len(c)] = m
    finally:
        if threads > 1:
            pool.shutdown()
    return ReplicateSamples(cmax, ncomp, params.kind, params.n, config.root_seed)


# ------------------------------------------------------------ tails

def _lower_bound(params, n: int, A: float):
    """Lower-tail bound, or inf when the constants give no information at (n, A)."""
    if params is None:
        return None
    try:
        spec = bounds.lower_tail_spec(params, A=A)
    except ParameterError:
        return math.inf
    if spec.degenerate:
        return math.inf
    return bounds.jointprop_bound(spec)


def _upper_bound(params, n: int, A: float, threshold: int):
    if params is None:
        return None
    if params.kind == "quantum":
        T = threshold // 2
        if T < 1:
            return None
        return bounds.quantum_upper_decomposition(n, params.theta, params.lam, T).total
    return bounds.upper_tail_constant(params).bound(A)


def tail_estimates(samples, n: int, A_grid, direction: str, params=None,
                   model: str | None = None) -> list[TailEstimate]:
    """Empirical frequencies of |C_max| < n^{2/3}/A (lower) or > A n^{2/3} (upper).

    With ``params`` the matching theorem bound is attached (None when the
    bound has no meaningful value at that point).
    """
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}")
    cm = np.asarray(samples.cmax if isinstance(samples, ReplicateSamples) else samples,
                    dtype=np.int64)
    if cm.size == 0:
        raise ParameterError("no samples")
    if model is None:
        model = params.kind if params is not None else ""
    reps = int(cm.size)
    out = []
    for A in A_grid:
        A = float(A)
        if not A > 0:
            raise ParameterError("A must be positive")
        note = ""
        if direction == "lower":
            if bounds._frac(A) ** 3 >= n * n:
                thr = bounds.lower_threshold(n, A)
                out.append(proportion(0, reps, model=model, n=n, A=A, direction=direction,
                                      threshold=thr,
                                      note="A >= n^(2/3): |C_max| >= 1 by definition"))
                continue
            thr = bounds.lower_threshold(n, A)
            hits = int(np.count_nonzero(cm < thr))
            bound = _lower_bound(params, n, A)
            if bound is not None and math.isinf(bound):
                note = "lower-tail constants degenerate at this (n, A)"
        else:
            thr = bounds.upper_threshold(n, A)
            hits = int(np.count_nonzero(cm > thr))
            bound = _upper_bound(params, n, A, thr)
        out.append(proportion(hits, reps, model=model, n=n, A=A, direction=direction,
                              threshold=thr, theorem_bound=bound, note=note))
    return out


@dataclass
class DecayPair:
    A: float
    A_next: float
    ratio_hi: float
    target: float
    passed: bool


@dataclass
class DecayReport:
    gamma: float
    pairs: list
    inconclusive: bool = False

    @property
    def passed(self) -> bool:
        return not self.inconclusive and all(p.passed for p in self.pairs)


def decay_check(estimates: list[TailEstimate], gamma: float | None = None) -> DecayReport:
    """Check p(A')/p(A) <= (A'/A)^{-gamma} for consecutive grid points.

    The ratio is taken at its most favourable end of the confidence intervals,
    ci_lo(A') / ci_hi(A), so a pair fails only when the data rule the
    claimed decay out at the 99% level.  gamma defaults to 1/2 for the lower
    tail and 3/2 for the upper tail.
    """
    ests = sorted(estimates, key=lambda e: e.A)
    if gamma is None:
        dirs = {e.direction for e in ests}
        if len(dirs) != 1:
            raise ParameterError("estimates mix directions; give gamma explicitly")
        gamma = 0.5 if dirs.pop() == "lower" else 1.5
    if len(ests) < 2:
        raise ParameterError("need at least two grid points")
    if sum(1 for e in ests if e.hits > 0) < 2:
        return DecayReport(gamma, [], inconclusive=True)
    pairs = []
    for a, b in zip(ests, ests[1:]):
        target = (b.A / a.A) ** (-gamma)
        ratio = b.ci_lo / a.ci_hi if a.ci_hi > 0 else math.inf
        pairs.append(DecayPair(a.A, b.A, ratio, target, ratio <= target))
    return DecayReport(gamma, pairs)


# ------------------------------------------------------------ scaling

@dataclass
class ScalingFit:
    n_values: list
    medians: list
    slope: float
    stderr: float
    intercept: float
    reps: int = 0


def fit_scaling(n_values, medians, reps: int = 0) -> ScalingFit:
    ns = np.asarray(n_values, dtype=np.float64)
    med = np.asarray(medians, dtype=np.float64)
    if len(ns) < 4:
        raise ParameterError("need at least four grid points")
    if np.any(med <= 0) or np.any(ns <= 0):
        raise ParameterError("medians and n values must be positive")
    if len(set(ns.tolist())) < 2:
        raise ParameterError("n values are all equal")
    res = sps.linregress(np.log(ns), np.log(med))
    return ScalingFit([int(x) for x in ns], [float(x) for x in med], float(res.slope),
                      float(res.stderr), float(res.intercept), reps)


def scaling_exponent(model: str, n_grid, reps: int, seed: int = 0, threads: int = 1,
                     **model_kw) -> ScalingFit:
    """Slope of log median |C_max| against log n."""
    medians = []
    for n in n_grid:
        params = make_params(model, n=int(n), **model_kw)
        s = run_replicates(ExperimentConfig(params, reps, seed, threads=threads))
        medians.append(float(np.median(s.cmax)))
    return fit_scaling(n_grid, medians, reps)


# ------------------------------------------------------------ stopping times

@dataclass
class StoppingStats:
    model: str
    n: int
    reps: int
    h: float
    N1: int
    N2: int
    tau_h_hits: TailEstimate
    died_quickly: TailEstimate
    attr_excess: TailEstimate | None = None

    def rows(self) -> list[TailEstimate]:
        return [e for e in (self.tau_h_hits, self.died_quickly, self.attr_excess)
                if e is not None]


def _record_run(params, stream, L):
    if isinstance(params, ErParams):
        return er_explore(params, stream, record=L)[1], None
    if isinstance(params, IntersectionParams):
        _, Rs, Ds = intersection_explore(params, stream, record=L)
        return Rs, Ds
    if isinstance(params, QuantumParams):
        return quantum_reduced_explore(params, stream, record=L)[1], None
    if isinstance(params, RegParams):
        return config_percolation_explore(params, stream).Rs, None
    raise ParameterError(f"unsupported parameter record {type(params).__name__}")


def stopping_stats(params, spec: bounds.BoundSpec, reps: int, seed: int = 0) -> StoppingStats:
    """Frequencies of tau_h = N2, of reaching h then dying within N1 steps and,
    for the intersection graph, of D_{T'} > 3 m p T'.

    Each frequency carries the bound it is compared with: Phi for tau_h = N2,
    (c1 + 3) N1 / h^2 for the quick return and the Chernoff bound for the
    attribute count.
    """
    if reps < 1:
        raise ParameterError("reps must be positive")
    n = params.n
    h, N1, N2 = spec.h, int(spec.N1), int(spec.N2)
    L = min(N2 + N1, n)
    Tp = int(spec.T_prime)
    is_rig = isinstance(params, IntersectionParams)
    hit_h = quick = excess = 0
    x = 3.0 * params.m * params.p * Tp if is_rig else None
    for i in range(int(reps)):
        Rs, Ds = _record_run(params, Stream(seed, i), max(L, Tp))
        if len(Rs) - 1 < N2 + N1:
            Rs = np.concatenate((Rs, np.zeros(N2 + N1 + 1 - len(Rs), dtype=np.int64)))
        obs = observe_stopping(Rs, h, N1, N2)
        if obs.tau_h == N2:
            hit_h += 1
        if obs.died_quickly:
            quick += 1
        if is_rig and Ds[min(Tp, len(Ds) - 1)] > x:
            excess += 1
    try:
        phi_val = bounds.phi(N1, N2, h, spec.sigma2, spec.z) if not math.isinf(h) else None
    except ParameterError:
        phi_val = None
    ret = bounds.return_bound(spec.c1, N1, h) if not math.isinf(h) else None
    common = dict(model=params.kind, n=n, A=spec.A)
    tau = proportion(hit_h, reps, direction="tau_h=N2", threshold=N2, theorem_bound=phi_val,
                     **common)
    died = proportion(quick, reps, direction="died<N1", threshold=N1, theorem_bound=ret, **common)
    attr = None
    if is_rig:
        ch = bounds.chernoff_binomial(params.m * Tp, params.p, x - params.m * params.p * Tp)
        attr = proportion(excess, reps, direction="D>3mpT'", threshold=math.floor(x),
                          theorem_bound=ch, **common)
    return StoppingStats(params.kind, n, int(reps), h, N1, N2, tau, died, attr)


# ------------------------------------------------------------ export

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def samples_rows(samples: ReplicateSamples) -> list[dict]:
    return [{"replicate": i, "cmax": int(c), "num_components": int(m)}
            for i, (c, m) in enumerate(zip(samples.cmax, samples.num_components))]


def tails_rows(estimates) -> list[dict]:
    return [{k: e.as_dict()[k] for k in TAILS_HEADER} for e in estimates]


def scaling_rows(fit: ScalingFit) -> list[dict]:
    return [{"n": n, "median_cmax": m, "reps": fit.reps}
            for n, m in zip(fit.n_values, fit.medians)]


def to_csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def to_json(rows: list[dict]) -> str:
    clean = [{k: _json_value(v) for k, v in r.items()} for r in rows]
    return json.dumps(clean, indent=1, sort_keys=False) + "\n"


def export(rows: list[dict], header: list[str], path, fmt: str = "csv") -> Path:
    """Write ``rows`` as CSV (with header) or JSON records."""
    if fmt == "csv":
        text = to_csv(rows, header)
    elif fmt == "json":
        text = to_json([{k: r.get(k) for k in header} for r in rows])
    else:
        raise ParameterError(f"unknown format {fmt!r}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_rows(path, fmt: str = "csv") -> list[dict]:
    text = Path(path).read_text()
    if fmt == "json":
        return json.loads(text)
    return list(csv.DictReader(io.StringIO(text)))


def config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config.model) if hasattr(config.model, "__dataclass_fields__") else {}
    return {"model": config.model.kind, **d, "replicates": config.replicates,
            "seed": config.root_seed, "A_grid": list(config.A_grid)}


__all__ = ["ExperimentConfig", "ReplicateSamples", "run_replicates", "tail_estimates",
           "decay_check", "DecayReport", "ScalingFit", "fit_scaling", "scaling_exponent",
           "StoppingStats", "stopping_stats", "export", "read_rows", "to_csv", "to_json",
           "samples_rows", "tails_rows", "scaling_rows", "wilson_interval", "default_threads"]
