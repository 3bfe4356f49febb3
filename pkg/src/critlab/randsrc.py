"""Counter-based random streams and exact samplers.

Every stream is a Philox4x64-10 generator keyed by ``(root_seed, stream_id)``.
The block counter starts at zero and is incremented before each block is
generated, so a stream reproduces ``numpy.random.Philox(key=[root_seed,
stream_id])`` word for word.  The state is a small ``uint64`` array, which lets
numba kernels and plain Python share the same draws.

The samplers are numba functions taking the state array first.  The public
wrappers validate parameters and optionally fill arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ParameterError

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ZERO = np.uint64(0)
_ONE = np.uint64(1)
_FOUR = np.uint64(4)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

STATE_WORDS = 9
_U64_LIMIT = 1 << 64

# binomial switches from inversion to rejection at this N*min(q, 1-q)
BINOMIAL_INVERSION_CUTOFF = 30.0
POISSON_INVERSION_CUTOFF = 10.0


@njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    hh = a_hi * b_hi
    cross = (ll >> _S32) + (hl & _MASK32) + lh
    hi = hh + (hl >> _S32) + (cross >> _S32)
    lo = (cross << _S32) | (ll & _MASK32)
    return hi, lo


@njit(cache=True)
def _refill(st):
    c0 = st[2] + _ONE
    c1 = st[3]
    if c0 == _ZERO:
        c1 += _ONE
    st[2] = c0
    st[3] = c1
    x0 = c0
    x1 = c1
    x2 = _ZERO
    x3 = _ZERO
    k0 = st[0]
    k1 = st[1]
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, x0)
        hi1, lo1 = _mulhilo(_M1, x2)
        x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
        k0 += _W0
        k1 += _W1
    st[4] = x0
    st[5] = x1
    st[6] = x2
    st[7] = x3
    st[8] = _ZERO


@njit(cache=True)
def init_state(st, root_seed, stream_id):
    """Reset ``st`` to the start of stream (root_seed, stream_id)."""
    st[0] = np.uint64(root_seed)
    st[1] = np.uint64(stream_id)
    for i in range(2, 8):
        st[i] = _ZERO
    st[8] = _FOUR


@njit(cache=True)
def fresh_state(root_seed, stream_id):
    st = np.empty(STATE_WORDS, dtype=np.uint64)
    init_state(st, root_seed, stream_id)
    return st


@njit(cache=True)
def next_u64(st):
    if st[8] >= _FOUR:
        _refill(st)
    i = np.int64(st[8])
    st[8] = st[8] + _ONE
    return st[4 + i]


@njit(cache=True)
def uniform(st):
    """Uniform on [0, 1) with a 53-bit mantissa."""
    return np.float64(next_u64(st) >> _S11) * _TWO_M53


@njit(cache=True)
def randbelow(st, k):
    """Uniform integer in [0, k) for k >= 1 (Lemire's multiply-shift with rejection)."""
    kk = np.uint64(k)
    hi, lo = _mulhilo(next_u64(st), kk)
    if lo < kk:
        t = (_ZERO - kk) % kk
        while lo < t:
            hi, lo = _mulhilo(next_u64(st), kk)
    return np.int64(hi)


@njit(cache=True)
def bernoulli_draw(st, p):
    return 1 if uniform(st) < p else 0


@njit(cache=True)
def _binomial_inversion(st, n, p):
    # p <= 1/2 and n*p small: walk the cdf from 0
    q = 1.0 - p
    s = p / q
    p0 = math.exp(n * math.log1p(-p))
    while True:
        u = uniform(st)
        k = 0
        pk = p0
        while u > pk:
            u -= pk
            pk *= s * (n - k) / (k + 1)
            k += 1
            if k > n or pk == 0.0:
                k = -1
                break
        if k >= 0:
            return k


@njit(cache=True)
def _binomial_btrs(st, n, p):
    # transformed rejection with squeeze, p <= 1/2, n*p >= 10
    q = 1.0 - p
    spq = math.sqrt(n * p * q)
    b = 1.15 + 2.53 * spq
    a = -0.0873 + 0.0248 * b + 0.01 * p
    c = n * p + 0.5
    vr = 0.92 - 4.2 / b
    alpha = (2.83 + 5.1 / b) * spq
    lpq = math.log(p / q)
    m = math.floor((n + 1) * p)
    h = math.lgamma(m + 1.0) + math.lgamma(n - m + 1.0)
    while True:
        u = uniform(st) - 0.5
        v = uniform(st)
        us = 0.5 - abs(u)
        if us <= 0.0:
            continue
        kf = math.floor((2.0 * a / us + b) * u + c)
        if kf < 0 or kf > n:
            continue
        if us >= 0.07 and v <= vr:
            return np.int64(kf)
        if v <= 0.0:
            continue
        lv = math.log(v * alpha / (a / (us * us) + b))
        if lv <= h - math.lgamma(kf + 1.0) - math.lgamma(n - kf + 1.0) + (kf - m) * lpq:
            return np.int64(kf)


@njit(cache=True)
def binomial_draw(st, n, q):
    if n <= 0 or q <= 0.0:
        return np.int64(0)
    if q >= 1.0:
        return np.int64(n)
    flip = q > 0.5
    p = 1.0 - q if flip else q
    if n * p < BINOMIAL_INVERSION_CUTOFF:
        k = np.int64(_binomial_inversion(st, n, p))
    else:
        k = _binomial_btrs(st, n, p)
    return np.int64(n) - k if flip else k


@njit(cache=True)
def _poisson_inversion(st, mu):
    p0 = math.exp(-mu)
    while True:
        u = uniform(st)
        k = 0
        pk = p0
        while u > pk:
            u -= pk
            k += 1
            pk *= mu / k
            if pk == 0.0:
                k = -1
                break
        if k >= 0:
            return np.int64(k)


@njit(cache=True)
def _poisson_ptrs(st, mu):
    slam = math.sqrt(mu)
    loglam = math.log(mu)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = uniform(st) - 0.5
        v = uniform(st)
        us = 0.5 - abs(u)
        if us <= 0.0:
            continue
        kf = math.floor((2.0 * a / us + b) * u + mu + 0.43)
        if us >= 0.07 and v <= vr:
            return np.int64(kf)
        if kf < 0 or (us < 0.013 and v > us) or v <= 0.0:
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -mu + kf * loglam - math.lgamma(kf + 1.0)):
            return np.int64(kf)


@njit(cache=True)
def poisson_draw(st, mu):
    if mu <= 0.0:
        return np.int64(0)
    if mu < POISSON_INVERSION_CUTOFF:
        return _poisson_inversion(st, mu)
    return _poisson_ptrs(st, mu)


@njit(cache=True)
def positive_poisson_draw(st, mu):
    """Poisson(mu) conditioned on being at least 1."""
    if mu > 1.0:
        while True:
            k = poisson_draw(st, mu)
            if k > 0:
                return k
    p1 = mu * math.exp(-mu) / (-math.expm1(-mu))
    while True:
        u = uniform(st)
        k = 1
        pk = p1
        while u > pk:
            u -= pk
            k += 1
            pk *= mu / k
            if pk == 0.0:
                k = -1
                break
        if k > 0:
            return np.int64(k)


@njit(cache=True)
def exponential_draw(st, rate):
    return -math.log1p(-uniform(st)) / rate


@njit(cache=True)
def cut_gamma_draw(st, theta):
    s = exponential_draw(st, 1.0) + exponential_draw(st, 1.0)
    return s if s < theta else theta


@njit(cache=True)
def geometric_draw(st, q):
    """Number of failures before the first success of a Ber(q) sequence."""
    if q >= 1.0:
        return np.int64(0)
    g = math.floor(math.log1p(-uniform(st)) / math.log1p(-q))
    if g > 4.0e18:
        return np.int64(4000000000000000000)
    return np.int64(g)


# ---------------------------------------------------------------- array fills

@njit(cache=True)
def _fill_bernoulli(st, p, out):
    for i in range(out.shape[0]):
        out[i] = bernoulli_draw(st, p)


@njit(cache=True)
def _fill_binomial(st, n, q, out):
    for i in range(out.shape[0]):
        out[i] = binomial_draw(st, n, q)


@njit(cache=True)
def _fill_poisson(st, mu, out):
    for i in range(out.shape[0]):
        out[i] = poisson_draw(st, mu)


@njit(cache=True)
def _fill_exponential(st, rate, out):
    for i in range(out.shape[0]):
        out[i] = exponential_draw(st, rate)


@njit(cache=True)
def _fill_cut_gamma(st, theta, out):
    for i in range(out.shape[0]):
        out[i] = cut_gamma_draw(st, theta)


@njit(cache=True)
def _fill_u64(st, out):
    for i in range(out.shape[0]):
        out[i] = next_u64(st)


# ------------------------------------------------------------- python surface

def _check_u64(value, name):
    value = int(value)
    if not 0 <= value < _U64_LIMIT:
        raise ParameterError(f"{name} must be a 64-bit unsigned integer, got {value}")
    return value


def new_state(root_seed: int, stream_id: int = 0) -> np.ndarray:
    st = np.zeros(STATE_WORDS, dtype=np.uint64)
    st[0] = _check_u64(root_seed, "root_seed")
    st[1] = _check_u64(stream_id, "stream_id")
    st[8] = 4  # buffer empty
    return st


@dataclass(frozen=True)
class SeedSpec:
    root_seed: int
    stream_id: int = 0

    def __post_init__(self):
        _check_u64(self.root_seed, "root_seed")
        _check_u64(self.stream_id, "stream_id")

    def stream(self) -> "Stream":
        return Stream(self.root_seed, self.stream_id)


class Stream:
    """A replayable random stream; ``state`` is what numba kernels consume."""

    __slots__ = ("state",)

    def __init__(self, root_seed: int = 0, stream_id: int = 0):
        self.state = new_state(root_seed, stream_id)

    @classmethod
    def from_state(cls, state) -> "Stream":
        obj = cls.__new__(cls)
        obj.state = np.array(state, dtype=np.uint64, copy=True)
        if obj.state.shape != (STATE_WORDS,):
            raise ParameterError("malformed stream state")
        return obj

    @property
    def seed(self) -> SeedSpec:
        return SeedSpec(int(self.state[0]), int(self.state[1]))

    def copy(self) -> "Stream":
        return Stream.from_state(self.state)

    def raw(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.uint64)
        _fill_u64(self.state, out)
        return out

    def random(self) -> float:
        return float(uniform(self.state))

    def integers(self, k: int) -> int:
        if k < 1:
            raise ParameterError("k must be positive")
        return int(randbelow(self.state, np.int64(k)))

    def __repr__(self):
        return f"Stream(root_seed={int(self.state[0])}, stream_id={int(self.state[1])})"


def as_stream(rng) -> Stream:
    if isinstance(rng, Stream):
        return rng
    if isinstance(rng, SeedSpec):
        return rng.stream()
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng), 0)
    raise ParameterError(f"cannot build a stream from {type(rng).__name__}")


def _prob(p, name="p"):
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p


def bernoulli(p: float, rng, size: int | None = None):
    p = _prob(p)
    st = as_stream(rng).state
    if size is None:
        return int(bernoulli_draw(st, p))
    out = np.empty(int(size), dtype=np.int8)
    _fill_bernoulli(st, p, out)
    return out


def binomial(N: int, q: float, rng, size: int | None = None):
    N = int(N)
    if N < 0:
        raise ParameterError(f"N must be nonnegative, got {N}")
    q = _prob(q, "q")
    st = as_stream(rng).state
    if size is None:
        return int(binomial_draw(st, np.int64(N), q))
    out = np.empty(int(size), dtype=np.int64)
    _fill_binomial(st, np.int64(N), q, out)
    return out


def poisson(mu: float, rng, size: int | None = None):
    mu = float(mu)
    if not mu >= 0.0 or math.isinf(mu):
        raise ParameterError(f"mu must be finite and nonnegative, got {mu}")
    st = as_stream(rng).state
    if size is None:
        return int(poisson_draw(st, mu))
    out = np.empty(int(size), dtype=np.int64)
    _fill_poisson(st, mu, out)
    return out


def exponential(rate: float, rng, size: int | None = None):
    rate = float(rate)
    if not rate > 0.0:
        raise ParameterError(f"rate must be positive, got {rate}")
    st = as_stream(rng).state
    if size is None:
        return float(exponential_draw(st, rate))
    out = np.empty(int(size), dtype=np.float64)
    _fill_exponential(st, rate, out)
    return out


@dataclass(frozen=True)
class CutGammaParams:
    theta: float

    def __post_init__(self):
        if not float(self.theta) > 0.0 or math.isinf(self.theta):
            raise ParameterError(f"theta must be positive, got {self.theta}")


def cut_gamma(params, rng, size: int | None = None):
    """min(E1 + E2, theta) for independent Exp(1) variables E1, E2."""
    if not isinstance(params, CutGammaParams):
        params = CutGammaParams(float(params))
    theta = float(params.theta)
    st = as_stream(rng).state
    if size is None:
        return float(cut_gamma_draw(st, theta))
    out = np.empty(int(size), dtype=np.float64)
    _fill_cut_gamma(st, theta, out)
    return out


def cut_gamma_mean(theta: float) -> float:
    """E[min(E1+E2, theta)] = 2(1 - e^-theta) - theta e^-theta."""
    return 2.0 * (-math.expm1(-theta)) - theta * math.exp(-theta)


def cut_gamma_second_moment(theta: float) -> float:
    return 6.0 - math.exp(-theta) * (2.0 * theta * theta + 6.0 * theta + 6.0)


def cut_gamma_atom(theta: float) -> float:
    """P(E1 + E2 >= theta)."""
    return math.exp(-theta) * (1.0 + theta)
