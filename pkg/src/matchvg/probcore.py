"""Special functions, elementary distributions and seeded sampling.

The modified Bessel function ``K`` used here is the Macdonald function,
sometimes called the modified Bessel function of the second *or* third
kind; both names refer to the same function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "RngStream",
    "as_generator",
    "std_normal_cdf",
    "ln_gamma",
    "bessel_k",
    "log_bessel_k",
    "binomial_pmf",
    "trinomial_joint_pmf",
    "sample_gamma",
    "sample_normal",
]

_LOG2 = math.log(2.0)


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Reproducible, splittable random stream.

    A stream is a plain value: every call to :meth:`generator` starts the
    same sequence.  Streams with different ``stream_id`` under one seed are
    independent children of a single :class:`numpy.random.SeedSequence`
    (PCG64 generator family), so parallel work can be split by id without
    depending on thread count.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_id < 0:
            raise DomainError(f"stream_id must be non-negative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    """Accept an :class:`RngStream`, an int seed or a ``Generator``."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


# --------------------------------------------------------------------------
# Elementary special functions
# --------------------------------------------------------------------------

def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-16 absolute."""
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf requires a finite argument, got {x}")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"ln_gamma requires a finite positive argument, got {x}")
    return math.lgamma(x)


# --------------------------------------------------------------------------
# Modified Bessel function K
# --------------------------------------------------------------------------

_ASYMPTOTIC_CROSSOVER = 10.0
_WINDOW_DROP = 50.0  # integrand truncated where it falls e^-50 below its peak
_MAX_HALF_INTEGER_ORDER = 60
_NODE_BUDGET = 1 << 20


def _integrand_log(t, nu, logx):
    # log of exp(-x cosh t) * cosh(nu t), overflow-free for tiny x and large nu
    x_cosh = 0.5 * (np.exp(t + logx) + np.exp(logx - t))
    nt = nu * t
    return -x_cosh + nt + np.log1p(np.exp(-2.0 * nt)) - _LOG2


def _log_k_quadrature(nu, x):
    """log K_nu(x) via the trapezoid rule on the cosh integral representation.

    K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt.  The integrand is even
    and analytic, so the trapezoid rule converges geometrically; its window
    is cut where the integrand is ``_WINDOW_DROP`` nats below the peak.
    """
    logx = np.log(x)
    with np.errstate(over="ignore"):
        ratio = nu / x
    # nu / x overflows for subnormal x, where arcsinh(y) = log(2y) exactly
    t_ref = np.where(np.isfinite(ratio), np.arcsinh(np.where(np.isfinite(ratio), ratio, 0.0)),
                     math.log(2.0 * max(nu, 1e-300)) - logx)
    g_ref = _integrand_log(t_ref, nu, logx)

    # left edge
    g0 = _integrand_log(np.zeros_like(x), nu, logx)
    left = np.zeros_like(x)
    need = g0 - g_ref < -_WINDOW_DROP
    if np.any(need):
        lo, hi = np.zeros(need.sum()), t_ref[need].copy()
        nu_l, lx, gr = nu, logx[need], g_ref[need]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            below = _integrand_log(mid, nu_l, lx) - gr < -_WINDOW_DROP
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        left[need] = lo

    # right edge: expand then bisect
    step = np.ones_like(x)
    while True:
        above = _integrand_log(t_ref + step, nu, logx) - g_ref >= -_WINDOW_DROP
        if not np.any(above):
            break
        step = np.where(above, 2.0 * step, step)
    lo, hi = t_ref + 0.5 * step * (step > 1), t_ref + step
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        below = _integrand_log(mid, nu, logx) - g_ref < -_WINDOW_DROP
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    right = hi

    # node spacing: resolve the peak curvature and the unit-scale tail drop
    curvature = 0.5 * (np.exp(t_ref + logx) + np.exp(logx - t_ref))
    h_target = np.minimum(0.15, 0.4 / np.sqrt(np.maximum(curvature, 1e-300)))
    n_req = np.ceil((right - left) / h_target)
    n_nodes = np.maximum(32, 2 ** np.ceil(np.log2(np.maximum(n_req, 1)))).astype(int)

    out = np.empty_like(x)
    for n in np.unique(n_nodes):
        frac = np.linspace(0.0, 1.0, n + 1)
        rows = np.flatnonzero(n_nodes == n)
        step = max(1, _NODE_BUDGET // (n + 1))  # bounds the (rows, nodes) work array
        for start in range(0, rows.size, step):
            sel = rows[start:start + step]
            a, b = left[sel], right[sel]
            t = a[:, None] + (b - a)[:, None] * frac[None, :]
            g = _integrand_log(t, nu, logx[sel][:, None])
            gmax = g.max(axis=1)
            w = np.exp(g - gmax[:, None])
            w[:, 0] *= 0.5
            w[:, -1] *= 0.5
            h = (b - a) / n
            out[sel] = gmax + np.log(h * w.sum(axis=1))
    return out


def _log_k_half_integer(m, x):
    """Exact log K_{m+1/2}(x): a terminating sum of positive terms, in log space."""
    logx = np.log(x)
    log_terms = [np.zeros_like(x)]
    log_c = 0.0
    for k in range(1, m + 1):
        log_c += math.log((m + k) * (m - k + 1) / (2.0 * k))
        log_terms.append(log_c - k * logx)
    lt = np.stack(log_terms)
    top = lt.max(axis=0)
    log_s = top + np.log(np.exp(lt - top).sum(axis=0))
    return 0.5 * (math.log(math.pi / 2.0) - logx) - x + log_s


def _log_k_asymptotic(nu, x):
    """Large-x asymptotic series; returns (values, converged mask)."""
    mu = 4.0 * nu * nu
    s = np.ones_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    ok = np.zeros(x.shape, dtype=bool)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        mag = np.abs(term)
        diverging = live & (mag > prev)
        live &= ~diverging
        s = np.where(live, s + term, s)
        conv = live & (mag <= 1e-17 * np.abs(s))
        ok |= conv
        live &= ~conv
        prev = mag
        if not np.any(live):
            break
    return 0.5 * np.log(np.pi / (2.0 * x)) - x + np.log(np.abs(s)), ok


def log_bessel_k(order, x):
    """Natural log of K_order(x), vectorised over ``x > 0``.

    Half-integer orders use the exact terminating expansion; other orders
    use the asymptotic series for ``x >= 10`` where it converges to double
    precision, and exponentially convergent quadrature elsewhere.
    """
    nu = abs(float(order))
    if not math.isfinite(nu):
        raise DomainError(f"bessel order must be finite, got {order}")
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(~(x_arr > 0)) or np.any(~np.isfinite(x_arr)):
        raise DomainError("bessel_k requires finite x > 0")

    out = np.empty_like(x_arr)
    twice = 2.0 * nu
    if twice == round(twice) and int(round(twice)) % 2 == 1 and nu < _MAX_HALF_INTEGER_ORDER:
        out[:] = _log_k_half_integer(int(nu - 0.5), x_arr)
    else:
        todo = np.ones(x_arr.shape, dtype=bool)
        big = x_arr >= _ASYMPTOTIC_CROSSOVER
        if np.any(big):
            vals, ok = _log_k_asymptotic(nu, x_arr[big])
            idx = np.flatnonzero(big)[ok]
            out[idx] = vals[ok]
            todo[idx] = False
        if np.any(todo):
            out[todo] = _log_k_quadrature(nu, x_arr[todo])
    return float(out[0]) if scalar else out


SMALL_ARGUMENT = 1e-30
_EULER_GAMMA = 0.5772156649015329


def log_bessel_k_small(order, log_x):
    """log K_order(x) from ``log x`` for ``x < SMALL_ARGUMENT``.

    Uses the leading small-argument behaviour, keeping the I_nu correction
    for orders below one; the dropped terms are O(x^2) relative.  Taking
    ``log x`` avoids the precision loss of forming a subnormal ``x``.
    """
    nu = abs(float(order))
    log_x = np.asarray(log_x, dtype=float)
    if np.any(log_x >= math.log(SMALL_ARGUMENT)):
        raise DomainError(f"small-argument form needs x < {SMALL_ARGUMENT}")
    half = log_x - _LOG2
    if nu == 0.0:
        out = np.log(-half - _EULER_GAMMA)
    else:
        out = math.lgamma(nu) - _LOG2 - nu * half
        if nu < 1.0:
            ratio = np.exp(2.0 * nu * half + math.lgamma(1.0 - nu) - math.lgamma(1.0 + nu))
            out = out + np.log1p(-ratio)
    return float(out) if out.ndim == 0 else out


def bessel_k(order, x):
    """Modified Bessel function K_order(x) for real order and ``x > 0``."""
    val = log_bessel_k(order, x)
    return math.exp(val) if isinstance(val, float) else np.exp(val)


# --------------------------------------------------------------------------
# Discrete distributions
# --------------------------------------------------------------------------

def _check_count(name, k):
    if int(k) != k or k < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {k}")
    return int(k)


def _check_prob(name, p):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p}")
    return float(p)


def _xlogy(k, p):
    # k * log(p) with the 0 * log 0 = 0 convention
    if k == 0:
        return 0.0
    if p == 0.0:
        return -math.inf
    return k * math.log(p)


def binomial_pmf(k: int, n: int, p: float) -> float:
    """Exact Bin(n, p) probability of ``k`` successes, computed in log space."""
    k, n = _check_count("k", k), _check_count("n", n)
    p = _check_prob("p", p)
    if k > n:
        raise DomainError(f"k={k} exceeds n={n}")
    log_coef = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(log_coef + _xlogy(k, p) + _xlogy(n - k, 1.0 - p))


def trinomial_joint_pmf(i: int, j: int, n: int, params) -> float:
    """P(X = i, Y = j) after ``n`` trinomial trials with scoring rates ``params``."""
    i, j, n = _check_count("i", i), _check_count("j", j), _check_count("n", n)
    if i + j > n:
        raise DomainError(f"i + j = {i + j} exceeds n = {n}")
    px, py = float(params.p_x), float(params.p_y)
    rest = n - i - j
    log_coef = (math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(j + 1)
                - math.lgamma(rest + 1))
    return math.exp(log_coef + _xlogy(i, px) + _xlogy(j, py) + _xlogy(rest, 1.0 - px - py))


# --------------------------------------------------------------------------
# Continuous sampling
# --------------------------------------------------------------------------

def sample_gamma(shape: float, rate: float, rng, size=None):
    """Draw from Gamma(shape, rate); the mean is ``shape / rate``.

    ``rng`` may be an :class:`RngStream` (replayed from its start), a seed,
    or a live ``numpy.random.Generator``.
    """
    if not (shape > 0 and rate > 0) or not (math.isfinite(shape) and math.isfinite(rate)):
        raise DomainError(f"gamma needs positive shape and rate, got shape={shape}, rate={rate}")
    return as_generator(rng).gamma(shape, 1.0 / rate, size=size)


def sample_normal(mean: float, variance: float, rng, size=None):
    """Gaussian draw(s); ``variance == 0`` returns ``mean`` exactly."""
    if not variance >= 0:
        raise DomainError(f"variance must be non-negative, got {variance}")
    gen = as_generator(rng)
    if variance == 0:
        return mean if size is None else np.full(size, float(mean))
    return gen.normal(mean, math.sqrt(variance), size=size)
