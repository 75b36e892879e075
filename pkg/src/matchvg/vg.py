"""Variance Gamma machinery for matches with an uncertain number of trials.

If the trial count ``n`` is Gamma(lam, rate=lam/n_hat) and the points
difference is conditionally ``N(n * drift, n * sigma2)``, the difference is
Variance Gamma distributed.  Two different "mu" quantities appear in this
construction; here the per-trial mean of the difference is called
``drift`` and the VG location parameter is ``VGParams.mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .match import CONTINUITY_CORRECTION, MatchParams, OutcomeProbs
from .probcore import SMALL_ARGUMENT, as_generator, log_bessel_k, log_bessel_k_small
from .quadrature import integrate_intervals

__all__ = [
    "KURTOSIS_GATE",
    "GammaTrialPrior",
    "VGParams",
    "vg_params_from_mixture",
    "vg_params_from_match",
    "match_drift_variance",
    "vg_logpdf",
    "vg_pdf",
    "vg_cdf",
    "vg_moments",
    "sample_vg_match_diff",
    "vg_match_outcomes",
    "t_kurtosis",
    "sample_kurtosis",
    "vg_gate",
]

KURTOSIS_GATE = 3.05


@dataclass(frozen=True)
class GammaTrialPrior:
    """Gamma prior on the trial count with mean ``n_hat`` and variance ``n_hat**2 / lam``."""

    lam: float
    n_hat: float

    def __post_init__(self):
        if not (self.lam > 0 and self.n_hat > 0) or not math.isfinite(self.lam * self.n_hat):
            raise DomainError(f"lam and n_hat must be positive, got ({self.lam}, {self.n_hat})")

    @property
    def shape(self) -> float:
        return self.lam

    @property
    def rate(self) -> float:
        return self.lam / self.n_hat

    @property
    def variance(self) -> float:
        return self.n_hat ** 2 / self.lam


@dataclass(frozen=True)
class VGParams:
    """Variance Gamma parameters; ``gamma`` defaults to sqrt(alpha^2 - beta^2)."""

    alpha: float
    beta: float
    lam: float
    mu: float = 0.0
    gamma: float = field(default=None, compare=False)

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not (a > 0 and abs(b) < a and self.lam > 0):
            raise DomainError(f"need alpha > |beta| and lam > 0, got alpha={a}, beta={b}, lam={self.lam}")
        if not math.isfinite(self.mu):
            raise DomainError("location must be finite")
        derived = math.sqrt((a - b) * (a + b))
        if self.gamma is None:
            object.__setattr__(self, "gamma", derived)
        elif not math.isclose(self.gamma, derived, rel_tol=1e-10):
            raise DomainError(f"gamma={self.gamma} inconsistent with sqrt(alpha^2 - beta^2)={derived}")


def vg_params_from_mixture(drift: float, sigma2: float, prior: GammaTrialPrior) -> VGParams:
    """VG law of ``N(n * drift, n * sigma2)`` mixed over ``n ~ prior``."""
    if not sigma2 > 0:
        raise DomainError(f"conditional variance must be positive, got {sigma2}")
    lam, n_hat = prior.lam, prior.n_hat
    gamma2 = 2.0 * lam / (n_hat * sigma2)
    alpha = math.sqrt(gamma2 + drift * drift / (sigma2 * sigma2))
    return VGParams(alpha=alpha, beta=drift / sigma2, lam=lam, mu=0.0, gamma=math.sqrt(gamma2))


def match_drift_variance(params: MatchParams):
    """Per-trial mean and variance of the points difference."""
    px, py = params.p_x, params.p_y
    return px - py, px * (1 - px) + py * (1 - py) + 2 * px * py


def vg_params_from_match(params: MatchParams, prior: GammaTrialPrior) -> VGParams:
    drift, sigma2 = match_drift_variance(params)
    return vg_params_from_mixture(drift, sigma2, prior)


def vg_moments(vg: VGParams):
    """(mean, variance, kurtosis) of the VG law, kurtosis non-excess."""
    # equivalent mixture with unit rate: n ~ Gamma(lam, 1), X|n ~ N(mu + theta n, s2 n)
    g2 = vg.gamma ** 2
    s2 = 2.0 / g2
    theta = vg.beta * s2
    lam = vg.lam
    mean = vg.mu + lam * theta
    var = lam * (s2 + theta ** 2)
    # fourth central moment of a gamma normal mean-variance mixture
    c4 = 3 * lam * s2 ** 2 + 12 * lam * s2 * theta ** 2 + 6 * lam * theta ** 4
    return mean, var, 3.0 + c4 / var ** 2


def vg_logpdf(vg: VGParams, x):
    """Log density, vectorised.  ``+inf`` at ``x == mu`` when ``lam <= 1/2``."""
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("vg density requires finite x")
    lam, alpha, beta = vg.lam, vg.alpha, vg.beta
    nu = lam - 0.5
    const = 2.0 * lam * math.log(vg.gamma) - 0.5 * math.log(math.pi) - math.lgamma(lam)
    d = x_arr - vg.mu
    z = np.abs(d)
    out = np.empty_like(x_arr)
    pos = z > 0
    if np.any(pos):
        zp = z[pos]
        log_y = math.log(alpha) + np.log(zp)
        tiny = log_y < math.log(SMALL_ARGUMENT)
        log_k = np.empty_like(zp)
        if not np.all(tiny):
            log_k[~tiny] = log_bessel_k(nu, alpha * zp[~tiny])
        if np.any(tiny):
            log_k[tiny] = log_bessel_k_small(nu, log_y[tiny])
        out[pos] = const + nu * (np.log(zp) - math.log(2.0 * alpha)) + beta * d[pos] + log_k
    if not np.all(pos):
        if nu > 0:
            # (z / 2a)^nu K_nu(a z) -> Gamma(nu) / (2 a^(2 nu)) as z -> 0
            out[~pos] = const + math.lgamma(nu) - math.log(2.0) - 2.0 * nu * math.log(alpha)
        else:
            out[~pos] = np.inf
    return float(out[0]) if scalar else out


def vg_pdf(vg: VGParams, x):
    """Density of the Variance Gamma law (see :func:`vg_logpdf`)."""
    val = vg_logpdf(vg, x)
    return math.exp(val) if isinstance(val, float) else np.exp(val)


# --------------------------------------------------------------------------
# CDF
# --------------------------------------------------------------------------

_TAIL_DROP = 40.0  # log-density drop at which the tails are truncated


@dataclass(frozen=True)
class _Layout:
    scale: float
    power: float
    u_lo: float
    u_hi: float


def _to_u(vg, lay, x):
    d = np.asarray(x, dtype=float) - vg.mu
    return np.sign(d) * (np.abs(d) / lay.scale) ** (1.0 / lay.power)


def _u_integrand(vg, lay):
    # x = mu + scale * sign(u) |u|^k, so the kink/singularity at mu is smoothed
    k, w = lay.power, lay.scale

    def f(u):
        au = np.abs(u)
        x = vg.mu + w * np.sign(u) * au ** k
        out = np.zeros_like(u)
        nz = au > 0
        out[nz] = np.exp(vg_logpdf(vg, x[nz]) + math.log(k * w) + (k - 1.0) * np.log(au[nz]))
        return out

    return f


@lru_cache(maxsize=256)
def _layout(vg: VGParams) -> _Layout:
    _, var, _ = vg_moments(vg)
    sd = math.sqrt(var)
    power = max(2.0, 1.0 / vg.lam)
    grid = vg.mu + sd * np.linspace(-10, 10, 401)
    lp = vg_logpdf(vg, grid)
    peak = np.max(lp[np.isfinite(lp)])

    def edge(sign):
        m = 10.0
        while vg_logpdf(vg, vg.mu + sign * m * sd) > peak - _TAIL_DROP:
            m *= 2.0
        return m * sd

    lay = _Layout(scale=sd, power=power, u_lo=0.0, u_hi=0.0)
    u_lo = float(_to_u(vg, lay, vg.mu - edge(-1.0)))
    u_hi = float(_to_u(vg, lay, vg.mu + edge(1.0)))
    return _Layout(scale=sd, power=power, u_lo=u_lo, u_hi=u_hi)


def vg_cdf(vg: VGParams, x, atol: float = 1e-10):
    """Variance Gamma CDF, vectorised over ``x``.

    The density is integrated by adaptive Gauss-Kronrod quadrature between
    the sorted query points (with the location as a forced breakpoint) and
    the pieces are accumulated, so the result is non-decreasing in ``x``.
    Tails are cut where the density is ``e^-40`` below its peak.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("vg_cdf requires finite x")
    lay = _layout(vg)
    u = np.clip(_to_u(vg, lay, x_arr), lay.u_lo, lay.u_hi)
    order = np.argsort(u, kind="stable")
    us = u[order]
    # breakpoints: lower cut, query points, and 0 (the location)
    n_neg = int(np.searchsorted(us, 0.0, side="left"))
    bps = np.concatenate([[lay.u_lo], us[:n_neg], [0.0], us[n_neg:]])
    a, b = bps[:-1], bps[1:]
    pieces, _ = integrate_intervals(_u_integrand(vg, lay), a, b,
                                    atol=atol / max(1, len(a)) ** 0.5, rtol=1e-12)
    cum = np.maximum.accumulate(np.clip(np.cumsum(pieces), 0.0, 1.0))
    # cum[i] is the CDF at bps[i + 1]; drop the entry for the forced 0
    at_sorted = np.delete(cum, n_neg)
    out = np.empty_like(x_arr)
    out[order] = at_sorted
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Sampling and match outcomes
# --------------------------------------------------------------------------

def sample_vg_match_diff(params: MatchParams, prior: GammaTrialPrior, rng,
                         mode: str = "continuous", size=None):
    """Points difference X - Y with a gamma-distributed trial count.

    ``continuous``: Gaussian given ``n`` (exactly VG).  ``discrete``: ``n``
    rounded to the nearest integer and real trinomial trials played.
    """
    gen = as_generator(rng)
    n = gen.gamma(prior.shape, 1.0 / prior.rate, size=size)
    if mode == "continuous":
        drift, sigma2 = match_drift_variance(params)
        return gen.normal(n * drift, np.sqrt(n * sigma2))
    if mode == "discrete":
        trials = np.rint(n).astype(np.int64)
        pv = [params.p_x, params.p_y, params.p_none]
        counts = gen.multinomial(trials, pv)
        diff = counts[..., 0] - counts[..., 1]
        return int(diff) if size is None else diff
    raise DomainError(f"mode must be 'continuous' or 'discrete', got {mode!r}")


def vg_match_outcomes(params: MatchParams, prior: GammaTrialPrior,
                      strict_paper_text: bool = False,
                      allocate_ties: bool = False) -> OutcomeProbs:
    """Match outcome probabilities under the Variance Gamma match.

    By default ``win_x = 1 - VG(0.5)`` (the difference is at least one
    point), ``draw = VG(0.5) - VG(-0.5)`` and ``win_y = VG(-0.5)``.
    ``strict_paper_text`` instead reports ``win_x = VG(0.5)`` as the closed
    form is sometimes printed, with ``win_y`` the clamped residual.
    ``allocate_ties`` splits the draw mass ``p_x : p_y`` between the teams.
    """
    vg = vg_params_from_match(params, prior)
    c = CONTINUITY_CORRECTION
    lo, hi = (float(v) for v in vg_cdf(vg, np.array([-c, c])))
    draw = max(0.0, hi - lo)
    if strict_paper_text:
        win_x = hi
        win_y = max(0.0, 1.0 - win_x - draw)
    else:
        win_x, win_y = 1.0 - hi, lo
    if allocate_ties:
        share = params.tie_share_x
        return OutcomeProbs(win_x + draw * share, 0.0, win_y + draw * (1.0 - share))
    return OutcomeProbs(win_x, draw, win_y)


# --------------------------------------------------------------------------
# Kurtosis gate
# --------------------------------------------------------------------------

def t_kurtosis(r: float) -> float:
    """Kurtosis of Student's t with ``r`` degrees of freedom (``r > 4``)."""
    if not r > 4:
        raise DomainError(f"t kurtosis is undefined for r <= 4, got {r}")
    return (3.0 * r - 6.0) / (r - 4.0)


def sample_kurtosis(values) -> float:
    """Plain (non-excess) moment kurtosis m4 / m2**2.

    Integer samples (points differences) are evaluated exactly from power
    sums and rounded once, so a sample sitting on the gate is not pushed
    across it by floating-point error.
    """
    v = np.asarray(values)
    if v.size < 4:
        raise DomainError(f"kurtosis needs at least 4 observations, got {v.size}")
    if v.dtype.kind in "iub" or (v.dtype.kind == "f" and np.all(np.isfinite(v)) and np.all(v == np.rint(v))
                                and np.max(np.abs(v)) < 2 ** 53):
        return _integer_kurtosis(v.astype(np.int64).ravel())
    v = v.astype(float)
    d = v - v.mean()
    m2 = np.mean(d * d)
    if not m2 > 0:
        raise DomainError("kurtosis undefined for a sample with zero variance")
    return float(np.mean(d ** 4) / m2 ** 2)


def _integer_kurtosis(v) -> float:
    n = int(v.size)
    vals, counts = np.unique(v, return_counts=True)
    s1 = s2 = s3 = s4 = 0
    for x, c in zip(vals.tolist(), counts.tolist()):
        x2 = x * x
        s1 += c * x
        s2 += c * x2
        s3 += c * x2 * x
        s4 += c * x2 * x2
    b = n * s2 - s1 * s1  # n * sum of squared deviations
    if b == 0:
        raise DomainError("kurtosis undefined for a sample with zero variance")
    a = n ** 3 * s4 - 4 * n * n * s1 * s3 + 6 * n * s1 * s1 * s2 - 3 * s1 ** 4
    return float(Fraction(a, b * b))


def vg_gate(points_differences, threshold: float = KURTOSIS_GATE):
    """Return ``(kurtosis, vg_recommended)``; VG is advised once kurtosis exceeds 3.05."""
    k = sample_kurtosis(points_differences)
    return k, bool(k > threshold)
