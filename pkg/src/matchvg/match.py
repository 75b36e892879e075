"""Known-n trinomial match model.

Each of ``n`` iid trials is won by X with probability ``p_x``, by Y with
probability ``p_y`` and by nobody otherwise, so both scores are binomial
and negatively correlated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError
from .probcore import as_generator, std_normal_cdf

__all__ = [
    "CURLING_TRIALS",
    "CONTINUITY_CORRECTION",
    "MatchParams",
    "OutcomeProbs",
    "ScoreMoments",
    "CurlingOutcome",
    "score_moments",
    "difference_sd",
    "win_prob_gaussian",
    "draw_prob_gaussian",
    "gaussian_outcomes",
    "curling_outcomes",
    "exact_outcomes",
    "simulate_match",
    "simulate_matches",
]

CURLING_TRIALS = 80  # 8 stones a side x 10 ends
CONTINUITY_CORRECTION = 0.5
EXACT_MAX_TRIALS = 200


@dataclass(frozen=True)
class MatchParams:
    """Per-trial scoring probabilities of Team X and Team Y.

    Both must be strictly positive with ``p_x + p_y < 1``.  The classical
    independent-scores case ``p_y = 1 - p_x`` is therefore excluded.
    """

    p_x: float
    p_y: float

    def __post_init__(self):
        px, py = self.p_x, self.p_y
        if not (0.0 < px and 0.0 < py and px + py < 1.0):
            raise DomainError(f"need 0 < p_x, 0 < p_y and p_x + p_y < 1; got ({px}, {py})")

    @classmethod
    def relaxed(cls, p_x: float, p_y: float) -> "MatchParams":
        """Build params allowing zero rates; meant for degenerate tests."""
        if not (0.0 <= p_x and 0.0 <= p_y and p_x + p_y <= 1.0):
            raise DomainError(f"invalid relaxed params ({p_x}, {p_y})")
        obj = object.__new__(cls)
        object.__setattr__(obj, "p_x", float(p_x))
        object.__setattr__(obj, "p_y", float(p_y))
        return obj

    @property
    def p_none(self) -> float:
        return 1.0 - self.p_x - self.p_y

    def swapped(self) -> "MatchParams":
        return MatchParams.relaxed(self.p_y, self.p_x)

    @property
    def tie_share_x(self) -> float:
        """Probability that a sudden-death stone goes to X."""
        return self.p_x / (self.p_x + self.p_y)


@dataclass(frozen=True)
class OutcomeProbs:
    win_x: float
    draw: float
    win_y: float

    def total(self) -> float:
        return self.win_x + self.draw + self.win_y

    def as_tuple(self):
        return (self.win_x, self.draw, self.win_y)


@dataclass(frozen=True)
class ScoreMoments:
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float

    @property
    def var_total(self) -> float:
        return self.var_x + self.var_y + 2.0 * self.cov_xy

    @property
    def var_difference(self) -> float:
        return self.var_x + self.var_y - 2.0 * self.cov_xy


@dataclass(frozen=True)
class CurlingOutcome:
    """Curling match result probabilities.

    ``overall`` has ``draw == 0`` because sudden death settles every tie;
    the regulation-time pair is kept alongside.
    """

    overall: OutcomeProbs
    win_after_regulation: float
    draw_after_regulation: float


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"number of trials must be a positive integer, got {n}")
    return int(n)


def score_moments(params: MatchParams, n: int) -> ScoreMoments:
    n = _check_n(n)
    px, py = params.p_x, params.p_y
    return ScoreMoments(
        mean_x=n * px,
        mean_y=n * py,
        var_x=n * px * (1.0 - px),
        var_y=n * py * (1.0 - py),
        cov_xy=-n * px * py,
    )


def difference_sd(params: MatchParams, n: int) -> float:
    """Standard deviation of ``X - Y`` after ``n`` trials."""
    n = _check_n(n)
    px, py = params.p_x, params.p_y
    return math.sqrt(n * px * (1 - px) + n * py * (1 - py) + 2 * n * px * py)


def win_prob_gaussian(params: MatchParams, n: int) -> float:
    """Normal approximation to P(X - Y >= 1) with a 0.5 continuity correction."""
    s = difference_sd(params, n)
    delta = n * (params.p_x - params.p_y)
    return std_normal_cdf((delta - CONTINUITY_CORRECTION) / s)


def draw_prob_gaussian(params: MatchParams, n: int) -> float:
    """Normal approximation to P(|X - Y| <= 0.5), clamped to [0, 1]."""
    s = difference_sd(params, n)
    delta = n * (params.p_x - params.p_y)
    c = CONTINUITY_CORRECTION
    draw = std_normal_cdf((c - delta) / s) + std_normal_cdf((c + delta) / s) - 1.0
    return min(1.0, max(0.0, draw))


def gaussian_outcomes(params: MatchParams, n: int) -> OutcomeProbs:
    """Both Gaussian approximations, with ``win_y`` the clamped residual.

    The two approximations are not forced to partition on their own, so
    ``win_y = max(0, 1 - win_x - draw)``.
    """
    win = win_prob_gaussian(params, n)
    draw = draw_prob_gaussian(params, n)
    return OutcomeProbs(win, draw, max(0.0, 1.0 - win - draw))


def curling_outcomes(params: MatchParams) -> CurlingOutcome:
    regulation = gaussian_outcomes(params, CURLING_TRIALS)
    share = params.tie_share_x
    win_x = regulation.win_x + regulation.draw * share
    win_y = regulation.win_y + regulation.draw * (1.0 - share)
    return CurlingOutcome(
        overall=OutcomeProbs(win_x, 0.0, win_y),
        win_after_regulation=regulation.win_x,
        draw_after_regulation=regulation.draw,
    )


def _log_pmf_grid(params, n):
    # log P(X=i, Y=j) on the full (n+1) x (n+1) grid, -inf where i + j > n
    lf = np.array([math.lgamma(k + 1) for k in range(n + 1)])
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    rest = n - i - j
    valid = rest >= 0
    rest_c = np.where(valid, rest, 0)

    def xlog(k, p):
        if p == 0.0:
            return np.where(k == 0, 0.0, -np.inf)
        return k * math.log(p)

    with np.errstate(invalid="ignore"):
        logp = (lf[n] - lf[i] - lf[j] - lf[rest_c]
                + xlog(i, params.p_x) + xlog(j, params.p_y) + xlog(rest_c, params.p_none))
    return np.where(valid, logp, -np.inf)


def exact_outcomes(params: MatchParams, n: int, allocate_ties: bool = False) -> OutcomeProbs:
    """Exact outcome probabilities by enumerating the trinomial joint PMF.

    With ``allocate_ties`` the draw mass is split ``p_x : p_y`` between the
    teams (a single sudden-death stone) and ``draw`` becomes 0.
    """
    n = _check_n(n)
    if n > EXACT_MAX_TRIALS:
        raise CapacityError(f"exact enumeration limited to n <= {EXACT_MAX_TRIALS}, got {n}")
    pmf = np.exp(_log_pmf_grid(params, n))
    win_x = float(np.tril(pmf, -1).sum())
    win_y = float(np.triu(pmf, 1).sum())
    draw = float(np.trace(pmf))
    if allocate_ties:
        share = params.tie_share_x
        return OutcomeProbs(win_x + draw * share, 0.0, win_y + draw * (1.0 - share))
    return OutcomeProbs(win_x, draw, win_y)


def simulate_matches(params: MatchParams, n: int, size: int, rng):
    """Simulate ``size`` matches of ``n`` trials.

    Returns ``(score_x, score_y, x_wins)`` arrays; level scores are settled
    by one stone won by X with probability ``p_x / (p_x + p_y)``.
    """
    n = _check_n(n)
    gen = as_generator(rng)
    counts = gen.multinomial(n, [params.p_x, params.p_y, params.p_none], size=size)
    sx, sy = counts[:, 0], counts[:, 1]
    tie_draw = gen.random(size)
    total = params.p_x + params.p_y
    share = params.p_x / total if total > 0 else 0.5
    x_wins = np.where(sx == sy, tie_draw < share, sx > sy)
    return sx, sy, x_wins


def simulate_match(params: MatchParams, n: int, rng):
    """Simulate one match; returns ``(score_x, score_y, winner)`` with winner ``"X"``/``"Y"``."""
    sx, sy, xw = simulate_matches(params, n, 1, rng)
    return int(sx[0]), int(sy[0]), "X" if xw[0] else "Y"
