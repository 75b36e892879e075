"""Match forecasts from a fitted scoring-rate model."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from .calibration.glm import FittedModel, predict_scoring_prob
from .errors import DomainError
from .match import (CURLING_TRIALS, MatchParams, curling_outcomes, draw_prob_gaussian,
                    exact_outcomes, win_prob_gaussian)
from .simulator import monte_carlo_fixed_n
from .vg import GammaTrialPrior, vg_match_outcomes

METHODS = ("gaussian", "exact", "mc", "vg")


@dataclass(frozen=True)
class MatchForecast:
    team: str
    opponent: str
    lsfe_holder: str
    method: str
    p_team: float
    p_opponent: float
    win_after_regulation: float
    draw: float
    loss_after_regulation: float
    overall_win: float

    def to_dict(self) -> dict:
        return asdict(self)


def match_params(model: FittedModel, team: str, opponent: str, lsfe_holder: str) -> MatchParams:
    """Scoring rates of ``team`` (as X) and ``opponent`` (as Y)."""
    if lsfe_holder not in (team, opponent):
        raise DomainError(f"LSFE holder {lsfe_holder!r} must be {team!r} or {opponent!r}")
    p_team = predict_scoring_prob(model, team, opponent, lsfe_holder == team)
    p_opp = predict_scoring_prob(model, opponent, team, lsfe_holder == opponent)
    return MatchParams(p_team, p_opp)


def forecast(model: FittedModel, team: str, opponent: str, lsfe_holder: str,
             method: str = "gaussian", prior: Optional[GammaTrialPrior] = None,
             n_sims: int = 100_000, seed: int = 0, strict_paper_text: bool = False,
             workers: int = 1) -> MatchForecast:
    """Regulation and overall win probabilities for ``team``.

    ``overall_win`` adds the regulation draw mass times
    ``p_team / (p_team + p_opponent)`` (one sudden-death stone).
    """
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}, got {method!r}")
    params = match_params(model, team, opponent, lsfe_holder)
    n = model.trials_per_match or CURLING_TRIALS
    if method == "gaussian":
        if n == CURLING_TRIALS:
            res = curling_outcomes(params)
            win, draw = res.win_after_regulation, res.draw_after_regulation
        else:
            win, draw = win_prob_gaussian(params, n), draw_prob_gaussian(params, n)
        loss = max(0.0, 1.0 - win - draw)
    elif method == "exact":
        res = exact_outcomes(params, n)
        win, draw, loss = res.as_tuple()
    elif method == "mc":
        rep = monte_carlo_fixed_n(params, n, n_sims, seed, allocate_ties=False, workers=workers)
        win, draw, loss = rep.win_x_hat, rep.draw_hat, rep.win_y_hat
    else:
        if prior is None:
            raise DomainError("method 'vg' needs a gamma trial prior (lambda and n_hat)")
        res = vg_match_outcomes(params, prior, strict_paper_text=strict_paper_text)
        win, draw, loss = res.as_tuple()
    overall = win + draw * params.tie_share_x
    return MatchForecast(team, opponent, lsfe_holder, method, params.p_x, params.p_y,
                         float(win), float(draw), float(loss), float(overall))
