"""Calibration of per-trial scoring rates from historical match results."""

from .glm import (INTERCEPT, LSFE, OPPONENT_PREFIX, TEAM_PREFIX, Design, FittedModel,
                  build_design, fit_glm_binomial_logit, full_term_set, load_reference_model,
                  predict_scoring_prob, stepwise_select)
from .ratings import GRADE_ORDER, TeamRating, grade_for, rate_teams
from .records import MatchRecord, ObservationRow, expand_records, load_matches, write_matches
from .synth import random_schedule, synthesize_dataset

__all__ = [
    "INTERCEPT", "LSFE", "OPPONENT_PREFIX", "TEAM_PREFIX", "Design", "FittedModel",
    "build_design", "fit_glm_binomial_logit", "full_term_set", "load_reference_model",
    "predict_scoring_prob", "stepwise_select", "GRADE_ORDER", "TeamRating", "grade_for",
    "rate_teams", "MatchRecord", "ObservationRow", "expand_records", "load_matches",
    "write_matches", "random_schedule", "synthesize_dataset",
]
