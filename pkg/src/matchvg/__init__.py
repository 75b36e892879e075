"""Match-outcome probabilities for trinomial-trial sports models.

Scores of the two teams come from ``n`` shared trials, so they are
negatively correlated.  With ``n`` known, outcome probabilities follow
from a Gaussian approximation (or exact enumeration); with ``n`` gamma
distributed the points difference is Variance Gamma.  Scoring rates are
calibrated from match data with a binomial-logit GLM.
"""

from .calibration import FittedModel, load_matches, load_reference_model, rate_teams
from .calibration.estimator import MatchOutcomeClassifier, ScoringRateGLM
from .errors import (CapacityError, ConvergenceError, DomainError, IngestionError,
                     SingularFitError)
from .forecast import MatchForecast, forecast
from .match import (CURLING_TRIALS, MatchParams, OutcomeProbs, curling_outcomes,
                    draw_prob_gaussian, exact_outcomes, score_moments, simulate_match,
                    win_prob_gaussian)
from .probcore import RngStream, bessel_k, std_normal_cdf
from .simulator import SimulationReport, monte_carlo_fixed_n, monte_carlo_vg
from .vg import (GammaTrialPrior, VGParams, t_kurtosis, vg_cdf, vg_gate, vg_match_outcomes,
                 vg_params_from_match, vg_pdf)

__version__ = "0.1.0"
