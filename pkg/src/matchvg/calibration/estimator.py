"""scikit-learn style estimators over the scoring-rate GLM."""

from __future__ import annotations

from math import lgamma

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from ..errors import DomainError
from ..forecast import forecast
from ..match import CURLING_TRIALS
from ..vg import GammaTrialPrior
from .glm import (FittedModel, build_design, fit_glm_binomial_logit, predict_scoring_prob,
                  stepwise_select)
from .records import MatchRecord, ObservationRow, expand_records


def _check_rows(X):
    X = check_array(X, dtype=None, ensure_all_finite=False)
    if X.shape[1] != 3:
        raise ValueError(f"expected 3 columns (team, opponent, lsfe), got {X.shape[1]}")
    return X


def _as_records(X):
    if len(X) and isinstance(X[0], MatchRecord):
        return list(X)
    X = check_array(X, dtype=None, ensure_all_finite=False)
    if X.shape[1] != 6:
        raise ValueError("expected MatchRecords or 6 columns: "
                         "match_id, team_a, team_b, lsfe_holder, score_a, score_b")
    return [MatchRecord(str(r[0]), str(r[1]), str(r[2]), str(r[3]).upper(), int(r[4]), int(r[5]))
            for r in X]


class ScoringRateGLM(BaseEstimator):
    """Binomial-logit model of per-trial scoring rates.

    Parameters
    ----------
    stepwise : bool, default=True
        Select terms by bidirectional stepwise AIC. If False, fit ``terms``
        (or the full dummy design, which is rank deficient and will raise
        unless ``ridge > 0``).
    terms : list of str, optional
        Explicit term list used when ``stepwise`` is False.
    trials : int, default=80
        Trials per observation.
    ridge : float, default=0.0
    max_iter : int, default=50
    tol : float, default=1e-8

    Attributes
    ----------
    model_ : FittedModel
    coef_ : dict
        Term name to coefficient.
    teams_ : list of str
    """

    def __init__(self, *, stepwise=True, terms=None, trials=CURLING_TRIALS, ridge=0.0,
                 max_iter=50, tol=1e-8):
        self.stepwise = stepwise
        self.terms = terms
        self.trials = trials
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol

    def _rows(self, X, y):
        X = _check_rows(X)
        y = check_array(y, ensure_2d=False, dtype=float)
        check_consistent_length(X, y)
        return [ObservationRow(str(t), str(o), int(l), int(s), self.trials)
                for (t, o, l), s in zip(X, y)]

    def fit(self, X, y):
        """Fit on rows of ``(team, opponent, lsfe)`` with ``y`` points scored."""
        rows = self._rows(X, y)
        return self._fit_rows(rows)

    def fit_matches(self, records):
        """Fit directly on :class:`MatchRecord` objects."""
        return self._fit_rows(expand_records(_as_records(records), self.trials))

    def _fit_rows(self, rows):
        if self.stepwise:
            model = stepwise_select(rows, max_iter=self.max_iter, tol=self.tol)
        else:
            design = build_design(rows, self.terms)
            model = fit_glm_binomial_logit(design, ridge=self.ridge, max_iter=self.max_iter,
                                           tol=self.tol)
        model.trials_per_match = self.trials
        return self._set_model(model)

    def _set_model(self, model):
        self.model_ = model
        self.coef_ = model.coef
        self.teams_ = model.known_teams()
        self.n_features_in_ = 3
        return self

    @classmethod
    def from_model(cls, model: FittedModel) -> "ScoringRateGLM":
        """Wrap an existing coefficient table, e.g. the bundled fixture."""
        est = cls(stepwise=False, terms=list(model.terms), trials=model.trials_per_match)
        return est._set_model(model)

    def predict_proba(self, X):
        """Per-trial scoring probability for each ``(team, opponent, lsfe)`` row."""
        check_is_fitted(self, "model_")
        X = _check_rows(X)
        return np.array([predict_scoring_prob(self.model_, str(t), str(o), bool(int(l)))
                         for t, o, l in X])

    def predict(self, X):
        """Expected points: ``trials * p``."""
        return self.trials * self.predict_proba(X)

    def score(self, X, y):
        """Mean binomial log-likelihood per observation (higher is better)."""
        p = self.predict_proba(X)
        y = check_array(y, ensure_2d=False, dtype=float)
        m = float(self.trials)
        const = np.array([lgamma(m + 1) - lgamma(v + 1) - lgamma(m - v + 1) for v in y])
        return float(np.mean(const + y * np.log(p) + (m - y) * np.log1p(-p)))


class MatchOutcomeClassifier(ClassifierMixin, BaseEstimator):
    """Predict curling match winners from historical results.

    ``fit`` calibrates a :class:`ScoringRateGLM` on match records;
    ``predict_proba`` takes rows of ``(team_a, team_b, lsfe_holder)`` with
    the holder given as ``"A"``/``"B"`` and returns overall win
    probabilities for classes ``["A", "B"]`` (ties settled by sudden death).
    """

    def __init__(self, *, glm=None, method="gaussian", lam=None, n_hat=CURLING_TRIALS,
                 n_sims=100_000, seed=0, strict_paper_text=False):
        self.glm = glm
        self.method = method
        self.lam = lam
        self.n_hat = n_hat
        self.n_sims = n_sims
        self.seed = seed
        self.strict_paper_text = strict_paper_text

    def fit(self, X, y=None):
        glm = ScoringRateGLM() if self.glm is None else clone(self.glm)
        self.glm_ = glm.fit_matches(X)
        self.classes_ = np.array(["A", "B"])
        return self

    @classmethod
    def from_model(cls, model: FittedModel, **params) -> "MatchOutcomeClassifier":
        clf = cls(**params)
        clf.glm_ = ScoringRateGLM.from_model(model)
        clf.classes_ = np.array(["A", "B"])
        return clf

    def _prior(self):
        if self.method != "vg":
            return None
        if self.lam is None:
            raise DomainError("method 'vg' needs lam")
        return GammaTrialPrior(self.lam, self.n_hat)

    def forecasts(self, X):
        check_is_fitted(self, "glm_")
        X = check_array(X, dtype=None, ensure_all_finite=False)
        if X.shape[1] != 3:
            raise ValueError("expected 3 columns (team_a, team_b, lsfe_holder)")
        prior = self._prior()
        out = []
        for a, b, h in X:
            a, b, h = str(a), str(b), str(h).upper()
            holder = {"A": a, "B": b}.get(h)
            if holder is None:
                raise ValueError(f"lsfe_holder must be 'A' or 'B', got {h!r}")
            out.append(forecast(self.glm_.model_, a, b, holder, method=self.method, prior=prior,
                                n_sims=self.n_sims, seed=self.seed,
                                strict_paper_text=self.strict_paper_text))
        return out

    def predict_proba(self, X):
        wins = np.array([f.overall_win for f in self.forecasts(X)])
        return np.column_stack([wins, 1.0 - wins])

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
