"""Binomial-logit GLM for per-trial scoring rates.

Each observation is one team's points in one match, modelled as
``Bin(trials, p)`` with

    logit p = intercept + lsfe * [has LSFE] + team:<attacker> + opponent:<defender>

Positive ``team:`` coefficients mean above-average attack; negative
``opponent:`` coefficients mean above-average defence.  Teams without a
term are absorbed into the intercept, i.e. they are average.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConvergenceError, DomainError, SingularFitError
from ..match import CURLING_TRIALS
from ..probcore import std_normal_cdf
from .records import ObservationRow

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"
LSFE = "lsfe"
TEAM_PREFIX = "team:"
OPPONENT_PREFIX = "opponent:"

_SEPARATION_EPS = 1e-10


def expit(z):
    return 1.0 / (1.0 + np.exp(-z))


def logit(p):
    return np.log(p) - np.log1p(-p)


# --------------------------------------------------------------------------
# Fitted model document
# --------------------------------------------------------------------------

@dataclass
class FittedModel:
    """Coefficient table of a fitted (or published) scoring-rate model.

    Serialises to JSON with stable field names; ``from_dict(to_dict())``
    is lossless.
    """

    terms: List[str]
    coefficients: List[float]
    standard_errors: List[float]
    z_values: List[float]
    p_values: List[float]
    deviance: Optional[float] = None
    aic: Optional[float] = None
    trials_per_match: int = CURLING_TRIALS
    teams: List[str] = field(default_factory=list)
    n_obs: Optional[int] = None
    iterations: Optional[int] = None
    labels: Optional[List[str]] = None

    def __post_init__(self):
        k = len(self.terms)
        for name in ("coefficients", "standard_errors", "z_values", "p_values"):
            if len(getattr(self, name)) != k:
                raise DomainError(f"{name} has {len(getattr(self, name))} entries for {k} terms")

    @property
    def coef(self) -> Dict[str, float]:
        return dict(zip(self.terms, self.coefficients))

    def known_teams(self) -> List[str]:
        """Teams named in the term list or in the recorded team universe."""
        names = set(self.teams)
        for t in self.terms:
            for prefix in (TEAM_PREFIX, OPPONENT_PREFIX):
                if t.startswith(prefix):
                    names.add(t[len(prefix):])
        return sorted(names)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FittedModel":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise DomainError(f"unknown model fields: {sorted(extra)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "FittedModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def coefficient_table(self) -> str:
        """Fixed-width table with Estimate / E.S.E. / t-value / p-value columns."""
        names = self.labels or self.terms
        width = max(len("Coefficient"), *(len(n) for n in names))
        lines = [f"{'Coefficient':<{width}}  {'Estimate':>10}  {'E.S.E.':>8}  {'t-value':>9}  {'p-value':>7}"]
        for n, c, s, z, p in zip(names, self.coefficients, self.standard_errors,
                                 self.z_values, self.p_values):
            lines.append(f"{n:<{width}}  {c:>10.4f}  {s:>8.4f}  {z:>9.4f}  {p:>7.4f}")
        return "\n".join(lines)


def load_reference_model() -> FittedModel:
    """Bundled international-curling coefficient fixture."""
    text = resources.files("matchvg.data").joinpath("reference_model.json").read_text(encoding="utf-8")
    return FittedModel.from_json(text)


# --------------------------------------------------------------------------
# Design matrix
# --------------------------------------------------------------------------

@dataclass
class Design:
    matrix: np.ndarray
    successes: np.ndarray
    trials: np.ndarray
    terms: List[str]
    teams: List[str]

    @property
    def n_variables(self) -> int:
        """Column count including the intercept."""
        return len(self.terms)

    @property
    def n_predictors(self) -> int:
        """Column count excluding the intercept."""
        return len([t for t in self.terms if t != INTERCEPT])


def full_term_set(teams: Sequence[str]) -> List[str]:
    teams = sorted(teams)
    return ([INTERCEPT, LSFE] + [TEAM_PREFIX + t for t in teams]
            + [OPPONENT_PREFIX + t for t in teams])


def build_design(rows: Sequence[ObservationRow], terms: Optional[Sequence[str]] = None) -> Design:
    """Dummy-coded design for ``rows``.

    Without ``terms`` every column is built: intercept, lsfe, one
    ``team:`` and one ``opponent:`` indicator per distinct team, with no
    reference level dropped.
    """
    if not rows:
        raise DomainError("cannot build a design from zero observations")
    teams = sorted({r.team for r in rows} | {r.opponent for r in rows})
    if len(teams) < 2:
        raise SingularFitError(teams, "design needs at least two distinct teams")
    if terms is None:
        terms = full_term_set(teams)
    terms = list(terms)
    lookup = {t: i for i, t in enumerate(teams)}
    team_idx = np.array([lookup[r.team] for r in rows])
    opp_idx = np.array([lookup[r.opponent] for r in rows])
    lsfe = np.array([r.lsfe for r in rows], dtype=float)

    X = np.zeros((len(rows), len(terms)))
    for j, term in enumerate(terms):
        if term == INTERCEPT:
            X[:, j] = 1.0
        elif term == LSFE:
            X[:, j] = lsfe
        elif term.startswith(TEAM_PREFIX):
            name = term[len(TEAM_PREFIX):]
            if name in lookup:
                X[:, j] = team_idx == lookup[name]
        elif term.startswith(OPPONENT_PREFIX):
            name = term[len(OPPONENT_PREFIX):]
            if name in lookup:
                X[:, j] = opp_idx == lookup[name]
        else:
            raise DomainError(f"unknown term {term!r}")
    y = np.array([r.successes for r in rows], dtype=float)
    m = np.array([r.trials for r in rows], dtype=float)
    if np.any(y > m) or np.any(y < 0):
        raise DomainError("successes must lie in [0, trials]")
    return Design(X, y, m, terms, teams)


# --------------------------------------------------------------------------
# IRLS
# --------------------------------------------------------------------------

def _xlogy(x, y):
    out = np.zeros_like(x, dtype=float)
    nz = x > 0
    out[nz] = x[nz] * np.log(y[nz])
    return out


@dataclass
class _Grouped:
    """Observations aggregated over identical design rows.

    The binomial likelihood of the raw rows equals the grouped likelihood
    plus constants that do not depend on the coefficients; those constants
    are kept so deviance and AIC refer to the raw rows.
    """

    X: np.ndarray
    y: np.ndarray
    m: np.ndarray
    offset: np.ndarray
    loglik_const: float
    loglik_saturated: float
    n_obs: int

    @classmethod
    def from_raw(cls, X, y, m, offset=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        m = np.asarray(m, dtype=float)
        off = np.zeros(len(y)) if offset is None else np.asarray(offset, dtype=float)
        key = np.column_stack([X, off])
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        yg = np.bincount(inverse, weights=y, minlength=len(uniq))
        mg = np.bincount(inverse, weights=m, minlength=len(uniq))
        lg = np.vectorize(math.lgamma)
        const = float(np.sum(lg(m + 1) - lg(y + 1) - lg(m - y + 1)))
        sat = const + float(np.sum(_xlogy(y, y / m) + _xlogy(m - y, (m - y) / m)))
        return cls(uniq[:, :-1], yg, mg, uniq[:, -1], const, sat, len(y))

    def subset(self, cols):
        return _Grouped(self.X[:, cols], self.y, self.m, self.offset,
                        self.loglik_const, self.loglik_saturated, self.n_obs)

    def loglik(self, p):
        return self.loglik_const + float(np.sum(_xlogy(self.y, p) + _xlogy(self.m - self.y, 1.0 - p)))


def dependent_columns(X: np.ndarray, terms: Sequence[str]) -> List[str]:
    """Columns that are linear combinations of earlier columns."""
    if X.shape[1] == 0:
        return []
    if np.linalg.matrix_rank(X) == X.shape[1]:
        return []
    keep = []
    bad = []
    rank = 0
    for j in range(X.shape[1]):
        r = np.linalg.matrix_rank(X[:, keep + [j]])
        if r > rank:
            keep.append(j)
            rank = r
        else:
            bad.append(terms[j])
    return bad


def _irls(g: _Grouped, terms, ridge=0.0, max_iter=50, tol=1e-8):
    X, y, m, off = g.X, g.y, g.m, g.offset
    k = X.shape[1]
    if ridge == 0.0:
        bad = dependent_columns(X, terms)
        if bad:
            raise SingularFitError(bad)
    eta = logit((y + 0.5) / (m + 1.0))
    beta = np.zeros(k)
    dev_old = np.inf
    converged = False
    for it in range(1, max_iter + 1):
        p = expit(eta)
        w = np.maximum(m * p * (1.0 - p), 1e-300)
        z = eta - off + (y - m * p) / w
        H = X.T @ (w[:, None] * X) + ridge * np.eye(k)
        try:
            beta = np.linalg.solve(H, X.T @ (w * z))
        except np.linalg.LinAlgError as exc:
            raise SingularFitError(terms, f"singular information matrix: {exc}") from exc
        eta = X @ beta + off
        p = expit(eta)
        dev = 2.0 * (g.loglik_saturated - g.loglik(p))
        if abs(dev - dev_old) < tol:
            converged = True
            break
        dev_old = dev
    if not converged:
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations")
    live = m > 0
    if np.any((p[live] < _SEPARATION_EPS) | (p[live] > 1.0 - _SEPARATION_EPS)):
        raise ConvergenceError("fitted probabilities numerically 0 or 1: the data are separated "
                               "and the coefficients diverge")
    w = m * p * (1.0 - p)
    H = X.T @ (w[:, None] * X) + ridge * np.eye(k)
    cov = np.linalg.inv(H)
    return beta, cov, p, dev, it


def fit_grouped(g: _Grouped, terms, ridge=0.0, max_iter=50, tol=1e-8, teams=()) -> FittedModel:
    beta, cov, p, dev, it = _irls(g, terms, ridge=ridge, max_iter=max_iter, tol=tol)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    z = beta / se
    pv = [2.0 * std_normal_cdf(-abs(float(v))) for v in z]
    aic = -2.0 * g.loglik(p) + 2.0 * len(terms)
    return FittedModel(
        terms=list(terms),
        coefficients=[float(v) for v in beta],
        standard_errors=[float(v) for v in se],
        z_values=[float(v) for v in z],
        p_values=pv,
        deviance=float(dev),
        aic=float(aic),
        teams=list(teams),
        n_obs=g.n_obs,
        iterations=it,
    )


def fit_glm_binomial_logit(design, response=None, offset=None, terms=None, ridge=0.0,
                           max_iter=50, tol=1e-8, teams=()) -> FittedModel:
    """Fit a binomial GLM with logit link by iteratively reweighted least squares.

    Parameters
    ----------
    design : Design or ndarray of shape (n, k)
        Either a :class:`Design` (response and term names taken from it) or
        a raw matrix, in which case ``response`` and ``terms`` are required.
    response : tuple (successes, trials), optional
    offset : ndarray of shape (n,), optional
        Fixed contribution to the linear predictor (terms with known
        coefficients).
    ridge : float
        Penalty added to the information matrix; disables the rank check.

    Convergence is declared when the deviance changes by less than ``tol``.
    Standard errors come from the inverse Fisher information; p-values are
    two-sided normal.
    """
    if isinstance(design, Design):
        X, y, m = design.matrix, design.successes, design.trials
        terms = design.terms if terms is None else terms
        teams = design.teams if not teams else teams
    else:
        X = np.asarray(design, dtype=float)
        if response is None:
            raise DomainError("response=(successes, trials) required with a raw design matrix")
        y, m = response
        if terms is None:
            terms = [f"x{j}" for j in range(X.shape[1])]
    g = _Grouped.from_raw(X, y, m, offset)
    return fit_grouped(g, list(terms), ridge=ridge, max_iter=max_iter, tol=tol, teams=teams)


def stepwise_select(rows: Sequence[ObservationRow], criterion: str = "aic",
                    scope: Optional[Sequence[str]] = None,
                    base: Sequence[str] = (INTERCEPT, LSFE),
                    max_iter: int = 50, tol: float = 1e-8) -> FittedModel:
    """Bidirectional stepwise AIC selection starting from ``base``.

    Each round evaluates every single-term addition from ``scope`` and
    every removal (the intercept is never removed), and takes the move
    with the lowest AIC if it improves on the current model.  Moves that
    make the design singular or fail to converge are skipped.  Ties go to
    the lexicographically smallest term name.  Terms are reported in the
    order they entered the model.
    """
    if criterion != "aic":
        raise DomainError(f"unsupported criterion {criterion!r}")
    design = build_design(rows)
    scope = list(design.terms if scope is None else scope)
    if len(scope) < 2:
        raise DomainError("stepwise selection needs at least two candidate terms")
    unknown = [t for t in list(scope) + list(base) if t not in design.terms]
    if unknown:
        raise DomainError(f"terms not present in the data: {unknown}")
    col = {t: j for j, t in enumerate(design.terms)}
    grouped = _Grouped.from_raw(design.matrix, design.successes, design.trials)

    def fit(terms):
        return fit_grouped(grouped.subset([col[t] for t in terms]), terms,
                           max_iter=max_iter, tol=tol, teams=design.teams)

    current = list(base)
    model = fit(current)
    for _ in range(4 * len(scope) + 4):
        moves = []
        for t in scope:
            if t not in current:
                moves.append((t, current + [t]))
        for t in current:
            if t != INTERCEPT:
                moves.append((t, [c for c in current if c != t]))
        best = None
        for name, terms in sorted(moves, key=lambda mv: mv[0]):
            try:
                cand = fit(terms)
            except (SingularFitError, ConvergenceError):
                continue
            if best is None or cand.aic < best[0].aic:
                best = (cand, terms, name)
        if best is None or not best[0].aic < model.aic:
            break
        model, current = best[0], best[1]
        logger.debug("stepwise: %s (AIC %.4f)", best[2], model.aic)
    return model


def predict_scoring_prob(model: FittedModel, team: str, opponent: str, has_lsfe: bool) -> float:
    """Per-trial scoring probability of ``team`` against ``opponent``.

    Names without a coefficient are average and contribute 0; names the
    model has never seen are logged.
    """
    coef = model.coef
    known = set(model.known_teams())
    for name in (team, opponent):
        if known and name not in known:
            logger.warning("team %r unknown to the model; treated as average", name)
    eta = coef.get(INTERCEPT, 0.0)
    if has_lsfe:
        eta += coef.get(LSFE, 0.0)
    eta += coef.get(TEAM_PREFIX + team, 0.0)
    eta += coef.get(OPPONENT_PREFIX + opponent, 0.0)
    return float(1.0 / (1.0 + math.exp(-eta)))
