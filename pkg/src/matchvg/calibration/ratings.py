"""Bond-style team grades from fitted attack and defence coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional

from .glm import OPPONENT_PREFIX, TEAM_PREFIX, FittedModel

ABOVE, AVERAGE, BELOW = "above", "average", "below"

# Best first; above-average defence outranks above-average attack.
GRADE_ORDER = ("AAA", "AA+", "AA", "AA-", "A+")

INTERPRETATION = {
    "AAA": "Above average attack, above average defence",
    "AA+": "Above average defence, average attack",
    "AA": "Above average attack, average defence",
    "AA-": "Average attack, average defence",
    "A+": "Below average attack or defence",
}


@dataclass(frozen=True)
class TeamRating:
    team: str
    attack: str
    defence: str
    grade: str


def grade_for(attack: str, defence: str) -> str:
    if BELOW in (attack, defence):
        return "A+"
    return {
        (ABOVE, ABOVE): "AAA",
        (AVERAGE, ABOVE): "AA+",
        (ABOVE, AVERAGE): "AA",
        (AVERAGE, AVERAGE): "AA-",
    }[(attack, defence)]


def _level(value: Optional[float], good_sign: int) -> str:
    if value is None or value == 0:
        return AVERAGE
    return ABOVE if (value > 0) == (good_sign > 0) else BELOW


def rate_teams(model: FittedModel, teams: Optional[Iterable[str]] = None,
               significance_level: Optional[float] = None) -> List[TeamRating]:
    """Grade every team on the attack/defence lattice.

    A term counts if it is present in the model (retained by selection).
    Passing ``significance_level`` additionally discards terms whose
    p-value is not below it.  Results are sorted best grade first, then by
    team name.
    """
    coef = {}
    for term, c, p in zip(model.terms, model.coefficients, model.p_values):
        if significance_level is None or p < significance_level:
            coef[term] = c
    names = sorted(set(teams) if teams is not None else model.known_teams())
    out = []
    for name in names:
        attack = _level(coef.get(TEAM_PREFIX + name), +1)
        defence = _level(coef.get(OPPONENT_PREFIX + name), -1)
        out.append(TeamRating(name, attack, defence, grade_for(attack, defence)))
    out.sort(key=lambda r: (GRADE_ORDER.index(r.grade), r.team))
    return out
