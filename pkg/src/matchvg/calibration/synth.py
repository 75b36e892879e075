"""Synthetic match data drawn from a known coefficient table."""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from ..errors import DomainError
from ..match import CURLING_TRIALS
from ..probcore import as_generator
from .glm import FittedModel, predict_scoring_prob
from .records import MatchRecord

Pairing = Tuple[str, str, str]  # (team_a, team_b, lsfe_holder)


def random_schedule(teams: Sequence[str], n_matches: int, rng) -> List[Pairing]:
    """Uniformly random distinct pairings with a fair draw for LSFE."""
    teams = list(teams)
    if len(teams) < 2:
        raise DomainError("need at least two teams")
    gen = as_generator(rng)
    a = gen.integers(0, len(teams), size=n_matches)
    b = (a + gen.integers(1, len(teams), size=n_matches)) % len(teams)
    holder = gen.integers(0, 2, size=n_matches)
    return [(teams[i], teams[j], "AB"[h]) for i, j, h in zip(a, b, holder)]


def synthesize_dataset(true_model: FittedModel, schedule: Sequence[Pairing], rng,
                       trials: int = CURLING_TRIALS) -> List[MatchRecord]:
    """Play every pairing as a ``trials``-trial trinomial match."""
    gen = as_generator(rng)
    cache = {}
    probs = np.empty((len(schedule), 3))
    for k, (ta, tb, holder) in enumerate(schedule):
        key = (ta, tb, holder)
        if key not in cache:
            pa = predict_scoring_prob(true_model, ta, tb, holder == "A")
            pb = predict_scoring_prob(true_model, tb, ta, holder == "B")
            if pa + pb >= 1.0:
                raise DomainError(f"{ta} vs {tb}: scoring rates {pa:.4f} + {pb:.4f} >= 1")
            cache[key] = (pa, pb, 1.0 - pa - pb)
        probs[k] = cache[key]
    counts = gen.multinomial(trials, probs) if len(schedule) else np.zeros((0, 3), dtype=int)
    return [MatchRecord(f"m{k:06d}", ta, tb, holder, int(c[0]), int(c[1]))
            for k, ((ta, tb, holder), c) in enumerate(zip(schedule, counts))]
