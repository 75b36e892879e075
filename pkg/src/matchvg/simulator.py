"""Seeded Monte Carlo harness for fixed-n and Variance Gamma matches.

Simulations are split into fixed-size chunks; chunk ``k`` draws from
``RngStream(seed, k)`` and results are merged in chunk order, so a report
depends only on the seed, never on the number of worker threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import json

import numpy as np

from .errors import DomainError
from .match import MatchParams, simulate_matches
from .probcore import RngStream
from .vg import GammaTrialPrior, sample_kurtosis, sample_vg_match_diff

CHUNK_SIZE = 1 << 16


@dataclass
class SimulationReport:
    n_sims: int
    win_x_hat: float
    draw_hat: float
    win_y_hat: float
    standard_errors: dict
    sample_kurtosis_of_diff: float
    seed: int
    mean_diff: float = 0.0
    var_diff: float = 0.0
    cov_xy: float = None
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("elapsed")
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2)


def _chunks(n_sims, chunk_size):
    sizes = [chunk_size] * (n_sims // chunk_size)
    if n_sims % chunk_size:
        sizes.append(n_sims % chunk_size)
    return sizes


def _run(work, sizes, seed, workers):
    jobs = [(k, size, RngStream(seed, k)) for k, size in enumerate(sizes)]
    if workers <= 1:
        return [work(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: work(*job), jobs))


def _report(n_sims, wins, draws, losses, diffs, seed, t0, cov=None):
    est = [wins / n_sims, draws / n_sims, losses / n_sims]
    se = {name: math.sqrt(p * (1 - p) / n_sims) for name, p in zip(("win_x", "draw", "win_y"), est)}
    kurt = sample_kurtosis(diffs) if diffs.size >= 4 and np.ptp(diffs) > 0 else float("nan")
    return SimulationReport(
        n_sims=n_sims,
        win_x_hat=est[0], draw_hat=est[1], win_y_hat=est[2],
        standard_errors=se,
        sample_kurtosis_of_diff=kurt,
        seed=seed,
        mean_diff=float(diffs.mean()),
        var_diff=float(diffs.var()),
        cov_xy=cov,
        elapsed=time.perf_counter() - t0,
    )


def monte_carlo_fixed_n(params: MatchParams, n: int, n_sims: int, seed: int,
                        allocate_ties: bool = True, workers: int = 1,
                        chunk_size: int = CHUNK_SIZE) -> SimulationReport:
    """Simulate ``n_sims`` matches of ``n`` trials.

    With ``allocate_ties`` level matches go to sudden death and
    ``draw_hat`` is 0; otherwise draws are counted.  ``cov_xy`` is the
    sample covariance of the two scores.
    """
    if n_sims < 1:
        raise DomainError("n_sims must be at least 1")
    t0 = time.perf_counter()

    def work(k, size, stream):
        sx, sy, xw = simulate_matches(params, n, size, stream)
        return sx, sy, xw

    parts = _run(work, _chunks(n_sims, chunk_size), seed, workers)
    sx = np.concatenate([p[0] for p in parts])
    sy = np.concatenate([p[1] for p in parts])
    xw = np.concatenate([p[2] for p in parts])
    diffs = (sx - sy).astype(float)
    if allocate_ties:
        wins, draws = int(xw.sum()), 0
    else:
        wins, draws = int((sx > sy).sum()), int((sx == sy).sum())
    losses = n_sims - wins - draws
    cov = float(np.cov(sx, sy)[0, 1]) if n_sims > 1 else float("nan")
    return _report(n_sims, wins, draws, losses, diffs, seed, t0, cov)


def monte_carlo_vg(params: MatchParams, prior: GammaTrialPrior, mode: str, n_sims: int,
                   seed: int, workers: int = 1, chunk_size: int = CHUNK_SIZE) -> SimulationReport:
    """Simulate points differences with a gamma-distributed trial count.

    A difference in the open band (-0.5, 0.5) is a draw.
    """
    if n_sims < 1:
        raise DomainError("n_sims must be at least 1")
    t0 = time.perf_counter()

    def work(k, size, stream):
        return np.asarray(sample_vg_match_diff(params, prior, stream, mode=mode, size=size), dtype=float)

    diffs = np.concatenate(_run(work, _chunks(n_sims, chunk_size), seed, workers))
    wins = int((diffs >= 0.5).sum())
    losses = int((diffs <= -0.5).sum())
    draws = n_sims - wins - losses
    return _report(n_sims, wins, draws, losses, diffs, seed, t0)
