"""One check per acceptance criterion.

Each test appends a ``PASS``/``FAIL`` line to ``REPORT`` (printed in the
pytest terminal summary and, with ``-s``, as it runs) before asserting.
"""

import math
import subprocess
import sys
import time
from itertools import product

import numpy as np
from scipy import integrate, stats

from matchvg.calibration import (build_design, expand_records, fit_glm_binomial_logit,
                                 load_reference_model, random_schedule, rate_teams,
                                 stepwise_select, synthesize_dataset)
from matchvg.forecast import forecast
from matchvg.match import MatchParams, exact_outcomes, gaussian_outcomes, simulate_matches
from matchvg.probcore import RngStream, bessel_k
from matchvg.vg import (GammaTrialPrior, VGParams, sample_vg_match_diff, t_kurtosis, vg_cdf,
                        vg_match_outcomes, vg_params_from_match, vg_params_from_mixture, vg_pdf)

REPORT = []
SWEDEN_LSFE = MatchParams(0.08160028, 0.06380454)


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


def test_01_golden_forecast():
    t0 = time.perf_counter()
    fc = forecast(load_reference_model(), "Sweden", "Canada", "Sweden")
    elapsed = time.perf_counter() - t0
    want = dict(p_team=0.08160028, p_opponent=0.06380454, win_after_regulation=0.6068481,
                draw=0.1069907, overall_win=0.6668906)
    gaps = {k: abs(getattr(fc, k) - v) for k, v in want.items()}
    ok = max(gaps.values()) <= 1e-6 and elapsed < 1.0
    record(1, ok, f"Sweden holding LSFE, max gap {max(gaps.values()):.2e}, {elapsed:.3f}s")


def test_02_second_scenario():
    fc = forecast(load_reference_model(), "Sweden", "Canada", "Canada")
    gap = max(abs(fc.p_team - 0.07258789), abs(fc.p_opponent - 0.07181085))
    record(2, gap <= 1e-6, f"Canada holding LSFE, p_S={fc.p_team:.8f} p_C={fc.p_opponent:.8f}")


def test_03_gate_constant():
    k = t_kurtosis(121)
    gap = abs(k - 357 / 117)
    record(3, gap <= 1e-9 and abs(k - 3.051282) < 5e-7, f"t_kurtosis(121) = {k:.9f}")


def test_04_covariance_law():
    t0 = time.perf_counter()
    sx, sy, _ = simulate_matches(MatchParams(0.1, 0.1), 80, 10 ** 5, RngStream(404))
    elapsed = time.perf_counter() - t0
    # empirical SE of the sample covariance from the products of centred scores
    prod = (sx - sx.mean()) * (sy - sy.mean())
    cov, se = prod.sum() / (sx.size - 1), prod.std(ddof=1) / math.sqrt(sx.size)
    record(4, abs(cov + 0.8) < 3 * se and elapsed < 10,
           f"cov {cov:.4f} vs -0.8, 3 SE = {3 * se:.4f}, {elapsed:.2f}s")


def test_05_gaussian_accuracy():
    t0 = time.perf_counter()
    grid = np.round(np.arange(0.02, 0.1501, 0.01), 2)
    worst = 0.0
    for p, q in product(grid, grid):
        g = gaussian_outcomes(MatchParams(p, q), 80)
        e = exact_outcomes(MatchParams(p, q), 80)
        worst = max(worst, abs(g.win_x - e.win_x), abs(g.draw - e.draw))
    elapsed = time.perf_counter() - t0
    record(5, worst <= 0.02 and elapsed < 30, f"worst win/draw gap {worst:.5f} over {grid.size ** 2} "
           f"pairs, {elapsed:.2f}s")


def _mixture_pdf(x, drift, sigma2, lam, n_hat):
    g = stats.gamma(lam, scale=n_hat / lam)
    f = lambda n: g.pdf(n) * stats.norm.pdf(x, n * drift, math.sqrt(n * sigma2))
    cuts = [0.0, 1e-6, 1e-3, 0.1, n_hat / 4, n_hat, 4 * n_hat, g.ppf(1 - 1e-17) + 10 * n_hat]
    return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-11, limit=400)[0]
               for a, b in zip(cuts[:-1], cuts[1:]))


def test_06_vg_representation():
    t0 = time.perf_counter()
    mixtures = [(0.0177957, 0.163477, 4.0, 80.0), (0.05, 0.2, 1.0, 20.0), (-0.1, 0.5, 0.8, 10.0)]
    worst_rel = 0.0
    for (drift, sigma2, lam, n_hat), x in product(mixtures, (-2.0, 0.5, 3.0)):
        vg = vg_params_from_mixture(drift, sigma2, GammaTrialPrior(lam, n_hat))
        want = _mixture_pdf(x, drift, sigma2, lam, n_hat)
        worst_rel = max(worst_rel, abs(vg_pdf(vg, x) / want - 1))
    worst_norm = 0.0
    for lam, alpha, skew in product((0.8, 1.0, 4.0), (0.5, 2.0), (0.3,)):
        vg = VGParams(alpha=alpha, beta=skew * alpha, lam=lam)
        f = lambda x: float(vg_pdf(vg, x))
        total = sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
                    for a, b in ((-np.inf, -1), (-1, 0), (0, 1), (1, np.inf)))
        worst_norm = max(worst_norm, abs(total - 1))
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-6 and worst_norm <= 1e-6 and elapsed < 30
    record(6, ok, f"pdf vs mixture rel {worst_rel:.1e} (9 points), normalisation {worst_norm:.1e} "
           f"(6 sets), {elapsed:.2f}s")


def test_07_vg_sampling():
    t0 = time.perf_counter()
    ks = []
    for lam in (1.0, 2.5, 4.0):
        prior = GammaTrialPrior(lam, 80)
        draws = sample_vg_match_diff(SWEDEN_LSFE, prior, RngStream(707, int(lam * 10)), size=10 ** 5)
        vg = vg_params_from_match(SWEDEN_LSFE, prior)
        ks.append(stats.kstest(draws, lambda x: vg_cdf(vg, x)).statistic)
    elapsed = time.perf_counter() - t0
    record(7, max(ks) < 0.01 and elapsed < 30,
           "KS " + ", ".join(f"{d:.4f}" for d in ks) + f", {elapsed:.2f}s")


def test_08_degeneracy():
    vg = vg_match_outcomes(SWEDEN_LSFE, GammaTrialPrior(1e6, 80)).as_tuple()
    g = gaussian_outcomes(SWEDEN_LSFE, 80).as_tuple()
    gap = max(abs(a - b) for a, b in zip(vg, g))
    record(8, gap <= 0.005, f"lambda=1e6 vs Gaussian, max gap {gap:.2e}")


def test_09_bessel():
    closed = max(abs(bessel_k(0.5, x) / (math.sqrt(math.pi / (2 * x)) * math.exp(-x)) - 1)
                 for x in (0.1, 1.0, 10.0))
    worst = 0.0
    for lam, gam, delta in product((0.75, 1.0, 2.5), (0.5, 1.0, 3.0), (0.5, 1.0, 3.0)):
        f = lambda x: x ** (lam - 1) * math.exp(-(gam * gam * x + delta * delta / x) / 2)
        lhs = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                  for a, b in ((0, 1), (1, np.inf)))
        rhs = 2 * bessel_k(lam, delta * gam) * gam ** (-lam) * delta ** lam
        worst = max(worst, abs(rhs / lhs - 1))
    record(9, closed <= 1e-10 and worst <= 1e-7,
           f"K_1/2 rel {closed:.1e}, integral identity rel {worst:.1e} (27 points)")


def test_10_glm_recovery():
    t0 = time.perf_counter()
    truth = load_reference_model()
    sched = random_schedule(truth.known_teams(), 10 ** 4, RngStream(1010, 0))
    rows = expand_records(synthesize_dataset(truth, sched, RngStream(1010, 1)))
    fit = fit_glm_binomial_logit(build_design(rows, truth.terms))
    checked = ["lsfe", "team:Sweden", "opponent:Sweden", "team:Canada", "opponent:Canada"]
    z = {t: (fit.coef[t] - truth.coef[t]) / dict(zip(fit.terms, fit.standard_errors))[t]
         for t in checked}
    step = stepwise_select(rows).coef
    signs = all(t in step and np.sign(step[t]) == np.sign(truth.coef[t])
                for t in ("lsfe", "team:Sweden", "opponent:Sweden"))
    elapsed = time.perf_counter() - t0
    ok = max(abs(v) for v in z.values()) < 3 and signs and elapsed < 120
    record(10, ok, "z " + ", ".join(f"{t}={v:+.2f}" for t, v in z.items())
           + f"; stepwise keeps signed terms: {signs}; {elapsed:.1f}s")


def test_11_ratings():
    grades = {r.team: r.grade for r in rate_teams(load_reference_model())}
    want = {"Sweden": "AAA", "Japan": "AA+", "Russia": "AA", "Denmark": "AA-"}
    got = {t: grades.get(t) for t in want}
    record(11, got == want, "grades " + ", ".join(f"{t} {g}" for t, g in got.items()))


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "matchvg.cli", *map(str, args)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def test_12_determinism(tmp_path):
    fixture = ("--team", "Sweden", "--opponent", "Canada", "--lsfe", "Sweden", "--seed", 12)
    commands = [
        ("simulate", *fixture, "--sims", 200000),
        ("simulate", *fixture, "--sims", 200000, "--method", "vg", "--lambda", 2, "--n-hat", 80),
        ("predict", *fixture, "--method", "mc", "--sims", 200000),
    ]
    same = True
    for cmd in commands:
        outs = {_cli(*cmd, "--workers", 1), _cli(*cmd, "--workers", 1), _cli(*cmd, "--workers", 4)}
        same &= len(outs) == 1
    files = []
    for k in range(2):
        path = tmp_path / f"syn{k}.csv"
        _cli("synthesize", "--matches", 300, "--seed", 12, "--output", path)
        files.append(path.read_bytes())
    same &= files[0] == files[1]
    record(12, same, f"{len(commands)} seeded commands x (2 runs, 1 vs 4 threads) and synthesize "
           "identical" if same else "seeded outputs differ")
