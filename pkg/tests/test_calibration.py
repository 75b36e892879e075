import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchvg.calibration import (GRADE_ORDER, FittedModel, MatchRecord, ObservationRow,
                                 build_design, expand_records, fit_glm_binomial_logit,
                                 full_term_set, grade_for, load_matches, load_reference_model,
                                 predict_scoring_prob, random_schedule, rate_teams,
                                 stepwise_select, synthesize_dataset, write_matches)
from matchvg.calibration.glm import expit, logit
from matchvg.errors import ConvergenceError, DomainError, IngestionError, SingularFitError
from matchvg.probcore import RngStream

HEADER = "match_id,team_a,team_b,lsfe_holder,score_a,score_b\n"


@pytest.fixture(scope="module")
def ref_model():
    return load_reference_model()


def _truth(terms, coefs, teams):
    k = len(terms)
    return FittedModel(terms=list(terms), coefficients=list(coefs), standard_errors=[0.0] * k,
                       z_values=[0.0] * k, p_values=[0.0] * k, teams=list(teams))


# --- ingestion -----------------------------------------------------------------

def test_load_three_rows(tmp_path):
    text = HEADER + "m1,Sweden,Canada,A,6,4\nm2,Japan,Korea,b,3,5\nm3,USA,Italy,B,7,7\n"
    path = tmp_path / "m.csv"
    path.write_text(text)
    recs = load_matches(path)
    assert len(recs) == 3
    assert recs[1] == MatchRecord("m2", "Japan", "Korea", "B", 3, 5)
    assert load_matches(text) == recs
    assert load_matches(io.StringIO(text)) == recs
    assert load_matches(str(path)) == recs


def test_load_reports_line_numbers():
    text = HEADER + "m1,Sweden,Canada,A,x,4\nm2,Japan,Japan,A,1,1\nm1,USA,Italy,C,-1,99\n"
    with pytest.raises(IngestionError) as info:
        load_matches(text)
    lines = {ln for ln, _ in info.value.problems}
    assert 2 in lines and 3 in lines and 4 in lines
    assert any("score_a" in msg and ln == 2 for ln, msg in info.value.problems)
    assert "line 2" in str(info.value)
    assert len([p for p in info.value.problems if p[0] == 4]) == 4  # dup id, holder, two scores


def test_load_missing_column():
    with pytest.raises(IngestionError) as info:
        load_matches("match_id,team_a,team_b,score_a,score_b\nm1,A,B,1,2\n")
    assert "lsfe_holder" in str(info.value)


def test_write_then_read_roundtrip(tmp_path):
    recs = [MatchRecord("a", "X", "Y", "A", 3, 2), MatchRecord("b", "Y", "Z", "B", 0, 9)]
    write_matches(recs, tmp_path / "out.csv")
    assert load_matches(tmp_path / "out.csv") == recs


@settings(max_examples=25)
@given(st.integers(0, 600))
def test_expansion_doubles(n):
    sched = random_schedule(["A", "B", "C"], n, RngStream(1))
    recs = synthesize_dataset(_truth(["intercept"], [-2.0], "ABC"), sched, RngStream(2))
    rows = expand_records(recs)
    assert len(rows) == 2 * len(recs)


def test_583_matches_give_1166_rows(ref_model):
    sched = random_schedule(ref_model.known_teams(), 583, RngStream(3))
    assert len(expand_records(synthesize_dataset(ref_model, sched, RngStream(4)))) == 1166


def test_expansion_orientation():
    rows = expand_records([MatchRecord("m", "S", "C", "B", 5, 3)])
    assert rows == [ObservationRow("S", "C", 0, 5, 80), ObservationRow("C", "S", 1, 3, 80)]


# --- design --------------------------------------------------------------------

def test_design_two_teams():
    rows = expand_records([MatchRecord("1", "A", "B", "A", 4, 2), MatchRecord("2", "B", "A", "A", 1, 6)])
    d = build_design(rows)
    assert d.matrix.shape == (4, 6)
    assert d.terms == ["intercept", "lsfe", "team:A", "team:B", "opponent:A", "opponent:B"]
    assert d.n_variables == 6


def test_design_counts_and_column_sums(ref_model):
    sched = random_schedule(ref_model.known_teams(), 400, RngStream(5))
    rows = expand_records(synthesize_dataset(ref_model, sched, RngStream(6)))
    d = build_design(rows)
    n_teams = len(d.teams)
    assert d.matrix.shape[1] == 2 + 2 * n_teams
    appear = {t: 0 for t in d.teams}
    for r in rows:
        appear[r.team] += 1
    for t in d.teams:
        assert d.matrix[:, d.terms.index("team:" + t)].sum() == appear[t]
    assert len(full_term_set(ref_model.known_teams())) == 44


def test_design_needs_two_teams():
    with pytest.raises(SingularFitError):
        build_design([ObservationRow("A", "A", 0, 1, 80)])
    with pytest.raises(DomainError):
        build_design([])


# --- GLM -------------------------------------------------------------------------

def test_intercept_only_is_aggregate_log_odds():
    rows = expand_records([MatchRecord(str(k), "A", "B", "A", s, t)
                           for k, (s, t) in enumerate([(5, 3), (7, 2), (1, 9), (4, 4)])])
    m = fit_glm_binomial_logit(build_design(rows, ["intercept"]))
    f = sum(r.successes for r in rows) / sum(r.trials for r in rows)
    assert m.coefficients[0] == pytest.approx(float(logit(f)), abs=1e-10)
    assert m.iterations < 20


def _small_two_param_set():
    rng = RngStream(7).generator()
    recs = []
    for k in range(60):
        holder = "AB"[k % 2]
        pa = expit(-2.3 + (0.4 if holder == "A" else 0.0))
        pb = expit(-2.3 + (0.4 if holder == "B" else 0.0))
        c = rng.multinomial(80, [pa, pb, 1 - pa - pb])
        recs.append(MatchRecord(str(k), "A", "B", holder, int(c[0]), int(c[1])))
    return expand_records(recs)


def test_two_parameter_fit_matches_grid_search():
    rows = _small_two_param_set()
    d = build_design(rows, ["intercept", "lsfe"])
    fit = fit_glm_binomial_logit(d)
    y, m, x = d.successes, d.trials, d.matrix[:, 1]

    def loglik(b0, b1):
        eta = b0[..., None] + b1[..., None] * x
        return np.sum(y * eta - m * np.logaddexp(0, eta), axis=-1)

    # brute-force search, zooming a 201 x 201 grid around the best point
    c0, c1, half = -2.0, 0.0, 2.0
    for _ in range(8):
        g0 = np.linspace(c0 - half, c0 + half, 201)
        g1 = np.linspace(c1 - half, c1 + half, 201)
        ll = loglik(*np.meshgrid(g0, g1, indexing="ij"))
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        c0, c1, half = g0[i], g1[j], half / 20
    assert fit.coefficients == pytest.approx([c0, c1], abs=1e-4)


def test_score_equations_hold(ref_model):
    sched = random_schedule(ref_model.known_teams(), 1500, RngStream(8))
    d = build_design(expand_records(synthesize_dataset(ref_model, sched, RngStream(9))), ref_model.terms)
    fit = fit_glm_binomial_logit(d)
    p = expit(d.matrix @ np.array(fit.coefficients))
    score = d.matrix.T @ (d.successes - d.trials * p)
    assert np.max(np.abs(score)) < 1e-6
    assert len(fit.p_values) == len(fit.terms)
    z = np.array(fit.coefficients) / np.array(fit.standard_errors)
    np.testing.assert_allclose(fit.z_values, z)


def test_offset_and_raw_matrix_interface():
    X = np.column_stack([np.ones(6), [0, 1, 0, 1, 0, 1]])
    y = np.array([3, 9, 4, 8, 2, 10])
    m = np.full(6, 40)
    full = fit_glm_binomial_logit(X, response=(y, m))
    off = full.coefficients[1] * X[:, 1]
    part = fit_glm_binomial_logit(X[:, :1], response=(y, m), offset=off, terms=["intercept"])
    assert part.coefficients[0] == pytest.approx(full.coefficients[0], abs=1e-9)
    with pytest.raises(DomainError):
        fit_glm_binomial_logit(X)


def test_deviance_and_aic_refer_to_raw_rows():
    rows = _small_two_param_set()
    d = build_design(rows, ["intercept", "lsfe"])
    fit = fit_glm_binomial_logit(d)
    p = expit(d.matrix @ np.array(fit.coefficients))
    y, m = d.successes, d.trials
    lg = np.vectorize(math.lgamma)
    ll = np.sum(lg(m + 1) - lg(y + 1) - lg(m - y + 1) + y * np.log(p) + (m - y) * np.log1p(-p))
    assert fit.aic == pytest.approx(-2 * ll + 4, rel=1e-12)
    assert fit.n_obs == len(rows)


def test_rank_deficient_full_design_names_columns(ref_model):
    sched = random_schedule(ref_model.known_teams(), 300, RngStream(10))
    d = build_design(expand_records(synthesize_dataset(ref_model, sched, RngStream(11))))
    with pytest.raises(SingularFitError) as info:
        fit_glm_binomial_logit(d)
    assert info.value.columns
    assert all(c in d.terms for c in info.value.columns)
    ridge = fit_glm_binomial_logit(d, ridge=1.0)
    assert np.all(np.isfinite(ridge.coefficients))


def test_separation_detected():
    recs = [MatchRecord(str(k), "Z", "B", "A", 0, 7) for k in range(10)]
    recs += [MatchRecord(f"x{k}", "B", "C", "A", 6, 5) for k in range(10)]
    d = build_design(expand_records(recs), ["intercept", "team:Z"])
    with pytest.raises(ConvergenceError):
        fit_glm_binomial_logit(d)


def test_recovery_rmse_shrinks(ref_model):
    rmse = []
    for n_matches in (1000, 10000):
        sched = random_schedule(ref_model.known_teams(), n_matches, RngStream(12, n_matches))
        d = build_design(expand_records(synthesize_dataset(ref_model, sched, RngStream(13, n_matches))),
                         ref_model.terms)
        fit = fit_glm_binomial_logit(d)
        err = np.array(fit.coefficients) - np.array(ref_model.coefficients)
        rmse.append(math.sqrt(np.mean(err ** 2)))
        z = err / np.array(fit.standard_errors)
        assert np.mean(np.abs(z) < 3) >= 0.95
    assert rmse[1] < rmse[0] / 2


# --- stepwise --------------------------------------------------------------------

def test_stepwise_without_team_effects():
    # lsfe is always kept; spurious dummies enter at roughly AIC's nominal rate
    # (P(chi2_1 > 2) = 0.157 each), so "no team terms at all" is not guaranteed
    teams = ["T1", "T2", "T3", "T4", "T5"]
    truth = _truth(["intercept", "lsfe"], [-2.5, 0.3], teams)
    spurious = []
    for r in range(20):
        recs = synthesize_dataset(truth, random_schedule(teams, 800, RngStream(100, r)), RngStream(200, r))
        rows = expand_records(recs)
        model = stepwise_select(rows)
        assert "lsfe" in model.terms and model.coef["lsfe"] > 0
        base = fit_glm_binomial_logit(build_design(rows, ["intercept", "lsfe"]))
        assert model.aic <= base.aic
        spurious.append(sum(t.startswith(("team:", "opponent:")) for t in model.terms))
    assert np.mean(spurious) < 0.157 * 10 * 1.5
    assert min(spurious) == 0


def test_stepwise_finds_real_effects():
    teams = ["A", "B", "C", "D"]
    truth = _truth(["intercept", "lsfe", "team:A", "opponent:B"], [-2.5, 0.2, 0.5, -0.5], teams)
    recs = synthesize_dataset(truth, random_schedule(teams, 1500, RngStream(14)), RngStream(15))
    model = stepwise_select(expand_records(recs))
    assert model.coef["team:A"] > 0 and model.coef["opponent:B"] < 0
    assert model.terms[:2] == ["intercept", "lsfe"]


def test_stepwise_arguments():
    rows = _small_two_param_set()
    with pytest.raises(DomainError):
        stepwise_select(rows, criterion="bic")
    with pytest.raises(DomainError):
        stepwise_select(rows, scope=["intercept", "team:Nobody"])


# --- fixture, prediction, serialisation ----------------------------------------

def test_reference_predictions(ref_model):
    p = predict_scoring_prob(ref_model, "Sweden", "Canada", True)
    assert float(logit(p)) == pytest.approx(-2.4208, abs=1e-12)
    assert p == pytest.approx(0.08160028, abs=1e-8)
    assert predict_scoring_prob(ref_model, "Canada", "Sweden", False) == pytest.approx(0.06380454, abs=1e-8)
    assert predict_scoring_prob(ref_model, "Canada", "Sweden", True) == pytest.approx(0.07181085, abs=1e-8)
    assert predict_scoring_prob(ref_model, "Sweden", "Canada", False) == pytest.approx(0.07258789, abs=1e-8)


def test_unknown_team_logs_warning(ref_model, caplog):
    with caplog.at_level("WARNING"):
        p = predict_scoring_prob(ref_model, "Atlantis", "Canada", False)
    assert "Atlantis" in caplog.text
    assert p == pytest.approx(float(expit(ref_model.coef["intercept"] + ref_model.coef["opponent:Canada"])))


def test_model_roundtrip(tmp_path, ref_model):
    assert FittedModel.from_dict(ref_model.to_dict()) == ref_model
    ref_model.save(tmp_path / "m.json")
    assert FittedModel.load(tmp_path / "m.json") == ref_model
    data = json.loads(ref_model.to_json())
    data["bogus"] = 1
    with pytest.raises(DomainError):
        FittedModel.from_dict(data)
    text = ref_model.coefficient_table()
    assert "E.S.E." in text.splitlines()[0] and "t-value" in text.splitlines()[0]
    assert "-2.5033" in text


def test_fixture_shape(ref_model):
    assert len(ref_model.terms) == 22
    assert len(ref_model.known_teams()) == 21
    assert ref_model.coef["team:Sweden"] == pytest.approx(0.2870)
    assert ref_model.coef["opponent:Sweden"] == pytest.approx(-0.4832)


# --- ratings -------------------------------------------------------------------

def test_grade_lattice():
    assert grade_for("above", "above") == "AAA"
    assert grade_for("average", "above") == "AA+"
    assert grade_for("above", "average") == "AA"
    assert grade_for("average", "average") == "AA-"
    assert grade_for("below", "above") == "A+"
    assert grade_for("above", "below") == "A+"


def test_reference_grades(ref_model):
    grades = {r.team: r.grade for r in rate_teams(ref_model)}
    assert grades["Sweden"] == "AAA"
    assert grades["Japan"] == "AA+"
    assert grades["Russia"] == "AA"
    assert grades["Denmark"] == "AA-"
    assert sorted(t for t, g in grades.items() if g == "AAA") == [
        "Canada", "Italy", "Norway", "Scotland", "Sweden", "Switzerland", "USA"]
    # the bottom group holds exactly the teams with negative attack coefficients
    assert sorted(t for t, g in grades.items() if g == "A+") == ["China", "Finland", "New Zealand", "Poland"]
    ranks = [GRADE_ORDER.index(r.grade) for r in rate_teams(ref_model)]
    assert ranks == sorted(ranks)


def test_significance_filter_changes_grades(ref_model):
    strict = {r.team: r.grade for r in rate_teams(ref_model, significance_level=0.05)}
    assert strict["Sweden"] == "AAA"
    assert strict["Russia"] != "AA"  # its attack term has p = 0.09


# --- synthesis -------------------------------------------------------------------

def test_synth_intercept_only_mean():
    truth = _truth(["intercept"], [-2.0], ["A", "B"])
    recs = synthesize_dataset(truth, [("A", "B", "A")] * 20000, RngStream(16))
    want = 80 * float(expit(-2.0))
    for scores in ([r.score_a for r in recs], [r.score_b for r in recs]):
        assert abs(np.mean(scores) - want) < 3 * math.sqrt(want / len(recs))


def test_synth_sweden_outscores_canada(ref_model):
    recs = synthesize_dataset(ref_model, [("Sweden", "Canada", "A")] * 10000, RngStream(17))
    assert np.mean([r.score_a for r in recs]) > np.mean([r.score_b for r in recs])


def test_synth_deterministic(ref_model):
    sched = random_schedule(ref_model.known_teams(), 50, RngStream(18))
    assert synthesize_dataset(ref_model, sched, RngStream(19)) == synthesize_dataset(ref_model, sched, RngStream(19))
    assert random_schedule(ref_model.known_teams(), 50, RngStream(18)) == sched
