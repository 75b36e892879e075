"""Command-line interface: ``matchvg <command> [options]``.

Commands
--------
calibrate   fit the scoring-rate GLM to a match CSV
predict     outcome probabilities for one fixture
simulate    Monte Carlo report for one fixture (fixed n or VG)
synthesize  write a synthetic match CSV drawn from a model
rate        bond-style team grades from a model
vg-check    kurtosis gate on a column of points differences

Numbers go to stdout as ``key: value`` lines with 7 significant figures;
the resolved configuration and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .calibration import (FittedModel, expand_records, load_matches, load_reference_model,
                          random_schedule, rate_teams, synthesize_dataset, write_matches)
from .calibration.estimator import ScoringRateGLM
from .errors import MatchVGError
from .forecast import METHODS, forecast, match_params
from .match import CURLING_TRIALS, MatchParams
from .probcore import RngStream
from .simulator import monte_carlo_fixed_n, monte_carlo_vg
from .vg import KURTOSIS_GATE, GammaTrialPrior, sample_vg_match_diff, vg_gate

logger = logging.getLogger("matchvg")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.7g}"
    return str(x)


def emit(out, key, value):
    out.write(f"{key}: {fmt(value)}\n")


def _load_model(args):
    if args.model:
        return FittedModel.load(args.model)
    return load_reference_model()


def _prior(args, required):
    if args.lam is None or args.n_hat is None:
        if required:
            raise UsageError("--lambda and --n-hat are required for the VG method")
        return None
    return GammaTrialPrior(args.lam, args.n_hat)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_calibrate(args, out):
    if not args.input:
        raise UsageError("--input is required")
    records = load_matches(args.input)
    rows = expand_records(records)
    logger.info("loaded %d matches (%d observations)", len(records), len(rows))
    est = ScoringRateGLM(stepwise=args.stepwise == "on")
    est.fit_matches(records)
    model = est.model_
    if args.output:
        model.save(args.output)
        logger.info("model written to %s", args.output)
    out.write(model.coefficient_table() + "\n")
    emit(out, "deviance", model.deviance)
    emit(out, "aic", model.aic)
    emit(out, "observations", model.n_obs)
    return 0


def cmd_predict(args, out):
    for flag in ("team", "opponent", "lsfe"):
        if not getattr(args, flag):
            raise UsageError(f"--{flag} is required")
    model = _load_model(args)
    prior = _prior(args, required=args.method == "vg")
    fc = forecast(model, args.team, args.opponent, args.lsfe, method=args.method, prior=prior,
                  n_sims=args.sims, seed=args.seed, strict_paper_text=args.strict_paper_text,
                  workers=args.workers)
    emit(out, "method", fc.method)
    emit(out, "p_team", fc.p_team)
    emit(out, "p_opponent", fc.p_opponent)
    emit(out, "win_after_10", fc.win_after_regulation)
    emit(out, "draw", fc.draw)
    emit(out, "loss_after_10", fc.loss_after_regulation)
    emit(out, "overall_win", fc.overall_win)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(fc.to_dict(), fh, indent=2)
    return 0


def _fixture_params(args):
    if args.p_x is not None or args.p_y is not None:
        if args.p_x is None or args.p_y is None:
            raise UsageError("--p-x and --p-y go together")
        return MatchParams(args.p_x, args.p_y)
    if args.team and args.opponent and args.lsfe:
        return match_params(_load_model(args), args.team, args.opponent, args.lsfe)
    raise UsageError("give --p-x/--p-y or --team/--opponent/--lsfe")


def cmd_simulate(args, out):
    params = _fixture_params(args)
    if args.method == "vg":
        prior = _prior(args, required=True)
        rep = monte_carlo_vg(params, prior, args.mode, args.sims, args.seed, workers=args.workers)
    elif args.method in ("mc", "gaussian", "exact"):
        rep = monte_carlo_fixed_n(params, args.n, args.sims, args.seed,
                                  allocate_ties=not args.count_draws, workers=args.workers)
    logger.info("simulation took %.3fs", rep.elapsed)
    emit(out, "n_sims", rep.n_sims)
    emit(out, "seed", rep.seed)
    for key in ("win_x_hat", "draw_hat", "win_y_hat"):
        emit(out, key, getattr(rep, key))
    for key, se in rep.standard_errors.items():
        emit(out, f"se_{key}", se)
    emit(out, "sample_kurtosis_of_diff", rep.sample_kurtosis_of_diff)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json() + "\n")
    if args.diffs_output:
        gen = RngStream(args.seed, 1 << 20).generator()
        if args.method == "vg":
            diffs = sample_vg_match_diff(params, prior, gen, mode=args.mode, size=args.sims)
        else:
            c = gen.multinomial(args.n, [params.p_x, params.p_y, params.p_none], size=args.sims)
            diffs = c[:, 0] - c[:, 1]
        with open(args.diffs_output, "w", encoding="utf-8") as fh:
            fh.write("diff\n")
            for d in np.rint(diffs).astype(int):
                fh.write(f"{d}\n")
    return 0


def cmd_synthesize(args, out):
    if not args.output:
        raise UsageError("--output is required")
    model = _load_model(args)
    teams = model.known_teams()
    schedule = random_schedule(teams, args.matches, RngStream(args.seed, 0))
    records = synthesize_dataset(model, schedule, RngStream(args.seed, 1))
    write_matches(records, args.output)
    emit(out, "matches", len(records))
    emit(out, "teams", len(teams))
    return 0


def cmd_rate(args, out):
    model = _load_model(args)
    level = {"above": "above average", "average": "average", "below": "below average"}
    for r in rate_teams(model):
        out.write(f"{r.team}\t{r.grade}\t{level[r.attack]} attack, {level[r.defence]} defence\n")
    return 0


def _read_diffs(path):
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            try:
                values.append(int(cell))
            except ValueError:
                if line_no == 1 and not values:
                    continue  # header
                raise UsageError(f"line {line_no}: not an integer points difference: {cell!r}")
    return values


def cmd_vg_check(args, out):
    if not args.input:
        raise UsageError("--input is required")
    diffs = _read_diffs(args.input)
    if len(diffs) < 4:
        raise UsageError(f"need at least 4 points differences, got {len(diffs)}")
    kurt, recommended = vg_gate(diffs)
    emit(out, "observations", len(diffs))
    emit(out, "kurtosis", kurt)
    emit(out, "threshold", KURTOSIS_GATE)
    out.write("verdict: " + ("VG recommended" if recommended else "VG not recommended") + "\n")
    return 0


COMMANDS = {
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "rate": cmd_rate,
    "vg-check": cmd_vg_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matchvg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--model", help="model JSON (default: bundled reference coefficients)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=METHODS, default="gaussian")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--n-hat", dest="n_hat", type=float)
    common.add_argument("--stepwise", choices=("on", "off"), default="on")
    common.add_argument("--strict-paper-text", action="store_true",
                        help="VG method: report win = VG(0.5) as printed")
    common.add_argument("--sims", type=int, default=100_000)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--team")
    common.add_argument("--opponent")
    common.add_argument("--lsfe", help="name of the team holding Last Stone First End")
    common.add_argument("--p-x", dest="p_x", type=float)
    common.add_argument("--p-y", dest="p_y", type=float)
    common.add_argument("--n", type=int, default=CURLING_TRIALS)
    common.add_argument("--mode", choices=("continuous", "discrete"), default="continuous")
    common.add_argument("--count-draws", action="store_true",
                        help="simulate: report regulation draws instead of sudden death")
    common.add_argument("--diffs-output", help="simulate: write the points differences as CSV")
    common.add_argument("--matches", type=int, default=583)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s")
    logger.info("config: %s", json.dumps(vars(args), sort_keys=True))
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.error(str(exc))
    except (MatchVGError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
