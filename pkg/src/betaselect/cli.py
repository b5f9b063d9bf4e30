"""Command-line interface: ``betaselect {fit,score-test,select,simulate,efficiency}``.

Exit status is 0 on success, 1 on a numerical failure (non-convergence,
singular information, no rankable candidate) and 2 on a usage or
configuration error.  A JSON file given with ``--config`` supplies default
values for any flag; flags on the command line win.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from .criteria import CriterionUndefined, parse_criterion, r2_fc, r2_lr
from .design import Dataset, ModelSpec, RankDeficiencyError, load_reading_skills, read_csv
from .distribution import DomainError
from .estimation import (ConvergenceError, EvaluationError, FitOptions, fit_mle, fit_null,
                         score_test_constant_dispersion, wald_table)
from .links import LINK_NAMES
from .selection import (SCHEMES, SearchSpace, SelectionError, enumerate_candidates, joint_select,
                        parse_scheme, recommend_scheme, two_step_select)
from .simulation import APPROACHES, DgpConfig, EfficiencyConfig, efficiency_experiment, run_frequency_experiment

log = logging.getLogger("betaselect")

# used when no --data is given: the bundled reading-accuracy data
READING_MEAN = ("x3", "x5", "x6")
READING_DISP = ("x2", "x3", "x4", "x5")
READING_POOL = ("x2", "x3", "x4", "x5", "x6")


class UsageError(Exception):
    """Bad flags or configuration; maps to exit status 2."""


class NumericalFailure(Exception):
    """Estimation or selection failed; maps to exit status 1."""


DEFAULTS = {
    "data": None, "response": "y", "mean_pool": None, "disp_pool": None,
    "mean_link": "logit", "disp_link": "logit", "criterion": None, "scheme": None,
    "approach": None, "model": 1, "n": None, "reps": 500, "seed": 2024, "threads": None,
    "out": None, "format": "text", "ref_dist": "normal", "information": "expected",
    "verbose": False,
}


def _split_list(text) -> list[str]:
    """Split on commas that are not inside parentheses."""
    return [t.strip() for t in re.split(r",(?![^()]*\))", str(text)) if t.strip()]


def _terms(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(str(t) for t in text)
    text = text.strip()
    if text in ("", "1", "-"):
        return ()
    return tuple(t.strip() for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="betaselect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON file of flag defaults (keys use underscores)")
        sp.add_argument("--out", help="directory for report files")
        sp.add_argument("--format", choices=("json", "csv", "text"), help="stdout format (default text)")
        sp.add_argument("--threads", type=int, help="worker processes (default: available cores)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("-v", "--verbose", action="store_true", default=None)
        if data:
            sp.add_argument("--data", help="CSV file with a header row (default: bundled reading data)")
            sp.add_argument("--response", help="response column (default y)")
            sp.add_argument("--mean-pool", help="comma-separated mean covariates ('1' for none)")
            sp.add_argument("--disp-pool", help="comma-separated dispersion covariates ('1' for none)")
            sp.add_argument("--mean-link", choices=LINK_NAMES)
            sp.add_argument("--disp-link", choices=LINK_NAMES)

    sp = sub.add_parser("fit", help="maximum likelihood fit; pools are the model terms")
    common(sp)
    sp.add_argument("--ref-dist", choices=("normal", "t"))

    sp = sub.add_parser("score-test", help="score test of constant dispersion")
    common(sp)
    sp.add_argument("--information", choices=("expected", "observed"))

    sp = sub.add_parser("select", help="covariate selection over the pools")
    common(sp)
    sp.add_argument("--criterion", help="criterion for a joint search, e.g. sicc or r2d:D3")
    sp.add_argument("--scheme", help=f"two-step scheme ({', '.join(SCHEMES)} or 'c1/c2')")

    sp = sub.add_parser("simulate", help="Monte Carlo correct-selection frequencies")
    common(sp, data=False)
    sp.add_argument("--model", type=int, help="DGP preset 1-4")
    sp.add_argument("--n", type=int, help="sample size (default 200)")
    sp.add_argument("--reps", type=int, help="replications (default 500)")
    sp.add_argument("--approach", choices=APPROACHES)
    sp.add_argument("--criterion", help="comma-separated criteria, or 'all'")
    sp.add_argument("--scheme", help="comma-separated two-step schemes")

    sp = sub.add_parser("efficiency", help="slope estimator under fixed vs varying dispersion")
    common(sp, data=False)
    sp.add_argument("--n", type=int, help="sample size (default 50)")
    sp.add_argument("--reps", type=int, help="replications (default 2000)")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional JSON config and explicit flags, then validate."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in cfg and val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    cfg["mean_pool"] = _terms(cfg["mean_pool"])
    cfg["disp_pool"] = _terms(cfg["disp_pool"])
    if cfg["format"] not in ("json", "csv", "text"):
        raise UsageError(f"unknown format {cfg['format']!r}")
    if cfg["ref_dist"] not in ("normal", "t"):
        raise UsageError("ref_dist must be normal or t")
    for key in ("mean_link", "disp_link"):
        if cfg[key] not in LINK_NAMES:
            raise UsageError(f"unknown {key.replace('_', '-')} {cfg[key]!r}")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise UsageError("--threads must be at least 1")
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    if cfg["reps"] is not None and cfg["reps"] < 1:
        raise UsageError("--reps must be at least 1")
    try:
        if cfg["criterion"] and cfg["criterion"] != "all":
            cfg["criteria"] = [parse_criterion(c) for c in _split_list(cfg["criterion"])]
        if cfg["scheme"]:
            cfg["schemes"] = [parse_scheme(s) for s in _split_list(cfg["scheme"])]
    except (KeyError, ValueError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from exc
    return cfg


def load_data(cfg) -> Dataset:
    if cfg["data"] is None:
        return load_reading_skills()
    try:
        return read_csv(cfg["data"], cfg["response"])
    except KeyError as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from exc
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {cfg['data']}: {exc}") from exc


def _check_columns(ds: Dataset, *pools):
    for pool in pools:
        missing = [t for t in pool if t not in ds.names]
        if missing:
            raise UsageError(f"column(s) not in data: {', '.join(missing)}")


def _default_terms(cfg, ds, mean_default, disp_default):
    bundled = cfg["data"] is None
    mean = cfg["mean_pool"] if cfg["mean_pool"] is not None else (mean_default if bundled else ds.names)
    disp = cfg["disp_pool"] if cfg["disp_pool"] is not None else (disp_default if bundled else ())
    _check_columns(ds, mean, disp)
    return mean, disp


def _write(cfg, name: str, text: str):
    if cfg["out"] is None:
        return
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def _emit(cfg, payload: dict, csv_text: str, text: str):
    fmt = cfg["format"]
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    elif fmt == "csv":
        print(csv_text, end="")
    else:
        print(text)


def cmd_fit(cfg) -> int:
    ds = load_data(cfg)
    mean, disp = _default_terms(cfg, ds, READING_MEAN, READING_DISP)
    spec = ModelSpec(mean, disp, cfg["mean_link"], cfg["disp_link"])
    if spec.k >= ds.n:
        raise UsageError(f"model has {spec.k} parameters but n = {ds.n}; need k < n")
    fit = fit_mle(ds, spec, FitOptions())
    if not fit.converged:
        raise NumericalFailure(f"fit did not converge: {fit.message}")
    null = fit if spec.k == 2 else fit_null(ds, spec)
    rows = wald_table(fit, cfg["ref_dist"])
    stats = {"r2_fc": r2_fc(ds.y, fit), "r2_lr": r2_lr(fit, null), "loglik": fit.loglik, "n": ds.n}
    payload = {"fit": fit.to_dict(), "null_loglik": null.loglik,
               "table": [r.__dict__ for r in rows], "ref_dist": cfg["ref_dist"], **stats}
    lines = [f"model: {spec.label()}  links: {spec.mean_link}/{spec.disp_link}  n = {ds.n}",
             f"{'parameter':<22}{'estimate':>11}{'std.err':>11}{'z':>9}{'p':>10}"]
    for r in rows:
        lines.append(f"{r.name:<22}{r.estimate:>11.4f}{r.std_error:>11.4f}{r.z:>9.3f}{r.p_value:>10.4f}")
    lines.append(f"loglik = {fit.loglik:.4f}   R2_FC = {stats['r2_fc']:.4f}   R2_LR = {stats['r2_lr']:.4f}")
    csv_text = "parameter,estimate,std_error,z,p_value\n" + "".join(
        f"{r.name},{r.estimate!r},{r.std_error!r},{r.z!r},{r.p_value!r}\n" for r in rows)
    text = "\n".join(lines)
    _write(cfg, "fit.json", json.dumps(payload, indent=2))
    _write(cfg, "fit_table.txt", text + "\n")
    _emit(cfg, payload, csv_text, text)
    return 0


def cmd_score_test(cfg) -> int:
    ds = load_data(cfg)
    mean, disp = _default_terms(cfg, ds, ("x2", "x3", "x4"), ("x2", "x3", "x4"))
    spec = ModelSpec(mean, disp, cfg["mean_link"], cfg["disp_link"])
    try:
        res = score_test_constant_dispersion(ds, spec, cfg["information"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    payload = {"spec": spec.to_dict(), "statistic": res.statistic, "df": res.df,
               "p_value": res.p_value, "information": cfg["information"]}
    text = (f"score test of constant dispersion against {spec.label()}\n"
            f"S = {res.statistic:.4f}  df = {res.df}  p = {res.p_value:.4g}  ({cfg['information']} information)")
    csv_text = f"statistic,df,p_value\n{res.statistic!r},{res.df},{res.p_value!r}\n"
    _write(cfg, "score_test.json", json.dumps(payload, indent=2))
    _emit(cfg, payload, csv_text, text)
    return 0


def cmd_select(cfg) -> int:
    ds = load_data(cfg)
    mean, disp = _default_terms(cfg, ds, READING_POOL, READING_POOL)
    space = SearchSpace(mean, disp, cfg["mean_link"], cfg["disp_link"])
    space.validate(ds)
    t0 = time.perf_counter()
    workers = cfg["threads"]
    if cfg.get("criteria") and not cfg.get("schemes"):
        if len(cfg["criteria"]) != 1:
            raise UsageError("select takes a single --criterion")
        report = joint_select(ds, space, cfg["criteria"][0], workers=workers)
    else:
        schemes = cfg.get("schemes") or [recommend_scheme(ds.n)]
        if len(schemes) != 1:
            raise UsageError("select takes a single --scheme")
        report = two_step_select(ds, space, schemes[0], workers=workers)
    elapsed = time.perf_counter() - t0
    joint_count = len(enumerate_candidates(mean)) * len(enumerate_candidates(disp))
    two_step_count = len(enumerate_candidates(mean)) + len(enumerate_candidates(disp))
    payload = report.to_dict()
    payload["cost"] = {"joint_fits": joint_count, "two_step_fits": two_step_count, "seconds": elapsed}
    text = (f"winner: {report.winner.label()}  ({report.scheme}, {report.criterion})\n"
            f"fits attempted: {report.fits_attempted}, converged: {report.fits_converged}, "
            f"excluded: {len(report.excluded)}\n"
            f"cost: joint search {joint_count} fits vs two-step {two_step_count} fits; took {elapsed:.2f} s")
    _write(cfg, "selection.json", json.dumps(payload, indent=2))
    _write(cfg, "ranking.csv", report.to_csv())
    _emit(cfg, payload, report.to_csv(), text)
    return 0


def cmd_simulate(cfg) -> int:
    try:
        dgp = DgpConfig.preset(int(cfg["model"]), cfg["n"] or 200, cfg["seed"])
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    approach = cfg["approach"] or ("two_step" if cfg.get("schemes") else "joint")
    if approach == "two_step":
        selectors = cfg.get("schemes") or [recommend_scheme(dgp.n)]
    elif cfg["criterion"] == "all":
        from .criteria import all_criteria
        selectors = all_criteria()
    else:
        selectors = cfg.get("criteria") or [parse_criterion("sicc")]
    t0 = time.perf_counter()
    table = run_frequency_experiment(dgp, approach, list(selectors), cfg["reps"], workers=cfg["threads"])
    payload = {"config": dgp.to_dict(), "approach": approach, "seconds": time.perf_counter() - t0,
               **table.to_dict()}
    lines = [f"Model {dgp.model_id}, n = {dgp.n}, {approach}, {cfg['reps']} replications, seed {dgp.seed}",
             f"true model: {dgp.true_spec.label()}"]
    for lab in table.labels:
        lines.append(f"  {lab:<32}{table.percent(lab, dgp.model_id, dgp.n):6.1f}%")
    _write(cfg, "frequencies.json", json.dumps(payload, indent=2))
    _write(cfg, "frequencies.csv", table.to_csv())
    _emit(cfg, payload, table.to_csv(), "\n".join(lines))
    return 0


def cmd_efficiency(cfg) -> int:
    n = cfg["n"] or 50
    if n < 5:
        raise UsageError("--n must be at least 5")
    dgp = EfficiencyConfig(n=n, seed=cfg["seed"])
    reps = cfg["reps"] if cfg["reps"] != DEFAULTS["reps"] else 2000
    res = efficiency_experiment(n, reps, dgp, workers=cfg["threads"])
    summ = res.summary()
    payload = {"config": {"n": n, "beta": list(dgp.beta), "gamma": list(dgp.gamma), "seed": dgp.seed,
                          "replications": reps}, "summary": summ}
    text = (f"slope estimates over {reps} replications (n = {n}, true slope {dgp.beta[1]})\n"
            f"  fixed dispersion:   mean {summ['fixed_disp']['mean']:.4f}  var {summ['fixed_disp']['var']:.5f}\n"
            f"  varying dispersion: mean {summ['varying_disp']['mean']:.4f}  var {summ['varying_disp']['var']:.5f}\n"
            f"  failed replications: {res.failures}")
    _write(cfg, "efficiency.csv", res.to_csv())
    _write(cfg, "efficiency.json", json.dumps(payload, indent=2))
    _emit(cfg, payload, res.to_csv(), text)
    return 0


COMMANDS = {"fit": cmd_fit, "score-test": cmd_score_test, "select": cmd_select,
            "simulate": cmd_simulate, "efficiency": cmd_efficiency}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg["command"]](cfg)
    except (UsageError, RankDeficiencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, SelectionError, ConvergenceError, EvaluationError,
            CriterionUndefined, ArithmeticError, DomainError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
