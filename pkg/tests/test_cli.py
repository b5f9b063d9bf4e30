import json

import numpy as np
import pytest

from betaselect.cli import main
from betaselect.criteria import all_criteria
from betaselect.estimation import FitResult
from betaselect import load_reading_skills


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_default_reading_model(capsys, tmp_path):
    code, out, _ = run(capsys, "fit", "--out", str(tmp_path), "--threads", "1")
    assert code == 0
    assert "gamma:x5" in out and "R2_FC = 0.627" in out
    rep = json.loads((tmp_path / "fit.json").read_text())
    assert rep["r2_lr"] == pytest.approx(0.88, abs=0.01)
    assert (tmp_path / "fit_table.txt").exists()


def test_fit_json_round_trip_reproduces_criteria(capsys, tmp_path):
    code, out, _ = run(capsys, "fit", "--format", "json", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    fit = FitResult.from_dict(rep["fit"])
    y = load_reading_skills().y
    from betaselect.criteria import r2_fc
    assert r2_fc(y, fit) == pytest.approx(rep["r2_fc"], abs=1e-10)
    for c in all_criteria():
        if not c.needs_null():
            a = c.evaluate(fit, y)
            b = c.evaluate(FitResult.from_dict(json.loads(json.dumps(rep["fit"]))), y)
            assert a == pytest.approx(b, abs=1e-10)


def test_fit_intercept_only_reports_zero_r2(capsys):
    code, out, _ = run(capsys, "fit", "--mean-pool", "1", "--disp-pool", "1", "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["r2_lr"] == 0.0 and rep["r2_fc"] == 0.0


def test_fit_ref_dist_t(capsys):
    code, out, _ = run(capsys, "fit", "--ref-dist", "t", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "parameter,estimate,std_error,z,p_value"


def test_missing_response_is_usage_error(capsys, tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("score,a\n0.2,1\n0.4,2\n0.7,4\n")
    code, _, err = run(capsys, "fit", "--data", str(p), "--response", "y")
    assert code == 2 and "'y'" in err


def test_user_csv(capsys, tmp_path):
    rng = np.random.default_rng(0)
    a = rng.uniform(size=60)
    y = rng.beta(5 * (1 + a), 5 * (2 - a))
    p = tmp_path / "d.csv"
    p.write_text("resp,a\n" + "".join(f"{u},{v}\n" for u, v in zip(y, a)))
    code, out, _ = run(capsys, "fit", "--data", str(p), "--response", "resp", "--format", "json")
    assert code == 0 and json.loads(out)["fit"]["param_names"] == ["beta:(intercept)", "beta:a", "gamma:(intercept)"]


def test_select_ps5(capsys, tmp_path):
    code, out, _ = run(capsys, "select", "--scheme", "PS5", "--out", str(tmp_path), "--threads", "1")
    assert code == 0
    assert "mean[x3+x5+x6] disp[x2+x3+x4+x5]" in out
    assert "joint search 1024 fits vs two-step 64 fits" in out
    assert (tmp_path / "ranking.csv").read_text().startswith("step,rank")
    rep = json.loads((tmp_path / "selection.json").read_text())
    assert rep["fits_attempted"] == 64


def test_select_default_scheme_by_n(capsys):
    code, out, _ = run(capsys, "select", "--format", "json", "--threads", "1")
    assert code == 0 and json.loads(out)["scheme"] == "two_step:PS1"


def test_select_joint_small_pool(capsys):
    code, out, _ = run(capsys, "select", "--criterion", "sicc", "--mean-pool", "x2,x3", "--disp-pool", "x2,x3",
                       "--format", "json", "--threads", "1")
    rep = json.loads(out)
    assert code == 0 and rep["scheme"] == "joint" and rep["fits_attempted"] == 16


@pytest.mark.parametrize("argv", [
    ["select", "--scheme", "PS9"],
    ["select", "--criterion", "mallows"],
    ["select", "--mean-pool", "x2,zz"],
    ["simulate", "--model", "5"],
    ["score-test", "--disp-pool", "1"],
    ["fit", "--threads", "0"],
    ["fit", "--mean-link", "identity"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    if argv[0] == "score-test":
        assert "nothing to test" in err


def test_score_test(capsys, tmp_path):
    code, out, _ = run(capsys, "score-test", "--format", "json", "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["df"] == 3 and rep["p_value"] < 0.001
    code, out, _ = run(capsys, "score-test", "--information", "observed", "--format", "json")
    assert code == 0 and json.loads(out)["information"] == "observed"


def test_simulate_deterministic(capsys, tmp_path):
    argv = ["simulate", "--model", "1", "--n", "40", "--reps", "3", "--seed", "9", "--criterion", "sicc,aic",
            "--format", "json", "--threads", "1"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    da, db = json.loads(a), json.loads(b)
    da.pop("seconds"), db.pop("seconds")
    assert da == db and len(da["rows"]) == 2


def test_simulate_one_replication_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--reps", "1", "--n", "30", "--scheme", "PS3", "--format", "csv",
                       "--out", str(tmp_path), "--threads", "1")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "criterion,model1_n30"
    assert lines[1].split(",")[1] in ("0.0", "100.0")
    assert (tmp_path / "frequencies.csv").exists()


def test_efficiency(capsys, tmp_path):
    code, out, _ = run(capsys, "efficiency", "--reps", "3", "--n", "30", "--out", str(tmp_path), "--threads", "1")
    assert code == 0 and "fixed dispersion" in out
    assert len((tmp_path / "efficiency.csv").read_text().strip().splitlines()) == 4


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"mean_pool": ["x2", "x3"], "disp_pool": "x2", "format": "json"}))
    code, out, _ = run(capsys, "fit", "--config", str(cfg))
    assert code == 0 and json.loads(out)["fit"]["spec"]["mean_terms"] == ["x2", "x3"]
    code, out, _ = run(capsys, "fit", "--config", str(cfg), "--mean-pool", "x3")
    assert json.loads(out)["fit"]["spec"]["mean_terms"] == ["x3"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "fit", "--config", str(bad))[0] == 2


def test_numerical_failure_exit_code(capsys):
    # this dispersion set sends one precision towards infinity; the fit cannot converge
    code, _, err = run(capsys, "fit", "--mean-pool", "x2,x3,x4,x5", "--disp-pool", "x2,x4,x5,x6")
    assert code == 1 and "did not converge" in err


def test_too_many_parameters_is_usage_error(capsys, tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,a,b\n0.2,0,1\n0.4,1,0\n0.6,2,1\n")
    code, _, err = run(capsys, "fit", "--data", str(p), "--mean-pool", "a,b", "--disp-pool", "1")
    assert code == 2 and "k < n" in err
