import json

import pytest

from mmisq import cli

EXAMPLE = {"model": {"Q": [[-1, 1], [3, -3]], "lambda": [1, 4], "mu": 1, "rho0": 0}}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_analyze_example(tmp_path, capsys):
    assert cli.main(["analyze", write(tmp_path, EXAMPLE)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["thorn"] == pytest.approx(0.84375, abs=1e-14)
    assert out["lambda_inf"] == pytest.approx(1.75, abs=1e-14)
    assert out["pi"] == pytest.approx([0.75, 0.25], abs=1e-14)
    assert out["regimes"]["0.5"] == {"regime": "sub", "beta": 0.25}


def test_analyze_single_state(tmp_path, capsys):
    doc = {"model": {"Q": [[0]], "lambda": [2], "mu": 1}, "scaling": {"alpha_list": [0.5, 1.5]},
           "experiment": {"T": 1, "grid_step": 0.5}}
    out_dir = tmp_path / "out"
    assert cli.main(["analyze", write(tmp_path, doc), "--out", str(out_dir)]) == 0
    assert json.loads(capsys.readouterr().out)["thorn"] == 0.0
    assert (out_dir / "curves_alpha_1.5.csv").read_text().splitlines()[-1] == "1,1.2642411176571153,1.2642411176571153"


@pytest.mark.parametrize("doc, fragment", [
    ({"model": {"Q": [[-1, 1], [3, -2]], "lambda": [1, 4], "mu": 1}}, "row 2"),
    ({**EXAMPLE, "experiment": {"R": 0}}, "experiment.R"),
    ({**EXAMPLE, "extra": 1}, "'extra'"),
    ({"model": {**EXAMPLE["model"], "Mu": 1}}, "'Mu'"),
    ({"model": {"Q": {"1,2": 1, "2,3": 3}, "lambda": [1, 4], "mu": 1}}, "'2,3'"),
    ('{"model": {"Q": [[-1, 1], [3, -3]],\n "lambda": [1 4]}}', ":2:"),
])
def test_config_errors(tmp_path, capsys, doc, fragment):
    assert cli.main(["simulate", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1
    assert fragment in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert cli.main(["analyze", str(tmp_path / "nope.json")]) == 1


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1


def test_offdiagonal_map(tmp_path, capsys):
    doc = {"model": {"Q": {"1,2": 1, "2,1": 3}, "lambda": [1, 4], "mu": 1}}
    assert cli.main(["analyze", write(tmp_path, doc)]) == 0
    assert json.loads(capsys.readouterr().out)["thorn"] == pytest.approx(0.84375)


SIM = {**EXAMPLE, "scaling": {"alpha": 1.0, "N_list": [20]},
       "experiment": {"T": 1.0, "grid_step": 0.5, "R": 200, "theta_list": [0.5], "base_seed": 3,
                      "thresholds": {"u_var_rel_floor": 0.5}}}


def test_simulate_outputs(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["simulate", write(tmp_path, SIM), "--out", str(out), "--jobs", "1"]) == 0
    ens = (out / "ensemble_alpha_1_N_20.csv").read_text().splitlines()
    assert ens[0] == "t,mean_u,var_u,se_var,mgf_theta_0.5,se_mgf_0.5"
    assert len(ens) == 4
    assert (out / "path_alpha_1_N_20_r0.csv").read_text().startswith("t,j,m,z_1,z_2\n0,")
    assert json.loads((out / "report.json").read_text())["passed"]


def test_config_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", write(tmp_path, SIM), "--out", str(a), "--jobs", "1"]) == 0
    assert cli.main(["simulate", str(a / "config.json"), "--out", str(b), "--jobs", "1"]) == 0
    assert tree(a) == tree(b)


def test_parallel_jobs_same_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = write(tmp_path, SIM)
    assert cli.main(["simulate", cfg, "--out", str(a), "--jobs", "1"]) == 0
    assert cli.main(["simulate", cfg, "--out", str(b), "--jobs", "3"]) == 0
    assert tree(a) == tree(b)


def test_seed_env_override(tmp_path, monkeypatch):
    cfg = write(tmp_path, SIM)
    assert cli.main(["simulate", cfg, "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    monkeypatch.setenv("MMISQ_SEED", "4")
    assert cli.main(["simulate", cfg, "--out", str(tmp_path / "b"), "--jobs", "1"]) == 0
    assert json.loads((tmp_path / "b" / "config.json").read_text())["experiment"]["base_seed"] == 4
    a = (tmp_path / "a" / "ensemble_alpha_1_N_20.csv").read_bytes()
    assert a != (tmp_path / "b" / "ensemble_alpha_1_N_20.csv").read_bytes()


def test_mgf_command(tmp_path):
    doc = {**EXAMPLE, "scaling": {"alpha": 1.5, "N_list": [10]}, "experiment": {"T": 1, "grid_step": 0.5}}
    out = tmp_path / "o"
    assert cli.main(["mgf", write(tmp_path, doc), "--out", str(out)]) == 0
    lines = (out / "mgf_alpha_1.5_N_10_theta_0.5.csv").read_text().splitlines()
    assert lines[0] == "t,lambda_N,lambda_limit,abs_err" and lines[1].startswith("0,1,1,")


def test_converge_failed_check_exit_code(tmp_path):
    doc = {**EXAMPLE, "scaling": {"alpha_list": [1.5], "N_list": [4, 16, 64]},
           "experiment": {"thresholds": {"slope_t_min": 1e9}}}
    out = tmp_path / "o"
    assert cli.main(["converge", write(tmp_path, doc), "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert not report["passed"]
    assert (out / "sup_error.csv").read_text().startswith("alpha,theta,N,sup_error\n1.5,0.5,4,")


def test_reproduce_small_twice(tmp_path):
    doc = {"scaling": {"alpha_list": [0.5, 1.5], "N_list": [4, 16, 64]}}
    cfg = write(tmp_path, doc)
    assert cli.main(["reproduce", cfg, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["reproduce", cfg, "--out", str(tmp_path / "b")]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
