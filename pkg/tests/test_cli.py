import json

import pytest

from seqsaa import cli
from seqsaa.errors import NumericalFailure
from seqsaa.model import load_instance

REPORT_KEYS = {
    "L", "M", "W", "ci_upper", "elapsed_s", "eps", "instance", "m_L", "n_L", "schedule", "seed", "status",
    "true_gap", "val_lp", "x", "z_star",
}


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_writes_loadable_instance(tmp_path, capsys):
    path = tmp_path / "inst.json"
    code, _, _ = run(["generate", "--n1", "8", "--r1", "3", "--n2", "6", "--r2", "4", "--support", "20",
                      "--seed", "3", "--out", str(path)], capsys)
    assert code == 0
    inst = load_instance(path)
    assert inst.n1 == 8 and inst.model.support_size == 20


def test_generate_rejects_unknown_spec_keys(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n1": 5, "flavour": 1}))
    code, _, err = run(["generate", "--spec", str(spec)], capsys)
    assert code == 2 and "flavour" in err


def test_solve_outputs(tmp_path, capsys):
    code, out, _ = run(["solve", "--instance", "lands", "--seed", "4", "--truth", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads(out)
    assert set(report) == REPORT_KEYS
    assert report["status"] == "stopped" and report["ci_upper"] <= report["eps"]
    for name in ("config.json", "trajectory.csv", "summary.csv"):
        assert (tmp_path / name).exists()
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "run_id,ell,m,n,inner_iters,lp_count,G,eps,ci_upper,true_gap"


def test_config_echo_reproduces_the_run(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["solve", "--instance", "lands", "--schedule", "linear", "--delta", "150", "--seed", "2",
         "--out-dir", str(a)], capsys)
    echo = json.loads((a / "config.json").read_text())
    assert echo["schedule"]["kind"] == "linear" and echo["schedule"]["delta"] == 150
    assert echo["sigma_max"] > 0 and echo["n1"] == 50
    code, _, _ = run(["solve", "--config", str(a / "config.json"), "--out-dir", str(b)], capsys)
    assert code == 0
    for name in ("trajectory.csv", "summary.csv", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("cmd", ["solve", "study"])
def test_thread_count_does_not_change_csv(tmp_path, capsys, cmd):
    extra = ["--replications", "2"] if cmd == "study" else []
    outs = []
    for threads in ("1", "8"):
        d = tmp_path / threads
        code, _, _ = run([cmd, "--instance", "lands", "--seed", "7", "--threads", threads, "--out-dir", str(d)] + extra,
                         capsys)
        assert code == 0
        outs.append(d)
    for name in ("trajectory.csv", "summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_study_with_several_schedules(tmp_path, capsys):
    cfg = tmp_path / "study.json"
    cfg.write_text(json.dumps({"instance": "lands", "replications": 2, "schedules": ["geometric(1.5)", "linear(200)"]}))
    code, out, _ = run(["study", "--config", str(cfg), "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[1].startswith("geometric(1.5),2,2,0") and lines[2].startswith("linear(200),2,2,0")


def test_rates_command(tmp_path, capsys):
    cfg = tmp_path / "rates.json"
    cfg.write_text(json.dumps({"instance": "lands", "replications": 2, "outer_iters": 6}))
    code, out, _ = run(["rates", "--config", str(cfg), "--out-dir", str(tmp_path / "r")], capsys)
    assert code == 0
    assert out.splitlines()[0] == "label,slope,se,intercept,n_points"
    assert (tmp_path / "r" / "rates.csv").exists()


def test_lemma_check(capsys):
    code, out, _ = run(["lemma-check", "--K", "20"], capsys)
    assert code == 0 and out.count("ok") == 6


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "no-such-instance"],
    ["solve", "--threads"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys, tmp_path):
    code, _, _ = run(argv + ["--out-dir", str(tmp_path)] if argv[0] == "solve" and len(argv) > 2 else argv, capsys)
    assert code == 2


def test_unknown_and_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"instance": "lands", "colour": "blue"}))
    code, _, err = run(["solve", "--config", str(bad)], capsys)
    assert code == 2 and "colour" in err
    bad.write_text('{"instance": "lands",\n "seed": }')
    code, _, err = run(["solve", "--config", str(bad)], capsys)
    assert code == 2 and "line 2" in err
    code, _, _ = run(["solve", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_timeout_exit_3(tmp_path, capsys):
    code, out, _ = run(["solve", "--instance", "lands", "--eps", "1e-3", "--time-limit", "0",
                        "--out-dir", str(tmp_path)], capsys)
    assert code == 3 and json.loads(out)["status"] == "timed_out"


def test_numerical_failure_exit_4(tmp_path, capsys, monkeypatch):
    def boom(cfg):
        raise NumericalFailure("singular basis")

    monkeypatch.setattr(cli, "run_with_stopping", boom)
    code, _, err = run(["solve", "--instance", "lands", "--out-dir", str(tmp_path)], capsys)
    assert code == 4 and "singular" in err


def test_schedule_strings():
    assert cli.parse_schedule("geometric(2)").c1 == 2.0
    assert cli.parse_schedule("polynomial(50,2)").poly_c0 == 50.0
    assert cli.parse_schedule({"kind": "dynamic", "C1": 2.0}).C1 == 2.0
    for bad in ("geometric(0.5)", "spiral(1)", "geometric(", {"kind": "linear", "speed": 1}):
        with pytest.raises(cli.InvalidSpec):
            cli.parse_schedule(bad)
