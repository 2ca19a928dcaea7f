import json
import os
from io import StringIO

import pytest

from consensus_lab.cli import main

from conftest import scenario_path

FIXTURES = ["cycle", "case2", "counterexample", "tightness", "tyranny_extreme", "cps"]


def run_cli(argv):
    out = StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_validate_cycle_ok():
    code, out = run_cli(["validate", scenario_path("cycle")])
    assert code == 0
    assert "valid" in out


def test_validate_rejects_bad_scenario(tmp_path):
    bad = tmp_path / "bad.json"
    data = json.load(open(scenario_path("cycle")))
    data["network"][0] = [0, 0.9, 0]
    bad.write_text(json.dumps(data))
    code, out = run_cli(["validate", str(bad)])
    assert code == 2


def test_parse_error_reports_location(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{"kind": "general",')
    code, _ = run_cli(["validate", str(bad)])
    assert code == 2
    err = capsys.readouterr().err
    assert "line" in err


def test_unknown_key_rejected(tmp_path, capsys):
    bad = tmp_path / "extra.json"
    data = json.load(open(scenario_path("cycle")))
    data["surprise"] = 1
    bad.write_text(json.dumps(data))
    code, _ = run_cli(["validate", str(bad)])
    assert code == 2
    assert "surprise" in capsys.readouterr().err


def test_unknown_command_exits_64():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate", "x.json"])
    assert exc.value.code == 64


def test_consensus_on_cps_fixture_prints_pass():
    code, out = run_cli(["consensus", scenario_path("cps")])
    assert code == 0
    assert "decomposition check PASS" in out
    assert "consensus = 0.48499999999999999" in out


def test_verify_optimism_case1_fixture():
    code, out = run_cli(["verify-optimism", scenario_path("case2"), "--fbar", "1.0"])
    assert code == 0
    assert "bound = 1" in out
    assert "consensus = 1" in out
    assert "PASS" in out


def test_verify_tyranny_requires_cis():
    code, _ = run_cli(["verify-tyranny", scenario_path("cycle")])
    assert code == 3


def test_verify_tyranny_extreme_fixture():
    code, out = run_cli(["verify-tyranny", scenario_path("tyranny_extreme")])
    assert code == 0
    assert "tyranny bound PASS" in out
    assert "consensus = 0.7" in out


def test_game_solve_csv_output():
    code, out = run_cli(
        ["game-solve", scenario_path("cps"), "--beta", "0.5", "--format", "csv"]
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "signal,action"
    assert len(lines) == 5


def test_game_solve_beta_per_agent():
    code, out = run_cli(
        [
            "game-solve",
            scenario_path("cps"),
            "--beta-per-agent",
            "ann=0.9,bob=0.5",
        ]
    )
    assert code == 0
    assert "heterogeneous" in out


def test_game_solve_beta_out_of_range_is_precondition_failure():
    code, _ = run_cli(["game-solve", scenario_path("cps"), "--beta", "1.0"])
    assert code == 3


def test_no_trade_verdicts():
    code, out = run_cli(["no-trade", scenario_path("cps")])
    assert code == 0
    assert "no strictly profitable separable trade" in out
    code, out = run_cli(["no-trade", scenario_path("case2")])
    assert code == 0
    assert "trade found" in out or "payments" in out


def test_simulate_market_writes_artifacts(tmp_path):
    out_dir = tmp_path / "artifacts"
    code, out = run_cli(
        [
            "simulate-market",
            scenario_path("cps"),
            "--beta",
            "0.9",
            "--runs",
            "20",
            "--seed",
            "3",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0
    events = (out_dir / "events.csv").read_text()
    summary = (out_dir / "summary.csv").read_text()
    assert events.splitlines()[0] == "run,period,seller,buyer,price,buyer_signal"
    assert summary.splitlines()[0] == "stat,label,value"
    assert "mean_price" in summary


def test_byte_identical_outputs(tmp_path):
    argv = [
        "simulate-market",
        scenario_path("cps"),
        "--beta",
        "0.95",
        "--runs",
        "10",
        "--seed",
        "11",
        "--format",
        "csv",
    ]
    code1, out1 = run_cli(list(argv))
    code2, out2 = run_cli(list(argv))
    assert code1 == code2 == 0
    assert out1 == out2
    code3, out3 = run_cli(argv[:-4] + ["--seed", "12", "--format", "csv"])
    assert out3 != out1


def test_build_emits_matrices(tmp_path):
    out_dir = tmp_path / "b"
    code, out = run_cli(
        ["build", scenario_path("cycle"), "--out", str(out_dir)]
    )
    assert code == 0
    assert "irreducible: True" in out
    b_csv = (out_dir / "interaction.csv").read_text().splitlines()
    assert b_csv[0] == "row,col,value"
    assert len(b_csv) == 1 + 36
    f_csv = (out_dir / "first_order.csv").read_text().splitlines()
    assert len(f_csv) == 1 + 12


@pytest.mark.parametrize("name", FIXTURES)
def test_report_runs_on_every_fixture(name):
    code, out = run_cli(["report", scenario_path(name)])
    assert code == 0
    assert "== structure ==" in out
    assert "== consensus ==" in out
    assert "== no-trade ==" in out


def test_report_deterministic():
    a = run_cli(["report", scenario_path("counterexample")])
    b = run_cli(["report", scenario_path("counterexample")])
    assert a == b


def test_tolerance_flag_relaxes_validation(tmp_path):
    data = json.load(open(scenario_path("cycle")))
    data["beliefs"]["a1"]["marginals"]["state"] = [0.9999999, 0.0000001999]
    p = tmp_path / "coarse.json"
    p.write_text(json.dumps(data))
    code, _ = run_cli(["validate", str(p)])
    assert code == 2
    code, _ = run_cli(["validate", str(p), "--tol", "1e-6"])
    assert code == 0


def test_scenario_error_paths(tmp_path, capsys):
    data = json.load(open(scenario_path("cps")))
    data["beliefs"]["a1"]["full"][0]["p"] = "lots"
    p = tmp_path / "badnum.json"
    p.write_text(json.dumps(data))
    code, _ = run_cli(["validate", str(p)])
    assert code == 2
    assert "expected a number" in capsys.readouterr().err
