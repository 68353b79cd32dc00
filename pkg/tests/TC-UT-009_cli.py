"""
TC-UT-009: zeta-dist command line

Validates: zeta_dist.scripts.cli (subcommands, exit codes, JSON/CSV outputs,
determinism) and zeta_dist.scripts.run_log
"""

import csv
import json

import pytest

from zeta_dist.scripts import run_log
from zeta_dist.scripts.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_eval_single_point(capsys):
    out = run_json(capsys, "eval", "--catalog", "riemann", "--sigma", "2",
                   "--prime-limit", "10000")
    assert out["t"] == [0.0]
    assert out["value"]["re"] == pytest.approx(1.6449340668, rel=1e-4)
    assert out["value"]["im"] == 0.0
    assert out["tail"] > 0


def test_eval_several_points(capsys):
    out = run_json(capsys, "eval", "--catalog", "riemann", "--t", "0,1,2",
                   "--prime-limit", "1000")
    assert [p["t"] for p in out["points"]] == [[0.0], [1.0], [2.0]]
    assert out["config"]["sigma"] == [2.0]


def test_cf_at_origin(capsys):
    out = run_json(capsys, "cf", "--catalog", "md_iii", "--sigma", "2,0", "--t", "0,0",
                   "--prime-limit", "1000")
    assert (out["re"], out["im"]) == (1.0, 0.0)


def test_cf_csv(capsys, tmp_path):
    path = tmp_path / "cf.csv"
    out = run_json(capsys, "cf", "--catalog", "dedekind_qi", "--t", "0,0.5,1",
                   "--prime-limit", "1000", "--out", str(path))
    assert out["points"] == 3
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t_1", "re", "im"]
    assert float(rows[1][1]) == 1.0


def test_classify_l1(capsys):
    out = run_json(capsys, "classify", "--catalog", "L1", "--sigma", "2")
    assert out["verdict"] == "NotCharacteristic"
    assert out["offending"] == [[1, 2]]
    assert out["expected_classification"] == "NotCharacteristic"


def test_classify_out_of_scope_carries_certificate(capsys):
    out = run_json(capsys, "classify", "--catalog", "zeta2_L2s", "--prime-limit", "2000")
    assert out["verdict"] == "OutOfTheoremScope"
    assert out["certification"]["status"] == "CertifiedUpToTruncation"
    resolved = run_json(capsys, "classify", "--catalog", "zeta2_L2s", "--prime-limit", "2000",
                        "--resolve")
    assert resolved["verdict"] == "CompoundPoisson"


def test_levy_summary_and_csv(capsys, tmp_path):
    path = tmp_path / "atoms.csv"
    out = run_json(capsys, "levy", "--catalog", "L_chi4", "--prime-limit", "500",
                   "--out", str(path))
    assert out["nonnegative"] is False
    assert out["atoms"] > 0
    assert path.exists() and (tmp_path / "atoms.json").exists()


def test_sample_is_byte_identical(capsys):
    argv = ["sample", "--catalog", "riemann", "--seed", "5", "--n", "2000",
            "--prime-limit", "1000"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv, "--threads", "3")
    a, b = json.loads(first), json.loads(second)
    assert a["mean"] == b["mean"]
    assert a["seed"] == 5 and a["n"] == 2000


def test_eval_output_is_deterministic(capsys):
    argv = ["eval", "--catalog", "md_iv", "--t", "0.3,-1.1", "--prime-limit", "2000"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_moments(capsys, tmp_path):
    path = tmp_path / "moments.json"
    out = run_json(capsys, "moments", "--catalog", "md_iii", "--prime-limit", "500",
                   "--out", str(path))
    orders = [c["order"] for c in out["cumulants"]]
    assert [1, 0] in orders and [2, 2] in orders and [0, 4] in orders
    assert len(orders) == 2 + 3 + 4 + 5
    assert json.loads(path.read_text())["config"]["command"] == "moments"


def test_witness_not_found_exits_1(capsys):
    code, out, _ = run(capsys, "witness", "--catalog", "riemann", "--budget", "5000",
                       "--prime-limit", "1000")
    assert code == 1
    assert json.loads(out)["found"] is False


def test_catalog_commands(capsys, tmp_path):
    names = [e["name"] for e in run_json(capsys, "catalog", "list")["entries"]]
    assert "tuple_rank_ii" in names
    shown = run_json(capsys, "catalog", "show", "rank_shift", "--param", "alpha=1/3")
    assert shown["params"] == {"alpha": "1/3"}
    target = tmp_path / "spec.json"
    run_json(capsys, "catalog", "export", "L_zeta2s", "--out", str(target))
    out = run_json(capsys, "classify", "--spec", str(target), "--sigma", "2",
                   "--prime-limit", "2000")
    assert out["verdict"] == "OutOfTheoremScope"
    assert out["certification"]["status"] == "NegativeAtomFound"


@pytest.mark.parametrize(
    "argv, error",
    [
        (["eval", "--catalog", "riemann", "--sigma", "1"], "DomainError"),
        (["eval", "--catalog", "md_iii", "--sigma", "2"], "DomainError"),
        (["eval", "--catalog", "nope"], "CatalogLookupError"),
        (["eval", "--catalog", "riemann", "--sigma", "two"], "SpecValidationError"),
        (["eval", "--catalog", "riemann", "--param", "x"], "SpecValidationError"),
        (["sample", "--catalog", "L1", "--prime-limit", "100"], "NotADistributionError"),
        (["sample", "--catalog", "riemann", "--n", "0"], "DomainError"),
        (["witness", "--catalog", "riemann", "--strategy", "kronecker", "--budget", "0"],
         "DomainError"),
    ],
)
def test_invalid_input_exits_2(capsys, argv, error):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err)["error"] == error


def test_settings_file(capsys, tmp_path):
    config = tmp_path / "settings.yaml"
    config.write_text("prime_limit: 1000\n")
    out = run_json(capsys, "eval", "--catalog", "riemann", "--config", str(config))
    assert out["config"]["policy"]["prime_limit"] == 1000
    config.write_text("unknown_key: 1\n")
    code, _, err = run(capsys, "eval", "--catalog", "riemann", "--config", str(config))
    assert code == 2 and json.loads(err)["error"] == "ConfigError"


def test_text_format(capsys):
    code, out, _ = run(capsys, "classify", "--catalog", "L2", "--format", "text")
    assert code == 0
    assert "❌ NotCharacteristic" in out
    assert "negative at direction 1, p = 3" in out


def test_run_log(capsys, tmp_path):
    log = tmp_path / "runs.jsonl"
    run(capsys, "classify", "--catalog", "L1", "--run-log", str(log))
    run(capsys, "eval", "--catalog", "riemann", "--sigma", "0.5", "--run-log", str(log))
    entries = run_log.load_runs(log)
    assert [e["command"] for e in entries] == ["classify", "eval"]
    assert [e["exit_code"] for e in entries] == [0, 2]
    assert entries[0]["config"]["catalog"] == "L1"
    assert entries[0]["summary"]["verdict"] == "NotCharacteristic"

    assert run_log.main([str(log), "--command", "eval"]) == 0
    assert "exit=2" in capsys.readouterr().out


@pytest.mark.parametrize(
    "scheme",
    [
        {"kind": "character", "modulus": 4, "values": [0, "one", 0, -1]},
        {"kind": "table", "default": 1, "overrides": {"two": -1}},
    ],
)
def test_non_integer_spec_fields_exit_2(capsys, tmp_path, scheme):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(
        {"d": 1, "directions": [[1]], "tuple_size": 1, "coefficients": [[scheme]]}
    ))
    code, _, err = run(capsys, "eval", "--spec", str(path), "--sigma", "2")
    assert code == 2
    assert json.loads(err)["error"] == "SpecValidationError"
