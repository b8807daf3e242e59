import json
import subprocess
import sys

import pytest

from cproj_lab import cli
from cproj_lab.catalog import examples


def _run(argv, capsys):
    code = cli.main(argv)
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def fs_file(tmp_path):
    path = tmp_path / "fs.json"
    path.write_text(json.dumps(examples()["fubini_study"]))
    return str(path)


def test_mobility_n2(capsys):
    code, rep = _run(["mobility", "--n", "2"], capsys)
    assert code == 0 and rep["values"] == [1, 2, 9]


def test_mobility_realize(capsys):
    code, rep = _run(["mobility", "--n", "2", "--realize", "1,1"], capsys)
    assert code == 0 and rep["realization"]["measured"] == 2


def test_infeasible_plan_is_a_failed_check(capsys):
    code, rep = _run(["mobility", "--n", "2", "--realize", "2,2"], capsys)
    assert code == 1 and not rep["passed"]


def test_verify_is_deterministic_and_jobs_independent(fs_file, capsys, tmp_path):
    out = tmp_path / "r.json"
    code1, rep1 = _run(["--out", str(out), "verify", fs_file, "--suite", "cproj"], capsys)
    code2, rep2 = _run(["--jobs", "3", "verify", fs_file, "--suite", "cproj"], capsys)
    assert code1 == code2 == 0
    assert rep1 == rep2
    assert json.loads(out.read_text()) == rep1
    assert rep1["config"]["suite"] == "cproj"


def test_holonomy_dim(fs_file, capsys):
    code, rep = _run(["holonomy-dim", fs_file], capsys)
    assert code == 0 and rep["holonomy"]["D_hat"] == 1


def test_conify(fs_file, capsys):
    code, rep = _run(["conify", fs_file], capsys)
    assert code == 0 and rep["passed"]


def test_schema_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"manifold": examples()["flat"], "tolerances": {"kahler": -1}}))
    code, rep = _run(["verify", str(bad)], capsys)
    assert code == 2 and rep["error"].startswith("SchemaError")
    code, _ = _run(["verify", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_unknown_key_is_a_failed_check(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"construct": "catalog", "key": "no_such_metric"}))
    code, rep = _run(["verify", str(bad), "--suite", "kahler"], capsys)
    assert code == 1 and not rep["passed"]


def test_example_list_and_dump(capsys):
    code, rep = _run(["example", "list"], capsys)
    assert code == 0 and "ricciflat4d" in rep["examples"]
    code, rep = _run(["example", "dump", "conify"], capsys)
    assert rep == examples()["conify"]
    code, rep = _run(["example", "dump", "nope"], capsys)
    assert code == 2


def test_jplanar_probe_needs_solution(fs_file, capsys):
    code, rep = _run(["jplanar", "probe", fs_file], capsys)
    assert code == 1 and not rep["passed"]


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "cproj_lab.cli", "mobility", "--n", "3", "--mode", "einstein"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["values"] == [1, 2, 16]
