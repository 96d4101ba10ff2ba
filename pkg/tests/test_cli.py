import json

import pytest

from adaptrace.cli import main
from adaptrace.harness import corpus_text


@pytest.fixture
def files(tmp_path):
    def put(name):
        p = tmp_path / name
        p.write_text(corpus_text(name))
        return str(p)
    return put


def test_typecheck_accepts(files, capsys):
    assert main(["typecheck", files("static9.shml")]) == 0
    assert "accepted" in capsys.readouterr().out


def test_typecheck_rejects_with_rule(files, capsys):
    assert main(["--format", "json", "typecheck", files("phi3.shml")]) == 1
    rec = json.loads(capsys.readouterr().out)
    assert rec["rule"] == "tAdS" and rec["viaSideEffects"]


def test_typecheck_derivation(files, capsys):
    main(["typecheck", "--derivation", files("static9.shml")])
    assert "tMax" in capsys.readouterr().out


def test_missing_file_is_usage_error(capsys):
    assert main(["typecheck", "/nonexistent.shml"]) == 2


def test_parse_error_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.shml"
    p.write_text("[i ? 3")
    assert main(["typecheck", str(p)]) == 2
    assert "1:7" in capsys.readouterr().err


def test_bad_arguments():
    assert main(["frobnicate"]) == 2


def test_run_core_violation(files, capsys):
    assert main(["run", files("intro1.shml"), "--trace", files("intro.trace")]) == 1
    assert "violated" in capsys.readouterr().out


def test_run_json_lines(files, capsys):
    assert main(["--format", "json", "run", files("static9.shml"),
                 "--trace", files("incdec.trace")]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert lines[0]["rule"] == "rNc"
    assert lines[-1]["summary"]["adaptations"] == ["AdS:restart(i)", "AdS:purge(k)"]


def test_run_refuses_rejected_script(files, capsys):
    assert main(["run", files("phi3.shml"), "--trace", files("incdec.trace")]) == 1
    assert "--unsafe" in capsys.readouterr().err


def test_run_unsafe_explores(files, capsys):
    assert main(["run", files("phi3.shml"), "--trace", files("incdec.trace"), "--unsafe"]) == 0
    assert "error reachable: yes" in capsys.readouterr().out


def test_run_workload(files, capsys):
    rc = main(["--format", "json", "run", files("yaws_v4.shml"), "--workload", "webserver",
               "--malicious", "1", "--seed", "2"])
    rec = json.loads(capsys.readouterr().out)
    assert rc == 0 and len(rec["adaptations"]) == 2


def test_run_mode_conflict(files, capsys):
    assert main(["run", files("static9.shml"), "--workload", "incdec", "--mode", "CA"]) == 1


def test_explore(files, capsys):
    assert main(["explore", files("phi_err.shml"), files("phi_err.trace")]) == 0
    assert "error reachable: yes" in capsys.readouterr().out


def test_bench_seed_from_env(monkeypatch, capsys):
    monkeypatch.setenv("ADAPTRACE_SEED", "11")
    main(["--format", "json", "bench", "--modes", "CA", "--workloads", "incdec", "--seeds", "1"])
    assert json.loads(capsys.readouterr().out)["seed"] == 11
