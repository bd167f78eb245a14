import json
import subprocess
import sys

import pytest

from reconfplan.cli import main
from reconfplan.library import seed_library_path
from reconfplan.pipeline import data_file

LIB = str(seed_library_path())


def spec(name):
    return str(data_file(f"specs/{name}.spec"))


def scen(name):
    return str(data_file(f"scenarios/{name}.yaml"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lib_validate(capsys):
    code, out, _ = run(capsys, "lib", "validate", LIB)
    assert code == 0 and out.startswith("ok: 18 entries")


def test_lib_validate_bad(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("entries:\n  - {id: x, configuration: nowhere, behavior: {states: []}}\n")
    code, _, err = run(capsys, "lib", "validate", str(p))
    assert code == 1 and "unknown configuration nowhere" in err


def test_lib_query(capsys):
    code, out, _ = run(capsys, "--format", "machine", "lib", "query", LIB,
                       "--prop", "Action=[Climb]", "--prop", "Climb_Direction=[Up]")
    assert code == 0
    assert json.loads(out) == {"matched": ["snake7-climbup", "stairClimber-climb"]}


def test_lib_query_polarity_override(capsys):
    code, out, _ = run(capsys, "lib", "query", LIB, "--prop", "Ledge_Height=0.75",
                       "--polarity", "Ledge_Height=literal")
    assert code == 0 and out.strip() == "(no matching entries)"


def test_spec_parse_modes(capsys):
    code, out, _ = run(capsys, "spec", "parse", spec("tabletop_wastebin"))
    assert code == 0 and "do pickup if and only if you were sensing wasteBin" in out
    code, out, _ = run(capsys, "spec", "parse", spec("tabletop_wastebin"), "--dump-ltl")
    assert "carry' <-> pickup | carry" in out
    code, out, _ = run(capsys, "spec", "parse", spec("tabletop_wastebin"), "--dump-ast")
    assert out.startswith("SetReset(")


def test_spec_parse_error(capsys, tmp_path):
    p = tmp_path / "x.spec"
    p.write_text("actions: a\nspec:\ndo a if and only\n")
    code, _, err = run(capsys, "spec", "parse", str(p))
    assert code == 1 and "line 3" in err and "expected one of: if" in err


def test_synth_unrealizable_exit_2(capsys, tmp_path):
    out_file = tmp_path / "a.json"
    code, out, err = run(capsys, "synth", spec("unmatched_goal"), LIB, "-o", str(out_file), "--explain")
    assert code == 2 and "unrealizable" in out
    assert "never climbHigh" in err and "climbHigh: (none)" in err
    assert not out_file.exists()


def test_synth_exec_roundtrip(capsys, tmp_path):
    aut = tmp_path / "a.json"
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "synth", spec("scenario2"), LIB, "-o", str(aut))
    assert code == 0 and "realizable" in out
    code, out, _ = run(capsys, "--format", "machine", "exec", str(aut), LIB, scen("scenario2"),
                       "--trace", str(trace))
    res = json.loads(out)
    assert code == 0 and res["outcome"] == "completed" and res["problems"] == []
    assert len(res["reconfigurations"]) == 2
    assert trace.read_text().count("\n") == res["steps"]


def test_library_env_var(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RECONFPLAN_LIBRARY", str(tmp_path / "missing.yaml"))
    code, _, err = run(capsys, "synth", spec("scenario1"), "-o", str(tmp_path / "a.json"))
    assert code == 1 and "missing.yaml" in err
    monkeypatch.setenv("RECONFPLAN_LIBRARY", LIB)
    code, _, _ = run(capsys, "synth", spec("scenario1"), "-o", str(tmp_path / "a.json"))
    assert code == 0


def test_check_config(capsys):
    code, out, _ = run(capsys, "check-config", LIB, "snake", "--pose", str(data_file("poses/snake_vertical.yaml")))
    assert code == 0 and out.strip().endswith("feasible")
    code, out, _ = run(capsys, "--format", "machine", "check-config", LIB, "snake",
                       "--pose", str(data_file("poses/snake_horizontal.yaml")))
    res = json.loads(out)
    assert code == 1 and not res["feasible"]
    assert [e["moment"] for e in res["edges"]] == [8.0, 4.5, 2.0, 0.5]
    code, _, err = run(capsys, "check-config", LIB, "nope", "--pose", str(data_file("poses/snake_vertical.yaml")))
    assert code == 1 and "nope" in err


def test_pipeline_outputs(capsys, tmp_path):
    code, out, err = run(capsys, "--format", "machine", "pipeline", spec("scenario1"), LIB,
                         scen("scenario1"), "-o", str(tmp_path), "--explain")
    res = json.loads(out)
    assert code == 0 and res["reconfigurations"] == 0
    for name in ("automaton.json", "trace.jsonl", "match_report.json", "manifest.json"):
        assert (tmp_path / name).exists()
    report = json.loads((tmp_path / "match_report.json").read_text())
    assert set(report["bindings"]) == {"pushButton", "pushBox", "climb"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {"spec", "library", "scenario"}
    assert len(manifest["inputs"]["spec"]["sha256"]) == 64
    assert set(manifest["timings"]) == {"parse", "match", "synth", "scenario", "exec"}


def test_pipeline_unrealizable(capsys, tmp_path):
    code, _, _ = run(capsys, "pipeline", spec("unmatched_goal"), LIB, scen("scenario1"), "-o", str(tmp_path))
    assert code == 2
    assert (tmp_path / "match_report.json").exists() and not (tmp_path / "trace.jsonl").exists()


def test_pipeline_phase_tag(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("initial_configuration: x\n")
    code, _, err = run(capsys, "pipeline", spec("scenario1"), LIB, str(bad), "-o", str(tmp_path / "o"))
    assert code == 1 and "[scenario]" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "spec", "parse", "/nonexistent.spec")
    assert code == 1 and err.startswith("error:")


def test_bad_polarity_value(capsys):
    code, _, err = run(capsys, "lib", "query", LIB, "--prop", "Speed=1", "--polarity", "Speed=sideways")
    assert code == 1 and "bad polarity" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "reconfplan", "lib", "validate", LIB],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "18 entries" in r.stdout


@pytest.mark.parametrize("argv", [[], ["lib"], ["synth"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as ei:
        main(argv)
    assert ei.value.code == 1
