import json
import logging
import subprocess
import sys

import pytest

from memorec.cli import main
from memorec.replay import CachingPlan, PlanEntry


@pytest.fixture(scope="module")
def gen(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["trace-gen", "--seed", "3", "--users", "2", "--requests", "300", "--out", str(out)]) == 0
    return out


def test_trace_gen_outputs(gen):
    assert {p.name for p in gen.iterdir()} == {"requests.jsonl", "trace.jsonl", "manifest.json"}
    assert len((gen / "requests.jsonl").read_text().splitlines()) == 300


def test_pipeline(gen, tmp_path, capsys):
    trace = str(gen / "trace.jsonl")
    assert main(["profile", trace, "--dump", str(tmp_path / "prof.json")]) == 0
    assert "records=" in capsys.readouterr().out
    assert main(["recommend-apl", trace, "--out", str(tmp_path / "apl.json")]) == 0
    assert main(["recommend-mem", trace, "--out", str(tmp_path / "mem.json"), "--kernel", "iterative"]) == 0
    assert json.loads((tmp_path / "mem.json").read_text())["source"] == "MEM"
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "apl.json"), str(tmp_path / "mem.json")]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"a", "b", "shared", "only_a", "only_b"}
    assert main(["replay", trace, "--plan", str(tmp_path / "mem.json"), "--out", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.csv").read_text().startswith("plan,method,")
    args = ["report", "--trace", trace, "--manifest", str(gen / "manifest.json"), "--apl", str(tmp_path / "apl.json"),
            "--mem", str(tmp_path / "mem.json"), "--out", str(tmp_path / "rep"), "--format", "md"]
    assert main(args) == 0
    assert (tmp_path / "rep" / "report.md").exists()


def test_replay_warns_on_ghost_method(gen, tmp_path, caplog):
    (tmp_path / "plan.json").write_text(CachingPlan({"ghost()": PlanEntry()}, "G").dumps())
    with caplog.at_level(logging.WARNING):
        code = main(["replay", str(gen / "trace.jsonl"), "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "m.csv")])
    assert code == 0 and "ghost()" in caplog.text
    assert "G,ghost(),0,0,0,0,0,0.000000" in (tmp_path / "m.csv").read_text()


def test_study_outputs(tmp_path, capsys):
    assert main(["study", "--seed", "1", "--requests", "300", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"learning_trace.jsonl", "testing_trace.jsonl", "manifest.json", "config.json", "report"} <= names
    assert {f"metrics_{n}.csv" for n in ("nocache", "dev", "apl", "mem")} <= names
    assert json.loads((tmp_path / "config.json").read_text())["seed"] == 1
    out = capsys.readouterr().out
    assert "APL:" in out and "MEM: relative throughput" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["study", "--out", "x"],
        ["trace-gen", "--seed", "1", "--requests", "5", "--duration-ns", "5", "--out", "x"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_nav_without_app_exits_2(tmp_path):
    assert main(["trace-gen", "--seed", "1", "--nav", str(tmp_path / "n.json"), "--out", str(tmp_path)]) == 2


def test_runtime_errors_exit_1(tmp_path):
    assert main(["profile", str(tmp_path / "missing.jsonl")]) == 1
    (tmp_path / "bad.jsonl").write_text("not json\n")
    assert main(["recommend-apl", str(tmp_path / "bad.jsonl"), "--out", str(tmp_path / "r.json")]) == 1
    assert main(["trace-gen", "--seed", "1", "--requests", "0", "--out", str(tmp_path)]) == 1


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "memorec", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "study" in r.stdout
