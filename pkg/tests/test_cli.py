import json
import re

import pytest

from dualresearch.cli import main
from dualresearch.core_state import cited_ids_in_text

from conftest import CORPUS, ROOT

QUERY = "How much do elderly households in Japan spend on housing, food and healthcare?"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_research_happy_path(tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, _ = run(["research", QUERY, "--mock", str(CORPUS), "--out", str(out)], capsys)
    assert code == 0
    assert stdout.strip() == str(out / "report.md")
    for name in ("report.md", "run_log.jsonl", "document_bank.jsonl", "trajectory.json"):
        assert (out / name).is_file()
    report = (out / "report.md").read_text()
    refs = dict(re.findall(r"^- (turn_\d+_\d+): (\S+)$", report, re.M))
    body = report.split("**References**")[0]
    assert cited_ids_in_text(body)
    assert set(cited_ids_in_text(body)) <= set(refs)
    events = [json.loads(l)["event"] for l in (out / "run_log.jsonl").read_text().splitlines()]
    assert events[0] == "config" and events[-1] == "report"


def test_research_with_memory_writes_traces(tmp_path, capsys):
    mem = tmp_path / "mem"
    code, _, _ = run(["research", QUERY, "--mock", str(CORPUS), "--out", str(tmp_path / "o"),
                      "--memory", str(mem), "--max-rounds", "2"], capsys)
    assert code == 0
    assert list(mem.glob("traces_*.jsonl"))
    code, stdout, _ = run(["bank", "show", str(mem)], capsys)
    assert code == 0 and "traces: " in stdout
    code, stdout, _ = run(["bank", "show", str(mem), "--query", QUERY, "--mode", "exact"], capsys)
    assert code == 0 and "round 1" in stdout


def test_unknown_flag_is_usage_error(capsys):
    assert main(["research", "q", "--bogus"]) == 2


def test_missing_mock_dir_is_config_error(tmp_path, capsys):
    code, _, err = run(["research", "q", "--mock", str(tmp_path / "none"), "--out", str(tmp_path)], capsys)
    assert code == 2 and "configuration error" in err


def test_bank_show_missing_dir(tmp_path, capsys):
    assert run(["bank", "show", str(tmp_path / "none")], capsys)[0] == 2


def test_harness_twice_identical(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(ROOT)
    metrics = []
    for name in ("a", "b"):
        work = tmp_path / name
        code, stdout, _ = run(["harness", "run", "--config", str(CORPUS / "config.yaml"),
                               "--workdir", str(work), "--harness-rounds", "1",
                               "--mutation-cmd", "true"], capsys)
        assert code == 0 and "decision=capped" in stdout
        metrics.append([(work / "optimization_runs" / v / "metrics.json").read_text()
                        for v in ("v0_baseline", "v1")])
    assert metrics[0] == metrics[1]


def test_eval_pairwise(tmp_path, capsys):
    ref = tmp_path / "ref.md"
    ref.write_text("# Report\n\nSome findings.\n")
    code, stdout, _ = run(["eval", "pairwise", "--query", "q", "--reference", str(ref),
                           "--candidate", str(ref), "--mock", str(CORPUS), "--json"], capsys)
    assert code == 0
    data = json.loads(stdout)
    assert data["score"]["overall"] == pytest.approx(50.0)
    code, stdout, _ = run(["eval", "pairwise", "--query", "q", "--reference", str(ref),
                           "--candidate", str(ref), "--mock", str(CORPUS)], capsys)
    assert "| ref.md | 50.00" in stdout
