from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from ipricing.cli import main

FIXTURES = Path(__file__).resolve().parent / "fixtures"
ZOOM = FIXTURES / "zoom"
DOCS = FIXTURES / "documents"
SCORES = FIXTURES / "published_scores"


def transform_zoom(out: Path, *extra: str) -> int:
    return main(
        ["transform", "--file", str(ZOOM / "zoom.html"), "--out", str(out),
         "--saas-name", "Zoom", "--date", "2024-10-01", *extra]
    )


def test_transform_replay_matches_golden(tmp_path, capsys):
    assert transform_zoom(tmp_path / "zoom") == 0
    golden = ZOOM / "golden"
    assert (tmp_path / "zoom.pricing.yml").read_bytes() == (golden / "zoom.pricing.yml").read_bytes()
    assert (tmp_path / "zoom.log").read_bytes() == (golden / "zoom.log").read_bytes()
    assert "3 plans, 13 features, 3 usage limits, 4 add-ons" in capsys.readouterr().out


def test_transform_without_source_is_usage_error(tmp_path):
    assert main(["transform", "--out", str(tmp_path / "x")]) == 64
    assert main(["transform", "--file", "a.html", "--url", "http://x", "--out", str(tmp_path / "x")]) == 64


def test_unknown_subcommand_is_usage_error():
    assert main(["frobnicate"]) == 64
    assert main([]) == 64


def test_transform_dead_host_fails(tmp_path):
    code = main(["transform", "--url", "http://nonexistent.invalid/pricing", "--out", str(tmp_path / "x"),
                 "--provider", "null", "--wait", "2"])
    assert code == 3
    log = (tmp_path / "x.log").read_text(encoding="utf-8")
    assert "PASS_FAILED" in log
    assert not (tmp_path / "x.pricing.yml").exists()


def test_transform_null_provider_fails(tmp_path):
    assert transform_zoom(tmp_path / "zoom", "--provider", "null") == 3
    assert "PASS_FAILED" in (tmp_path / "zoom.log").read_text(encoding="utf-8")


def test_transform_missing_replay_fails(tmp_path):
    code = transform_zoom(tmp_path / "zoom", "--replay-dir", str(tmp_path / "empty"))
    assert code == 3


def test_batch_with_jobs(tmp_path):
    work = tmp_path / "in"
    work.mkdir()
    for name in ("a", "b"):
        shutil.copy(ZOOM / "zoom.html", work / f"{name}.html")
    shutil.copytree(ZOOM / "replay", work / "replay")
    manifest = work / "manifest.txt"
    manifest.write_text("# two copies of the same page\na.html\nfile:b.html\n", encoding="utf-8")
    out = tmp_path / "out"
    code = main(["transform", "--batch", str(manifest), "--out", str(out), "--jobs", "2", "--date", "2024-10-01"])
    assert code == 0
    a = (out / "a.pricing.yml").read_text(encoding="utf-8")
    b = (out / "b.pricing.yml").read_text(encoding="utf-8")
    assert a.replace("a.html", "X").replace("saasName: a", "") == b.replace("b.html", "X").replace("saasName: b", "")


def test_batch_empty_manifest_is_usage_error(tmp_path):
    manifest = tmp_path / "m.txt"
    manifest.write_text("# nothing\n", encoding="utf-8")
    assert main(["transform", "--batch", str(manifest), "--out", str(tmp_path / "o")]) == 64


@pytest.mark.parametrize("name, code", [("minimal", 0), ("two_plans_three_addons", 0), ("broken", 2), ("dangling", 2)])
def test_validate(name, code):
    assert main(["validate", str(DOCS / f"{name}.pricing.yml")]) == code


def test_validate_golden_output():
    assert main(["validate", str(ZOOM / "golden" / "zoom.pricing.yml")]) == 0


def test_validate_missing_file_is_usage_error(tmp_path):
    assert main(["validate", str(tmp_path / "nope.yml")]) == 64


def test_analyze(capsys):
    assert main(["analyze", str(DOCS / "two_plans_three_addons.pricing.yml")]) == 0
    out = capsys.readouterr().out
    assert "plans: 2" in out and "addOns: 3" in out and "configurationSpace: 16" in out
    assert main(["analyze", str(DOCS / "two_plans_three_addons.pricing.yml"),
                 "--constraints", str(DOCS / "audit_needs_support.constraints.yml")]) == 0
    assert "configurationSpace: 12" in capsys.readouterr().out


def test_score_published_sheets(tmp_path, capsys):
    report, rows = tmp_path / "report.txt", tmp_path / "rows.csv"
    code = main(["score", "--gold", str(SCORES / "gold"), "--pred", str(SCORES / "pred"),
                 "--report", str(report), "--rows", str(rows)])
    assert code == 0
    assert report.read_text(encoding="utf-8") == (SCORES / "golden" / "report.txt").read_text(encoding="utf-8")
    assert rows.read_text(encoding="utf-8") == (SCORES / "golden" / "rows.csv").read_text(encoding="utf-8")
    assert "scored 30 SaaS" in capsys.readouterr().out


def test_score_empty_dirs(tmp_path):
    (tmp_path / "g").mkdir()
    (tmp_path / "p").mkdir()
    assert main(["score", "--gold", str(tmp_path / "g"), "--pred", str(tmp_path / "p"),
                 "--report", str(tmp_path / "r.txt")]) == 1
    assert not (tmp_path / "r.txt").exists()


def test_score_unmatched_file(tmp_path, capsys):
    gold, pred = tmp_path / "g", tmp_path / "p"
    shutil.copytree(SCORES / "gold", gold)
    shutil.copytree(SCORES / "pred", pred)
    next(iter(sorted(pred.glob("*.judgments.yml")))).unlink()
    code = main(["score", "--gold", str(gold), "--pred", str(pred), "--report", str(tmp_path / "r.txt")])
    assert code == 1
    assert "unmatched:" in capsys.readouterr().err
    assert (tmp_path / "r.txt").exists()


def test_score_single_pair_from_pricing(tmp_path, capsys):
    gold, pred = tmp_path / "g", tmp_path / "p"
    gold.mkdir()
    pred.mkdir()
    shutil.copy(FIXTURES / "evaluation" / "gold" / "zoom.gold.yml", gold)
    shutil.copy(ZOOM / "golden" / "zoom.pricing.yml", pred)
    report = tmp_path / "r.txt"
    assert main(["score", "--gold", str(gold), "--pred", str(pred), "--report", str(report)]) == 0
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[1].startswith("Zoom")
    assert lines[-2].split()[1:] == lines[-1].split()[1:]
    assert lines[-2].split()[1:4] == ["100", "100", "100"]


def test_module_entry_point():
    run = subprocess.run([sys.executable, "-m", "ipricing", "--version"], capture_output=True, text=True)
    assert run.returncode == 0 and run.stdout.startswith("ipricing")
    run = subprocess.run([sys.executable, "-m", "ipricing", "validate"], capture_output=True, text=True)
    assert run.returncode == 64
