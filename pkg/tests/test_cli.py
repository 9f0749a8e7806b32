from __future__ import annotations

import json
import subprocess
import sys

import pytest
from manifest_cases import make_manifest
from stubs import dead_url

from newsgeo.cli import main
from newsgeo.manifest import write_manifests


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("bench")
    assert main(["make-benchmark", "--out", str(d), "--articles", "20", "--seed", "3"]) == 0
    return d


def _first_article(bench_dir, archetype, tmp_path):
    truth = json.loads((bench_dir / "truth.json").read_text())
    for line in (bench_dir / "corpus.jsonl").read_text().splitlines():
        rec = json.loads(line)
        if truth[rec["id"]] == archetype:
            p = tmp_path / f"{archetype}.json"
            p.write_text(json.dumps(rec))
            return p
    raise AssertionError(f"no {archetype} article")


def _json_out(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def test_geocode_detected_exit_0(bench_dir, tmp_path, capsys):
    art = _first_article(bench_dir, "region", tmp_path)
    code = main(["--config", str(bench_dir / "config.json"), "geocode", str(art), "--method", "gipsy"])
    res = _json_out(capsys)
    assert code == 0
    assert res["status"] == "detected" and res["method"] == "gipsy"


def test_geocode_not_found_exit_3(bench_dir, tmp_path, capsys):
    art = _first_article(bench_dir, "far4", tmp_path)
    code = main(["geocode", str(art), "--method", "centroid", "--config", str(bench_dir / "config.json")])
    assert code == 3
    assert _json_out(capsys)["status"] == "exhausted"


def test_geocode_bogus_method_exit_1(bench_dir, tmp_path, capsys):
    art = _first_article(bench_dir, "solo", tmp_path)
    with pytest.raises(SystemExit) as ei:
        main(["--config", str(bench_dir / "config.json"), "geocode", str(art), "--method", "bogus"])
    assert ei.value.code == 1


def test_missing_subcommand_exit_1(capsys):
    with pytest.raises(SystemExit) as ei:
        main([])
    assert ei.value.code == 1


def test_geocode_offline_geocoder_exit_2(bench_dir, tmp_path, capsys):
    cfg = json.loads((bench_dir / "config.json").read_text())
    cfg["geocoder"] = {"backend": "http", "url": dead_url(), "timeout": 2, "retries": 0}
    cfg["gazetteer"] = str(bench_dir / "gazetteer.tsv")
    cfg["planted_events"] = str(bench_dir / "events.json")
    (tmp_path / "offline.json").write_text(json.dumps(cfg))
    art = _first_article(bench_dir, "solo", tmp_path)
    code = main(["--quiet", "--config", str(tmp_path / "offline.json"), "geocode", str(art), "--method", "agentic"])
    assert code == 2
    assert _json_out(capsys)["status"] == "infra_error"


def test_geocode_missing_article_file_exit_1(bench_dir, tmp_path, capsys):
    code = main(["--config", str(bench_dir / "config.json"), "geocode", str(tmp_path / "nope.json")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_run_batch_report_and_resume(bench_dir, tmp_path, capsys):
    out = tmp_path / "runs"
    argv = ["--config", str(bench_dir / "config.json"), "run-batch", "--corpus", str(bench_dir / "corpus.jsonl"),
            "--out", str(out), "--concurrency", "3", "--manifests"]
    assert main(argv + ["--pretty"]) == 0
    captured = capsys.readouterr()
    rep = json.loads(captured.out)
    assert [r["method"] for r in rep["rows"]] == ["centroid", "gipsy", "agentic"]
    assert rep["baseline"] == "centroid"
    table = captured.err.splitlines()
    assert table[0].startswith("Method") and "Increase over Centroid Baseline" in table[0]
    assert table[2].rstrip().endswith("--")
    assert (out / "report.txt").read_text().splitlines() == table
    for m in ("centroid", "gipsy", "agentic"):
        assert (out / f"results_{m}.jsonl").exists()
        assert (out / f"manifests_{m}.jsonl").exists()
    before = {m: (out / f"results_{m}.jsonl").read_bytes() for m in ("centroid", "gipsy", "agentic")}

    # interrupted run: drop the second half of one file, rerun, get the same bytes back
    lines = before["agentic"].decode().splitlines(keepends=True)
    (out / "results_agentic.jsonl").write_text("".join(lines[: len(lines) // 2]))
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out) == rep
    assert {m: (out / f"results_{m}.jsonl").read_bytes() for m in before} == before

    assert main(["report", str(out)]) == 0
    assert json.loads(capsys.readouterr().out) == rep


def test_run_batch_unknown_method_exit_1(bench_dir, tmp_path, capsys):
    code = main(["--config", str(bench_dir / "config.json"), "run-batch", "--corpus", str(bench_dir / "corpus.jsonl"),
                 "--out", str(tmp_path), "--methods", "centroid,magic"])
    assert code == 1


def test_run_batch_is_idempotent(bench_dir, tmp_path, capsys):
    outs = []
    for k in (1, 2):
        argv = ["--config", str(bench_dir / "config.json"), "--seed", "3", "run-batch",
                "--corpus", str(bench_dir / "corpus.jsonl"), "--out", str(tmp_path / f"r{k}"), "--methods", "agentic"]
        assert main(argv) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert (tmp_path / "r1" / "results_agentic.jsonl").read_bytes() == (tmp_path / "r2" / "results_agentic.jsonl").read_bytes()


def test_report_on_empty_dir_exit_1(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == 1


def test_dataset_stats(tmp_path, capsys):
    ms = [make_manifest(0, 2, True), make_manifest(1, 2, True), make_manifest(2, 3, False), make_manifest(3, 5, True)]
    write_manifests(ms, tmp_path / "m.jsonl")
    assert main(["--pretty", "dataset-stats", str(tmp_path / "m.jsonl"), "--source", "PlanetScope"]) == 0
    cap = capsys.readouterr()
    assert json.loads(cap.out) == {"total_sequences": 4, "confirmed_events": 3, "avg_images_per_sequence": 3}
    assert cap.err.splitlines()[2].split() == ["PlanetScope", "4", "3", "3"]


def test_dataset_stats_empty_manifest(tmp_path, capsys):
    (tmp_path / "m.jsonl").write_text("")
    assert main(["dataset-stats", str(tmp_path / "m.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out) == {"total_sequences": 0, "confirmed_events": 0, "avg_images_per_sequence": 0}


def test_dataset_stats_parse_error_names_line(tmp_path, capsys):
    (tmp_path / "m.jsonl").write_text(json.dumps(make_manifest(0, 2, True).to_dict()) + "\nnot json\n")
    assert main(["dataset-stats", str(tmp_path / "m.jsonl")]) == 1
    assert "record 2" in capsys.readouterr().err


def test_gazetteer_validate(bench_dir, tmp_path, capsys):
    assert main(["gazetteer-validate", str(bench_dir / "gazetteer.tsv")]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True
    (tmp_path / "bad.tsv").write_text("Alpha\t1.0\t2.0\t0.9\t1.1\t1.9\t2.1\nBeta\t95\t0\t0\t1\t0\t1\n")
    assert main(["gazetteer-validate", str(tmp_path / "bad.tsv")]) == 1
    assert "line 2" in capsys.readouterr().err


def test_module_entry_point(bench_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "newsgeo", "gazetteer-validate", str(bench_dir / "gazetteer.tsv")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["entries"] > 0
