import json
from pathlib import Path

import pytest

from conftest import FIXTURES
from mbicl.cli import main
from mbicl.corpus import save_jsonl
from mbicl.selection import load_example_set


@pytest.fixture
def corpus_file(toy_corpus, tmp_path):
    path = tmp_path / "dev.jsonl"
    save_jsonl(toy_corpus, path)
    return path


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_score_cr(corpus_file, tmp_path, capsys):
    out = tmp_path / "scores.jsonl"
    code, _, _ = run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", out)
    assert code == 0
    assert len(out.read_text().strip().splitlines()) == 6


def test_score_sari_single_reference_is_data_error(tmp_path, capsys):
    path = tmp_path / "single.jsonl"
    path.write_text('{"id":"0","source":"A cat sat.","references":["A cat."]}\n')
    out = tmp_path / "scores.jsonl"
    code, _, err = run_cli(capsys, "score", path, "--metric", "sari", "-o", out)
    assert code == 2
    assert "reference" in err.lower()


def test_score_bertprec_without_backend_is_usage_error(corpus_file, tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "score", corpus_file, "--metric", "bertprec",
        "-o", tmp_path / "s.jsonl",
    )
    assert code == 1


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "score", "--nope")
    assert code == 1


def test_select_roundtrip(corpus_file, tmp_path, capsys):
    scores = tmp_path / "scores.jsonl"
    run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", scores)
    out = tmp_path / "set.json"
    code, _, _ = run_cli(capsys, "select", scores, "--k", "2", "-o", out)
    assert code == 0
    chosen = load_example_set(out)
    assert len(chosen.pairs) == 2
    assert chosen.ordering == "high-to-low"


def test_select_orderings_are_reverses(corpus_file, tmp_path, capsys):
    scores = tmp_path / "scores.jsonl"
    run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", scores)
    hi = tmp_path / "hi.json"
    lo = tmp_path / "lo.json"
    run_cli(capsys, "select", scores, "--k", "3", "--ordering", "high-to-low", "-o", hi)
    run_cli(capsys, "select", scores, "--k", "3", "--ordering", "low-to-high", "-o", lo)
    hi_keys = [p.key for p in load_example_set(hi).pairs]
    lo_keys = [p.key for p in load_example_set(lo).pairs]
    assert hi_keys == list(reversed(lo_keys))


def test_select_random_same_seed_identical(corpus_file, tmp_path, capsys):
    scores = tmp_path / "scores.jsonl"
    run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", scores)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code, _, _ = run_cli(
            capsys, "select", scores, "--k", "3", "--ordering", "random",
            "--seed", "7", "-o", out,
        )
        assert code == 0
    assert a.read_text() == b.read_text()


def test_select_random_without_seed_is_usage_error(corpus_file, tmp_path, capsys):
    scores = tmp_path / "scores.jsonl"
    run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", scores)
    code, _, _ = run_cli(
        capsys, "select", scores, "--k", "2", "--ordering", "random",
        "-o", tmp_path / "x.json",
    )
    assert code == 1


def test_build_prompt_zero_shot(capsys):
    code, out, _ = run_cli(capsys, "build-prompt", "--query", "A big cat runs.")
    assert code == 0
    assert out.count("Complex sentence:") == 1
    assert out.endswith("Simple sentence:")


def test_build_prompt_with_examples(corpus_file, tmp_path, capsys):
    scores = tmp_path / "scores.jsonl"
    run_cli(capsys, "score", corpus_file, "--metric", "cr", "-o", scores)
    set_path = tmp_path / "set.json"
    run_cli(capsys, "select", scores, "--k", "2", "-o", set_path)
    code, out, _ = run_cli(
        capsys, "build-prompt", "--example-set", set_path, "--query", "A query."
    )
    assert code == 0
    assert out.count("Complex sentence:") == 3


def test_run_end_to_end_echo(corpus_file, tmp_path, capsys):
    report_dir = tmp_path / "reports"
    code, out, _ = run_cli(
        capsys, "run", "--tune", corpus_file, "--test", FIXTURES / "echo_corpus.jsonl",
        "--backend", "mock-echo", "--method", "sari", "--k", "2",
        "--cache", tmp_path / "cache.jsonl", "--report", report_dir,
    )
    assert code == 0
    report_files = list(Path(report_dir).glob("*.json"))
    assert len(report_files) == 1
    report = json.loads(report_files[0].read_text())
    pins = json.loads((FIXTURES / "echo_pins.json").read_text())
    assert report["sari"] == pytest.approx(pins["sari"], abs=1e-9)
    # flags appear verbatim in the manifest
    assert report["manifest"]["k"] == 2
    assert report["manifest"]["bleu_order"] == 4


def test_run_warm_cache_is_identical(corpus_file, tmp_path, capsys):
    args = (
        "run", "--tune", corpus_file, "--test", FIXTURES / "echo_corpus.jsonl",
        "--backend", "mock-echo", "--method", "cr", "--k", "2",
        "--cache", tmp_path / "cache.jsonl",
    )
    run_cli(capsys, *args, "--report", tmp_path / "r1")
    cache_after_first = (tmp_path / "cache.jsonl").read_text()
    run_cli(capsys, *args, "--report", tmp_path / "r2")
    assert (tmp_path / "cache.jsonl").read_text() == cache_after_first
    a = next((tmp_path / "r1").glob("*.json")).read_text()
    b = next((tmp_path / "r2").glob("*.json")).read_text()
    assert a == b


def test_evaluate_command(tmp_path, capsys):
    preds = tmp_path / "preds.txt"
    corpus = FIXTURES / "pin_corpus.jsonl"
    preds.write_text((FIXTURES / "pin_predictions.txt").read_text())
    out = tmp_path / "report.json"
    code, _, _ = run_cli(
        capsys, "evaluate", "--test", corpus, "--predictions", preds, "-o", out
    )
    assert code == 0
    report = json.loads(out.read_text())
    pins = json.loads((FIXTURES / "metric_pins.json").read_text())
    assert report["sari"] == pytest.approx(pins["corpus_sari"], abs=1e-4)
    assert report["bleu"] == pytest.approx(pins["corpus_bleu_order4"], abs=1e-4)


def test_grid_requires_seed(corpus_file, tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "grid", "--tune", corpus_file, "--test", corpus_file,
        "--out-dir", tmp_path / "g",
    )
    assert code == 1


def test_grid_emits_reports_and_csv(corpus_file, tmp_path, capsys):
    out_dir = tmp_path / "g"
    code, out, _ = run_cli(
        capsys, "grid", "--tune", corpus_file, "--test",
        FIXTURES / "echo_corpus.jsonl", "--method", "cr",
        "--k-list", "1,2,4", "--seed", "0", "--out-dir", out_dir,
    )
    assert code == 0
    assert len(list(Path(out_dir).glob("cr-*.json"))) == 3
    assert (Path(out_dir) / "grid.csv").exists()
    assert "SARI" in out


def test_http_backend_missing_credentials_is_backend_error(
    corpus_file, tmp_path, capsys, monkeypatch
):
    monkeypatch.delenv("MBICL_API_KEY", raising=False)
    code, _, _ = run_cli(
        capsys, "run", "--tune", corpus_file, "--test", corpus_file,
        "--backend", "http", "--base-url", "http://127.0.0.1:1",
        "--method", "cr", "--k", "1", "--report", tmp_path / "r",
    )
    assert code == 3
