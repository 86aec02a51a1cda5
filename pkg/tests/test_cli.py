import io
import json
import shutil
import socket
import subprocess

import pytest

from ctxpress.cli import EXIT_BACKEND, EXIT_EVAL, EXIT_INPUT, EXIT_OK, build_parser, main
from ctxpress.filtering import select_units
from ctxpress.model import slice_text
from ctxpress.backends import MockProvider
from ctxpress.pipeline import score_document


def run(argv, stdin=""):
    out = io.StringIO()
    code = main(argv, stdin=io.StringIO(stdin), stdout=out)
    return code, out.getvalue()


@pytest.fixture
def sample_file(tmp_path, sample_text):
    path = tmp_path / "sample.txt"
    path.write_text(sample_text, encoding="utf-8")
    return path


def closed_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_ratio_zero_is_identity(sample_file, sample_text):
    code, out = run(["compress", str(sample_file), "--ratio", "0", "--backend", "mock"])
    assert code == EXIT_OK
    doc = score_document(sample_text, MockProvider())
    assert out == slice_text(sample_text, doc.region()) + "\n"


def test_padded_input_prints_scored_region():
    code, out = run(["compress", "--ratio", "0", "--backend", "mock"], stdin="\n\n  Hello there. Bye now.  \n")
    assert code == EXIT_OK and out == "Hello there. Bye now.\n"


def test_compress_is_deterministic(sample_file):
    argv = ["compress", str(sample_file), "--ratio", "0.5", "--unit", "phrase", "--backend", "mock"]
    first, second = run(argv), run(argv)
    assert first == second and first[0] == EXIT_OK
    assert len(first[1]) < len(sample_file.read_text())


@pytest.mark.parametrize("value", ["0.2", "0.35", "0.5", "0.65", "0.8", "0.13"])
def test_ratio_values_accepted(value):
    args = build_parser().parse_args(["compress", "--ratio", value])
    assert args.ratio == float(value)


@pytest.mark.parametrize("value", ["1.5", "-0.1", "50", "abc"])
def test_ratio_out_of_range_rejected(value, capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["compress", "--ratio", value])


@pytest.mark.parametrize("stdin", ["", "   \n\t\n"])
def test_empty_input_exits_3(stdin):
    assert run(["compress", "--backend", "mock"], stdin=stdin)[0] == EXIT_INPUT


def test_missing_file_exits_3(tmp_path):
    assert run(["compress", str(tmp_path / "nope.txt"), "--backend", "mock"])[0] == EXIT_INPUT


def test_unreachable_backend_exits_2(sample_file, caplog):
    code, out = run(["compress", str(sample_file), "--base-url", f"http://127.0.0.1:{closed_port()}/v1", "--max-parallel", "1"])
    assert code == EXIT_BACKEND
    assert out == ""
    assert "backend failure" in caplog.text


def test_json_and_manifest(tmp_path, sample_file):
    jpath, mpath = tmp_path / "out.json", tmp_path / "manifest.json"
    code, out = run(["compress", str(sample_file), "--backend", "mock", "--json", str(jpath), "--manifest", str(mpath)])
    assert code == EXIT_OK
    payload = json.loads(jpath.read_text())
    assert payload["config"]["reduction_ratio_p"] == 50.0
    (record,) = payload["documents"]
    assert record["result"]["compressed_text"] + "\n" == out
    manifest = json.loads(mpath.read_text())
    assert manifest["model_id"] == "mock" and manifest["config"] == payload["config"]


def test_baseline_drop_count_parity(tmp_path, sample_file, sample_text):
    jpath = tmp_path / "b.json"
    code, _ = run(["baseline", str(sample_file), "--backend", "mock", "--seed", "3", "--json", str(jpath)])
    assert code == EXIT_OK
    result = json.loads(jpath.read_text())["documents"][0]["result"]
    doc = score_document(sample_text, MockProvider())
    assert len(result["retained_unit_indices"]) == len(select_units(doc.units, 50).retained)
    assert result["threshold_bits"] is None


def test_baseline_seeds(sample_file):
    base = ["baseline", str(sample_file), "--backend", "mock"]
    assert run(base + ["--seed", "1"]) == run(base + ["--seed", "1"])
    assert run(base + ["--seed", "1"]) != run(base + ["--seed", "2"])
    assert run(base + ["--ratio", "0"])[1] == run(["compress", str(sample_file), "--backend", "mock", "--ratio", "0"])[1]


def test_visualize_formats(sample_file):
    code, page = run(["visualize", str(sample_file), "--backend", "mock"])
    assert code == EXIT_OK and page.startswith("<!DOCTYPE html>")
    code, ansi = run(["visualize", str(sample_file), "--backend", "mock", "--format", "ansi"])
    assert code == EXIT_OK and "\x1b[" in ansi


def test_token_and_sentence_units(sample_file):
    for unit in ("token", "sentence"):
        code, out = run(["compress", str(sample_file), "--backend", "mock", "--unit", unit, "--mode", "whole"])
        assert code == EXIT_OK and out.strip()


def test_jsonl_input(tmp_path):
    path = tmp_path / "docs.jsonl"
    path.write_text('{"id": "a", "text": "One fine day. Two more."}\n{"id": "b", "text": "Solo sentence here."}\n')
    code, out = run(["compress", str(path), "--backend", "mock", "--ratio", "0"])
    assert code == EXIT_OK
    rows = [json.loads(line) for line in out.splitlines()]
    assert [r["id"] for r in rows] == ["a", "b"]
    assert rows[1]["compressed_text"] == "Solo sentence here."


def test_cache_dir_reuse(tmp_path, sample_file):
    argv = ["compress", str(sample_file), "--backend", "mock", "--cache-dir", str(tmp_path / "cache")]
    cold = run(argv)
    assert any((tmp_path / "cache").rglob("*.json"))
    assert run(argv) == cold


# -- evaluate -------------------------------------------------------------------


def write(path, lines):
    path.write_text("".join(json.dumps(x) + "\n" for x in lines))
    return str(path)


def test_evaluate_identity_means(tmp_path):
    recs = write(tmp_path / "r.jsonl", [{"id": 1, "reference": "a b c d e", "candidate": "a b c d e"}])
    code, out = run(["evaluate", recs, "--metrics", "bleu,rouge1,rouge2,rougeL"])
    assert code == EXIT_OK
    assert out.splitlines()[1].split() == ["mean", "1.000", "1.000", "1.000", "1.000"]


def test_evaluate_against_identical_files(tmp_path):
    recs = write(tmp_path / "r.jsonl", [{"id": 1, "reference": "the cat sat", "candidate": "the cat"}])
    code, out = run(["evaluate", recs, "--against", recs, "--out", str(tmp_path / "rep.json")])
    assert code == EXIT_OK
    compressed_row = out.splitlines()[2]
    assert compressed_row.count("(0.000)") == 5
    report = json.loads((tmp_path / "rep.json").read_text())
    assert set(report["drops"].values()) == {0.0}


def test_evaluate_hand_scored(tmp_path):
    recs = write(
        tmp_path / "r.jsonl",
        [
            {"id": "a", "reference": "the cat", "candidate": "the cat sat"},
            {"id": "b", "reference": "x y", "candidate": "x y"},
            {"id": "c", "reference": "p q r s", "candidate": "p z"},
        ],
    )
    out_path = tmp_path / "rep.json"
    assert run(["evaluate", recs, "--metrics", "rouge1", "--out", str(out_path)])[0] == EXIT_OK
    report = json.loads(out_path.read_text())
    assert report["means"]["rouge1"] == pytest.approx((0.8 + 1.0 + 1 / 3) / 3)


def test_evaluate_empty_file_exits_4(tmp_path):
    path = tmp_path / "e.jsonl"
    path.write_text("")
    assert run(["evaluate", str(path)])[0] == EXIT_EVAL


def test_evaluate_unknown_metric_exits_4(tmp_path):
    recs = write(tmp_path / "r.jsonl", [{"id": 1, "reference": "a", "candidate": "a"}])
    assert run(["evaluate", recs, "--metrics", "bertscore"])[0] == EXIT_EVAL


# -- ingest ---------------------------------------------------------------------


def test_ingest_valid(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("".join(json.dumps({"id": f"d{i}", "text": f"Doc {i}."}) + "\n" for i in range(3)))
    code, out = run(["ingest", str(path)])
    assert code == EXIT_OK
    assert [json.loads(x)["id"] for x in out.splitlines()] == ["d0", "d1", "d2"]


def test_ingest_skips_bad_line(tmp_path, caplog):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "a", "text": "A."}\n{broken\n{"id": "c", "text": "C."}\n')
    code, out = run(["ingest", str(path)])
    assert code == EXIT_OK
    assert [json.loads(x)["id"] for x in out.splitlines()] == ["a", "c"]
    assert "malformed" in caplog.text


def test_ingest_max_chars_keeps_whole_first_sentence(tmp_path):
    text = "This first sentence is rather long. Second."
    path = tmp_path / "d.jsonl"
    path.write_text(json.dumps({"id": "a", "text": text}) + "\n")
    code, out = run(["ingest", str(path), "--max-chars", "10"])
    assert json.loads(out)["text"] == "This first sentence is rather long."
    code, out = run(["ingest", str(path), "--max-chars", "40"])
    assert json.loads(out)["text"] == "This first sentence is rather long."


def test_ingest_all_malformed_is_nonzero(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("nope\n[]\n")
    assert run(["ingest", str(path)])[0] != EXIT_OK


@pytest.mark.skipif(shutil.which("ctxpress") is None, reason="console script not installed")
def test_console_script(sample_file):
    proc = subprocess.run(
        ["ctxpress", "compress", str(sample_file), "--backend", "mock", "--ratio", "0"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == sample_file.read_text().strip()
