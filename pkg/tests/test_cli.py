"""Command line interface, driven through main() plus two process checks."""

import csv
import io
import json
import os
import shutil
import subprocess
import sys

import pytest

from gedsearch.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def metric_map(text):
    return {row["metric"]: row["value"] for row in csv_rows(text)}


@pytest.fixture(scope="module")
def built(toy_files, tmp_path_factory):
    path = tmp_path_factory.mktemp("idx") / "toy.idx"
    code = main(
        ["build", str(toy_files.dataset), "-o", str(path), "--block", "4"]
    )
    assert code == 0
    return path


# -- build ---------------------------------------------------------------------


def test_build_reports_metrics(toy_files, tmp_path, capsys):
    out = tmp_path / "toy.idx"
    code, stdout, stderr = run(
        ["build", str(toy_files.dataset), "-o", str(out), "--format", "csv"],
        capsys,
    )
    assert code == 0
    assert stderr == ""
    m = metric_map(stdout)
    assert m["graphs"] == "3"
    assert m["degree_vocabulary"] == "7"
    assert m["label_vocabulary"] == "4"
    assert m["regions"] == "1"
    for key in ("node_scalar_bytes", "degree_side_bytes", "label_side_bytes"):
        assert int(m[key]) > 0
    assert int(m["index_bytes"]) == os.path.getsize(out)
    assert float(m["build_seconds"]) >= 0


def test_build_table_format(toy_files, tmp_path, capsys):
    out = tmp_path / "toy.idx"
    code, stdout, _ = run(["build", str(toy_files.dataset), "-o", str(out)], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0].split() == ["metric", "value"]
    assert len(lines) == 10
    assert any(line.split() == ["graphs", "3"] for line in lines)


def test_build_is_deterministic(toy_files, tmp_path, capsys):
    a, b = tmp_path / "a.idx", tmp_path / "b.idx"
    for path in (a, b):
        code, _, _ = run(["build", str(toy_files.dataset), "-o", str(path)], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_empty_dataset_fails(tmp_path, capsys):
    data = tmp_path / "empty.txt"
    data.write_text("# nothing here\n")
    code, stdout, stderr = run(
        ["build", str(data), "-o", str(tmp_path / "x.idx")], capsys
    )
    assert code == 1
    assert stdout == ""
    assert stderr.startswith("error:")


def test_build_parse_error_fails(tmp_path, capsys):
    data = tmp_path / "bad.txt"
    data.write_text("t # 0\nv 0 A\ne 0 5\n")
    code, _, stderr = run(["build", str(data), "-o", str(tmp_path / "x.idx")], capsys)
    assert code == 1
    assert stderr.startswith("error:")
    assert "line 3" in stderr


def test_build_missing_dataset_fails(tmp_path, capsys):
    code, _, stderr = run(
        ["build", str(tmp_path / "absent.txt"), "-o", str(tmp_path / "x.idx")],
        capsys,
    )
    assert code == 1
    assert stderr.startswith("error:")


# -- query ----------------------------------------------------------------------


def test_query_within_threshold(built, toy_files, capsys):
    code, stdout, _ = run(
        [
            "query", str(built), str(toy_files.queries),
            "--tau", "3", "--format", "csv",
        ],
        capsys,
    )
    assert code == 0
    (row,) = csv_rows(stdout)
    assert row["query"] == "0"
    assert row["tau"] == "3"
    assert row["candidates"] == "2"
    assert row["answers"] == "0 2"
    assert row["unverified"] == ""
    assert float(row["filter_ms"]) >= 0
    assert float(row["verify_ms"]) >= 0


def test_query_below_threshold(built, toy_files, capsys):
    code, stdout, _ = run(
        [
            "query", str(built), str(toy_files.queries),
            "--tau", "2", "--format", "csv",
        ],
        capsys,
    )
    assert code == 0
    (row,) = csv_rows(stdout)
    assert row["candidates"] == "0"
    assert row["answers"] == ""


def test_query_formats_agree(built, toy_files, capsys):
    base = ["query", str(built), str(toy_files.queries), "--tau", "3"]
    _, table, _ = run(base, capsys)
    _, jsonl, _ = run(base + ["--format", "jsonl"], capsys)
    (record,) = [json.loads(line) for line in jsonl.splitlines()]
    assert record["answers"] == [0, 2]
    assert record["candidates"] == 2
    assert "0 2" in table


def test_query_requires_tau(built, toy_files, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["query", str(built), str(toy_files.queries)])
    assert exc.value.code == 2
    capsys.readouterr()


def test_query_unknown_labels(built, tmp_path, capsys):
    queries = tmp_path / "alien.txt"
    queries.write_text("t # 0\nv 0 Zz\nv 1 Zz\ne 0 1 qq\n")
    code, stdout, _ = run(
        ["query", str(built), str(queries), "--tau", "1", "--format", "csv"],
        capsys,
    )
    assert code == 0
    (row,) = csv_rows(stdout)
    assert row["candidates"] == "0"


def test_query_corrupt_index_fails(toy_files, tmp_path, capsys):
    bad = tmp_path / "bad.idx"
    bad.write_bytes(b"junk")
    code, _, stderr = run(
        ["query", str(bad), str(toy_files.queries), "--tau", "1"], capsys
    )
    assert code == 1
    assert stderr.startswith("error:")


def test_query_missing_index_fails(toy_files, tmp_path, capsys):
    code, _, stderr = run(
        ["query", str(tmp_path / "no.idx"), str(toy_files.queries), "--tau", "1"],
        capsys,
    )
    assert code == 1
    assert stderr.startswith("error:")


# -- stats -----------------------------------------------------------------------


def test_stats_report(built, capsys):
    code, stdout, _ = run(["stats", str(built), "--format", "csv"], capsys)
    assert code == 0
    m = metric_map(stdout)
    assert m["graphs"] == "3"
    assert m["regions"] == "1"
    assert int(m["tree_bytes"]) <= int(m["plain_tree_bytes"])
    assert 0 < float(m["succinct_ratio"]) <= 1
    for side in ("degree", "label"):
        fixed = float(m[f"psi_{side}_fixed_bits_per_entry"])
        gamma = float(m[f"psi_{side}_gamma_bits_per_entry"])
        hybrid = float(m[f"psi_{side}_hybrid_bits_per_entry"])
        assert hybrid <= fixed
        assert hybrid <= gamma
        assert hybrid > 0


# -- bench -----------------------------------------------------------------------


def test_bench_sweep(built, toy_files, capsys):
    code, stdout, _ = run(
        ["bench", str(built), str(toy_files.queries), "--tau", "2,3,4"], capsys
    )
    assert code == 0
    rows = csv_rows(stdout)
    assert [r["tau"] for r in rows] == ["2", "3", "4"]
    assert all(r["queries"] == "1" for r in rows)
    counts = [float(r["avg_candidates"]) for r in rows]
    assert counts == sorted(counts)
    assert counts[1] == 2.0


def test_bench_header(built, toy_files, capsys):
    code, stdout, _ = run(
        ["bench", str(built), str(toy_files.queries), "--tau", "3"], capsys
    )
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0].split(",") == [
        "tau", "queries", "avg_candidates", "avg_filter_ms", "avg_verify_ms",
    ]
    assert len(lines) == 2


def test_bench_bad_tau_list(built, toy_files, capsys):
    code, _, stderr = run(
        ["bench", str(built), str(toy_files.queries), "--tau", "1,x"], capsys
    )
    assert code == 1
    assert "bad --tau" in stderr


# -- process-level wiring ----------------------------------------------------------


def test_python_m_entry_point(toy_files, tmp_path):
    out = tmp_path / "toy.idx"
    proc = subprocess.run(
        [sys.executable, "-m", "gedsearch",
         "build", str(toy_files.dataset), "-o", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "graphs" in proc.stdout
    assert out.exists()


def test_console_script(toy_files, tmp_path):
    exe = shutil.which("gedsearch")
    if exe is None:
        pytest.skip("console script not installed")
    out = tmp_path / "toy.idx"
    build = subprocess.run(
        [exe, "build", str(toy_files.dataset), "-o", str(out)],
        capture_output=True,
        text=True,
    )
    assert build.returncode == 0
    q = subprocess.run(
        [exe, "query", str(out), str(toy_files.queries), "--tau", "3",
         "--format", "jsonl"],
        capture_output=True,
        text=True,
    )
    assert q.returncode == 0
    assert json.loads(q.stdout.splitlines()[0])["answers"] == [0, 2]
