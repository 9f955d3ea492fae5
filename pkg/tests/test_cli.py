import csv
import io

import numpy as np
import pytest

from membound.bench import CSV_COLUMNS, BenchConfig, ConfigError, parse_grid, run_bench
from membound.bound import write_records_csv
from membound.cli import main
from conftest import three_records

TIMING = {"time_s", "it_ms"}


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def records_file(tmp_path):
    path = tmp_path / "records.csv"
    write_records_csv(path, three_records())
    return path


def test_bench_csv_columns(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["bench", "--problem", "quad", "--n", "30", "--method", "fgm,ogmm", "--bundle", "1,2",
                 "--eps-rel", "1e-3", "--out", str(out)])
    assert code == 0
    rows = _rows(out.read_text())
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert [(r["method"], r["bundle"]) for r in rows] == [("fgm", "1"), ("ogmm", "1"), ("ogmm", "2")]
    assert all(r["termination"] == "converged" for r in rows)


def test_bench_deterministic_apart_from_timing(capsys):
    texts = []
    for _ in range(2):
        assert main(["bench", "--n", "40", "--method", "gm,fgm,ogm,ogmm", "--bundle", "2", "--eps-rel", "1e-3"]) == 0
        texts.append(capsys.readouterr().out)
    a, b = (_rows(t) for t in texts)
    strip = [[{k: v for k, v in r.items() if k not in TIMING} for r in rows] for rows in (a, b)]
    assert strip[0] == strip[1]


def test_bench_markdown(capsys):
    assert main(["bench", "--n", "20", "--method", "ogm", "--format", "md"]) == 0
    assert capsys.readouterr().out.startswith("| Method")


@pytest.mark.parametrize("argv", [
    ["--method", ""],
    ["--method", "newton"],
    ["--bundle", "0"],
    ["--eps-rel", "0"],
    ["--L-scale", "-1"],
    ["--audit", "bogus"],
])
def test_bench_config_errors(argv, capsys):
    assert main(["bench", "--n", "10", *argv]) == 2
    assert "error:" in capsys.readouterr().err


def test_bench_abort_exit_code(capsys):
    # a step 100 times too long makes gradient descent diverge to overflow
    code = main(["bench", "--n", "20", "--method", "gm", "--L-scale", "0.01", "--max-outer", "5000"])
    assert code == 3
    captured = capsys.readouterr()
    assert "non-finite" in captured.err
    assert _rows(captured.out)[0]["termination"] == "aborted"


def test_run_bench_config_object():
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(methods=[]))


def test_parse_grid():
    assert np.allclose(parse_grid("-2:2:1"), [-2, -1, 0, 1, 2])
    assert len(parse_grid("-2:2:0.01")) == 401
    for bad in ("1:2", "2:1:0.1", "0:1:0", "a:b:c"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_bound_curve_three_records(records_file, tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["bound-curve", "--records", str(records_file), "--L", "1", "--grid", "-2:2:0.01", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert list(rows[0]) == ["y", "l", "p", "psi_1", "psi_2", "psi_3"]
    y = np.array([float(r["y"]) for r in rows])
    p = np.array([float(r["p"]) for r in rows])
    l_col = np.array([float(r["l"]) for r in rows])
    lines = np.max([rec.f + rec.g[0] * (y - rec.z[0]) for rec in three_records()], axis=0)
    assert np.allclose(l_col, lines, atol=1e-12)
    assert np.all(p >= l_col - 1e-9)
    for rec in three_records():
        k = np.argmin(np.abs(y - rec.z[0]))
        assert abs(p[k] - rec.f) <= 1e-6


def test_bound_curve_negative_grid_to_stdout(records_file, capsys):
    assert main(["bound-curve", "--records", str(records_file), "--L", "1", "--grid", "-2:2:1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [float(r["p"]) for r in rows] == pytest.approx([1.0, 0.5, 0.5, 1.5, 3.0], abs=1e-9)


def test_bound_curve_non_interpolable(records_file, capsys):
    assert main(["bound-curve", "--records", str(records_file), "--L", "0.5", "--grid", "-2:2:1"]) == 2
    err = capsys.readouterr().err
    assert "not interpolable" in err and "(1, 3)" in err and "minimal feasible L is 1" in err


def test_bound_curve_missing_file(tmp_path, capsys):
    assert main(["bound-curve", "--records", str(tmp_path / "nope.csv"), "--L", "1", "--grid", "0:1:0.5"]) == 2
