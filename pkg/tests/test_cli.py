import json
import subprocess
import sys

import numpy as np
import pytest

from randfam import dataio
from randfam.cli import EXIT_DOMAIN, EXIT_PARSE, EXIT_SIZE, main
from randfam.errors import InputFormatError
from randfam.stats import PairedSample


@pytest.fixture
def identity_csv(tmp_path):
    path = tmp_path / "identity.csv"
    path.write_text("x,y\n" + "".join(f"{i},{i}\n" for i in range(1, 11)))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("n, expected", [(10, "1334961"), (2, "1"), (1, "0")])
def test_count(capsys, n, expected):
    code, out, _ = run(capsys, "count", n)
    assert code == 0 and out == expected + "\n"


def test_count_overflow(capsys):
    code, out, err = run(capsys, "count", 40)
    assert code == EXIT_DOMAIN and out == "" and "128-bit" in err


def test_enumerate(capsys):
    assert run(capsys, "enumerate", 10, "--limit", 1)[1] == "2,1,4,3,6,5,8,7,10,9\n"
    assert run(capsys, "enumerate", 3)[1] == "2,3,1\n3,1,2\n"
    assert run(capsys, "enumerate", 1)[:2] == (0, "")


def test_enumerate_refuses_large(capsys):
    code, out, err = run(capsys, "enumerate", 13)
    assert code == EXIT_SIZE and out == "" and "--allow-large" in err


def test_sample(capsys):
    code, out, _ = run(capsys, "sample", 6, "--count", 50, "--seed", 4)
    rows = [tuple(map(int, line.split(","))) for line in out.splitlines()]
    assert code == 0 and len(rows) == 50
    assert all(sorted(r) == list(range(1, 7)) and all(v != j for j, v in enumerate(r, 1)) for r in rows)
    assert out == run(capsys, "sample", 6, "--count", 50, "--seed", 4)[1]


def test_test_exact_report(capsys, identity_csv):
    code, out, err = run(capsys, "test", identity_csv, "--stat", "slope", "--mode", "exact",
                         "--shapiro", "--kde")
    assert code == 0
    report = json.loads(out)
    res = report["result"]
    assert report["schema_version"] == dataio.REPORT_SCHEMA_VERSION
    assert res["family_size"] == 1334961
    assert abs(res["family"]["mean"] + 0.111) < 0.0005
    assert abs(res["family"]["sd"] - 0.315) < 0.002
    assert res["percentile_of_observed"] > 97.5
    assert report["shapiro_wilk"]["subsampled"] is True
    assert report["kde"]["source"] == "values"
    assert len(report["kde"]["grid"]) == 512
    assert sum(report["histogram"]["counts"]) == 1334961
    assert dataio.load_report(dataio.dump_report(report)) == report


def test_test_mc_reports_are_byte_identical(capsys, identity_csv, tmp_path):
    outs = []
    for threads in (1, 2):
        target = tmp_path / f"r{threads}.json"
        code, _, _ = run(capsys, "test", identity_csv, "--mode", "mc", "--samples", 200000,
                         "--seed", 7, "--threads", threads, "--out", target)
        assert code == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_test_timing_flag(capsys, identity_csv):
    report = json.loads(run(capsys, "test", identity_csv, "--mode", "mc", "--timing")[1])
    assert report["duration_seconds"] > 0


def test_test_csv_formats(capsys, identity_csv):
    code, out, _ = run(capsys, "test", identity_csv, "--format", "csv", "--bins", 8)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "bin_lo,bin_hi,count" and len(lines) == 9
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == 1334961
    code, out, _ = run(capsys, "test", identity_csv, "--format", "csv", "--kde",
                       "--kde-grid", 64)
    assert out.splitlines()[0] == "x,density" and len(out.splitlines()) == 65


def test_test_kde_from_histogram_when_not_retained(tmp_path, capsys, monkeypatch):
    # shrink retention so the density falls back to weighted bin midpoints
    import randfam.engine as engine

    path = tmp_path / "d.csv"
    path.write_text("".join(f"{i},{i % 3}\n" for i in range(8)))
    orig = engine.RfmConfig

    def small_cap(**kw):
        return orig(**{**kw, "retention_cap": 10})

    monkeypatch.setattr("randfam.cli.RfmConfig", small_cap)
    code, out, err = run(capsys, "test", path, "--kde", "--shapiro")
    report = json.loads(out)
    assert code == 0
    assert report["kde"]["source"] == "histogram"
    assert "shapiro_wilk" not in report and "Shapiro" in err


def test_test_errors(capsys, tmp_path):
    two = tmp_path / "two.csv"
    two.write_text("1,2\n3,4\n")
    code, _, err = run(capsys, "test", two)
    assert code == EXIT_DOMAIN and "n >= 3" in err

    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n3,abc\n5,6\n")
    code, _, err = run(capsys, "test", bad)
    assert code == EXIT_PARSE and "line 3, column 2" in err

    flat = tmp_path / "flat.csv"
    flat.write_text("1,2\n1,3\n1,4\n")
    code, _, err = run(capsys, "test", flat)
    assert code == EXIT_DOMAIN and "x has zero variance" in err

    big = tmp_path / "big.csv"
    big.write_text("".join(f"{i},{i}\n" for i in range(13)))
    code, _, err = run(capsys, "test", big)
    assert code == EXIT_SIZE and "--mode mc" in err

    code, _, err = run(capsys, "test", tmp_path / "missing.csv")
    assert code == EXIT_PARSE

    with pytest.raises(SystemExit) as exc:
        main(["test", str(two), "--samples", "10"])
    assert exc.value.code == 2


def test_kde_command(capsys, tmp_path):
    one = tmp_path / "one.txt"
    one.write_text("0\n")
    code, out, _ = run(capsys, "kde", one, "--bandwidth", 1, "--grid", 7)
    grid = dict(tuple(map(float, line.split(","))) for line in out.splitlines()[1:])
    assert code == 0 and grid[0.0] == pytest.approx(0.39894, abs=1e-5)

    pair = tmp_path / "pair.txt"
    pair.write_text("-1\n1\n")
    out = run(capsys, "kde", pair, "--bandwidth", 1, "--grid", 9)[1]
    grid = dict(tuple(map(float, line.split(","))) for line in out.splitlines()[1:])
    assert grid[0.0] == pytest.approx(0.24197, abs=1e-5)

    many = tmp_path / "many.txt"
    rng = np.random.default_rng(8)
    many.write_text("\n".join(repr(float(v)) for v in rng.standard_t(5, 700)))
    out = run(capsys, "kde", many)[1]
    g = np.array([list(map(float, line.split(","))) for line in out.splitlines()[1:]])
    assert abs(np.trapezoid(g[:, 1], g[:, 0]) - 1) < 0.02

    same = tmp_path / "same.txt"
    same.write_text("4\n4\n")
    code, _, err = run(capsys, "kde", same)
    assert code == EXIT_DOMAIN and "explicit bandwidth" in err


def test_csv_round_trip_is_exact(rng):
    s = PairedSample(rng.normal(size=50) * 1e-7, rng.standard_cauchy(size=50))
    text = dataio.format_paired_csv(s)
    back, header = dataio.parse_paired_csv(text)
    assert header
    assert back.x.tobytes() == s.x.tobytes() and back.y.tobytes() == s.y.tobytes()
    assert dataio.format_paired_csv(back) == text


def test_csv_parsing_details():
    s, header = dataio.parse_paired_csv('"1.5";2\n\n3;4\n5;"6e0"\n', delimiter=";")
    assert not header and s.x.tolist() == [1.5, 3, 5] and s.y.tolist() == [2, 4, 6]
    with pytest.raises(InputFormatError, match="line 2: expected 2 columns"):
        dataio.parse_paired_csv("1,2\n3\n5,6\n")
    with pytest.raises(InputFormatError, match="not finite"):
        dataio.parse_paired_csv("1,2\n3,inf\n5,6\n")


def test_env_threads(identity_csv, tmp_path):
    env_run = subprocess.run(
        [sys.executable, "-m", "randfam.cli", "test", str(identity_csv), "--mode", "mc",
         "--seed", "1"],
        capture_output=True, text=True, env={"RANDFAM_THREADS": "2", "PATH": ""},
    )
    assert env_run.returncode == 0, env_run.stderr
    plain = subprocess.run(
        [sys.executable, "-m", "randfam.cli", "test", str(identity_csv), "--mode", "mc",
         "--seed", "1"],
        capture_output=True, text=True,
    )
    assert env_run.stdout == plain.stdout
    assert env_run.stderr == ""
