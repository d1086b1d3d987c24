import csv
import io
import json
import math
import os

import pytest

from classprime import cli
from classprime.cli import UsageError, eval_scale, fmt_num, parse_scale


def run_cli(argv, capsys):
    rc = cli.main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# ---------------------------------------------------------------------------
# scale rules

def test_parse_scale():
    assert parse_scale("1000") == (1000.0, 0.0, 0.0)
    assert parse_scale("h*log2.1") == (1.0, 1.0, 2.1)
    assert parse_scale("h2*log2") == (1.0, 2.0, 2.0)
    assert parse_scale("100*h2*log2") == (100.0, 2.0, 2.0)
    assert parse_scale("0.5*h") == (0.5, 1.0, 0.0)
    assert parse_scale("h*h*log") == (1.0, 2.0, 1.0)


def test_parse_scale_rejects_junk():
    for bad in ("x2", "h2+log2", "log2*junk", ""):
        with pytest.raises(UsageError):
            parse_scale(bad)


def test_eval_scale():
    assert eval_scale("h2*log2", 5, 1000) == pytest.approx(25 * math.log(1000) ** 2)
    assert eval_scale("42", 999, 10**6) == 42.0


def test_fmt_num():
    assert fmt_num(None) == "none@cap"
    assert fmt_num(True) == "1" and fmt_num(False) == "0"
    assert fmt_num(3) == "3"
    assert fmt_num(math.pi) == "3.14159265359"
    assert fmt_num(1e-13) == "1e-13"


# ---------------------------------------------------------------------------
# subcommands, happy paths

def test_forms_csv(capsys):
    rc, out, err = run_cli(["forms", "--disc", "-23"], capsys)
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["a"] for r in rows] == ["1", "2", "2"]
    assert "# h=3" in err


def test_forms_json_matches_csv(capsys):
    rc, out_csv, _ = run_cli(["forms", "--disc", "-84"], capsys)
    rc2, out_json, _ = run_cli(["forms", "--disc", "-84", "--format", "json"], capsys)
    assert rc == rc2 == 0
    data = json.loads(out_json)
    assert data["h"] == 4 and data["orders"] == [2, 2]
    csv_rows = list(csv.DictReader(io.StringIO(out_csv)))
    assert len(csv_rows) == len(data["rows"]) == 4
    for got, want in zip(csv_rows, data["rows"]):
        assert int(got["a"]) == want["a"]
        assert int(got["b"]) == want["b"]
        assert int(got["c"]) == want["c"]


def test_least_primes_schema(capsys):
    rc, out, err = run_cli(["least-primes", "--disc", "-23"], capsys)
    assert rc == 0
    reader = csv.reader(io.StringIO(out))
    header = next(reader)
    assert header == [
        "class_index",
        "a",
        "b",
        "c",
        "heegner_im",
        "least_prime",
        "is_ramified_prime",
    ]
    body = list(reader)
    assert [r[5] for r in body] == ["23", "2", "2"]
    assert [r[6] for r in body] == ["1", "0", "0"]  # 23 | D, 2 does not
    assert "# r_ideal_at_x_h2_log2=0" in err


def test_least_primes_none_at_cap(capsys):
    rc, out, _ = run_cli(
        ["least-primes", "--disc", "-23", "--x-cap", "10"], capsys
    )
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["least_prime"] == "none@cap"


def test_variance_csv_json_parity(capsys):
    args = ["variance", "--disc", "-23", "--t", "1000", "--weight", "bump"]
    rc, out_csv, _ = run_cli(args, capsys)
    rc2, out_json, _ = run_cli(args + ["--format", "json"], capsys)
    assert rc == rc2 == 0
    row = next(csv.DictReader(io.StringIO(out_csv)))
    data = json.loads(out_json)["rows"][0]
    for key in ("variance", "variance_spectral", "psi_total", "var_ratio"):
        assert float(row[key]) == pytest.approx(data[key], rel=1e-12)
    payload = json.loads(out_json)
    assert len(payload["psi_by_class"]) == 3
    assert len(payload["psi_by_char_abs"]) == 3


def test_dirichlet_check_ok(capsys):
    rc, out, _ = run_cli(["dirichlet-check", "--disc", "-47", "--n-max", "800"], capsys)
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["status"] == "ok" and row["max_split_r"] == "4"


def test_dirichlet_check_oracle_mismatch_exit_4(monkeypatch, capsys):
    import numpy as np

    from classprime import arith

    real = arith.dirichlet_r_upto

    def corrupted(nmax, d):
        out = real(nmax, d)
        out[7] += 2  # sabotage one value
        return out

    monkeypatch.setattr(arith, "dirichlet_r_upto", corrupted)
    rc, out, err = run_cli(["dirichlet-check", "--disc", "-23", "--n-max", "50"], capsys)
    assert rc == 4
    assert "oracle mismatch" in err
    row = next(csv.DictReader(io.StringIO(out)))  # row still emitted first
    assert row["status"] == "mismatch" and row["first_mismatch"] == "7"


def test_heegner_summary(capsys):
    rc, out, err = run_cli(["heegner", "--disc", "-23", "--psi-value", "1.0"], capsys)
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert float(rows[0]["heegner_im"]) == pytest.approx(math.sqrt(23) / 2)
    assert "# coefficient_bound_fraction=0.666666666667" in err
    assert "# pairing_constant=3.14159265359" in err


def test_scan_small_range(capsys):
    rc, out, _ = run_cli(["scan", "--range", "-30", "-3"], capsys)
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    ds = [int(r["d"]) for r in rows]
    assert ds == sorted(ds, reverse=True)
    assert ds[0] == -3  # decreasing D means increasing |D|
    assert set(r["h"] for r in rows if r["d"] == "-23") == {"3"}


def test_scan_json_is_array(capsys):
    rc, out, _ = run_cli(["scan", "--range", "-30", "-3", "--format", "json"], capsys)
    assert rc == 0
    data = json.loads(out)
    assert isinstance(data, list)
    assert data[0]["d"] == -3


def test_scan_skips_nonfundamental(capsys):
    rc, out, _ = run_cli(["scan", "--range", "-16", "-3"], capsys)
    assert rc == 0
    ds = [int(r["d"]) for r in csv.DictReader(io.StringIO(out))]
    assert -12 not in ds and -16 not in ds and -9 not in ds
    assert ds == [-3, -4, -7, -8, -11, -15]


def test_selftest_subset(capsys):
    rc, out, err = run_cli(["selftest", "--only", "7"], capsys)
    assert rc == 0
    assert "PASS criterion 7" in out


# ---------------------------------------------------------------------------
# exit codes

def test_exit_2_bad_disc(capsys):
    for argv in (
        ["forms", "--disc", "5"],
        ["forms", "--disc", "-6"],
        ["forms"],
        ["variance", "--disc", "-23"],  # missing --t
        ["variance", "--disc", "-23", "--t", "1"],
        ["scan"],  # missing --range
    ):
        rc, _, err = run_cli(argv, capsys)
        assert rc == 2, argv
        assert "error:" in err


def test_exit_2_nonfundamental_in_scan_path(capsys):
    # scan skips them; direct commands accept with strict=False
    rc, out, err = run_cli(["forms", "--disc", "-12"], capsys)
    assert rc == 0  # forms tolerates non-fundamental input
    rc, _, err = run_cli(["least-primes", "--disc", "-12", "--x-cap", "bogus*"], capsys)
    assert rc == 2


def test_exit_3_identity_violation(monkeypatch, capsys):
    from classprime import stats

    def broken(g, T, w, **kw):
        raise stats.IdentityMismatch("forced for the exit-code contract")

    monkeypatch.setattr(stats, "variance_report", broken)
    rc, _, err = run_cli(["variance", "--disc", "-23", "--t", "100"], capsys)
    assert rc == 3
    assert "identity violation" in err


def test_sieve_cap_exit_2(capsys):
    rc, _, err = run_cli(
        ["variance", "--disc", "-23", "--t", "1e9", "--sieve-cap", "100000"], capsys
    )
    assert rc == 2
    assert "error:" in err


# ---------------------------------------------------------------------------
# config file, env, precedence

def test_config_file_supplies_options(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("disc = -23\nt = 1000\nweight = indicator\n# comment\n\n")
    rc, out, _ = run_cli(["variance", "--config", str(cfg)], capsys)
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["weight"] == "indicator" and row["t"] == "1000"


def test_flag_beats_config(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("disc = -23\nt = 1000\nweight = indicator\n")
    rc, out, _ = run_cli(
        ["variance", "--config", str(cfg), "--weight", "bump"], capsys
    )
    assert rc == 0
    assert next(csv.DictReader(io.StringIO(out)))["weight"] == "bump"


def test_bad_config_line_exit_2(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("this line has no equals sign\n")
    rc, _, err = run_cli(["forms", "--config", str(cfg), "--disc", "-23"], capsys)
    assert rc == 2


def test_missing_config_exit_2(capsys):
    rc, _, err = run_cli(["forms", "--config", "/nonexistent.conf", "--disc", "-23"], capsys)
    assert rc == 2


def test_threads_env_fallback(monkeypatch):
    import argparse

    args = argparse.Namespace(threads=None)
    monkeypatch.setenv("CLASSPRIME_THREADS", "7")
    assert cli._resolve_threads(args, {}) == 7
    assert cli._resolve_threads(args, {"threads": "3"}) == 3  # config beats env
    args.threads = 2
    assert cli._resolve_threads(args, {}) == 2  # flag beats all
    monkeypatch.delenv("CLASSPRIME_THREADS")
    args.threads = None
    assert cli._resolve_threads(args, {}) == 1


def test_out_file(tmp_path, capsys):
    path = tmp_path / "forms.csv"
    rc = cli.main(["forms", "--disc", "-23", "--out", str(path)])
    assert rc == 0
    text = path.read_text()
    assert text.startswith("class_index,a,b,c\n")
    assert text.count("\n") == 4


def test_scan_deterministic_across_threads(tmp_path):
    p1, p4 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["scan", "--range", "-300", "-3", "--threads", "1", "--out", str(p1)]) == 0
    assert cli.main(["scan", "--range", "-300", "-3", "--threads", "4", "--out", str(p4)]) == 0
    assert p1.read_bytes() == p4.read_bytes()


def test_scan_x_rules_shape_columns(capsys):
    rc, out, _ = run_cli(
        ["scan", "--range", "-30", "-3", "--x-rule", "h*log2", "--x-rule", "50"],
        capsys,
    )
    assert rc == 0
    header = out.splitlines()[0].split(",")
    assert header[:8] == ["d", "h", "x1", "r1_ideal", "r1_prime", "x2", "r2_ideal", "r2_prime"]
