"""Command-line surface: subcommands, exit codes, determinism, config files."""

import json
import os

import pytest

from lnmarkov.cli import run

R20 = ["--r0", "0.05", "--n", "20", "--tau", "0.25"]


def run_in(tmp_path, args, capsys=None):
    code = run(args + ["--out-dir", str(tmp_path)])
    out = err = ""
    if capsys is not None:
        cap = capsys.readouterr()
        out, err = cap.out, cap.err
    return code, out, err


def test_solve_writes_both_formats_and_reports_the_sum_rule(tmp_path, capsys):
    code, out, _ = run_in(tmp_path, ["solve", *R20, "--psi", "0.3"], capsys)
    assert code == 0
    assert "sum rule: PASS" in out
    assert (tmp_path / "solution.json").exists()
    assert (tmp_path / "libors.csv").exists()
    payload = json.loads((tmp_path / "solution.json").read_text())
    assert payload["n"] == 20


def test_solve_format_selector(tmp_path):
    code, _, _ = run_in(tmp_path, ["solve", *R20, "--psi", "0.3", "--format", "csv"])
    assert code == 0
    assert (tmp_path / "libors.csv").exists()
    assert not (tmp_path / "solution.json").exists()


def test_critical_reference_run(tmp_path, capsys):
    args = ["critical", *R20, "--i", "10", "--bracket", "0.3", "0.8"]
    code, out, _ = run_in(tmp_path, args, capsys)
    assert code == 0
    assert "psi_cr = 0.53" in out
    payload = json.loads((tmp_path / "critical.json").read_text())
    assert payload["psi_cr"] == pytest.approx(0.5325, abs=2e-3)


def test_critical_unbracketed_is_a_numeric_failure(tmp_path, capsys):
    args = ["critical", *R20, "--i", "10", "--bracket", "0.3", "0.4"]
    code, _, err = run_in(tmp_path, args, capsys)
    assert code == 3
    assert "numeric failure" in err


def test_missing_curve_source_is_a_config_error(tmp_path, capsys):
    code, _, err = run_in(tmp_path, ["solve", "--psi", "0.3"], capsys)
    assert code == 2
    assert "curve source" in err


def test_conflicting_curve_sources_rejected(tmp_path, capsys):
    curve = tmp_path / "c.csv"
    curve.write_text("t,P\n0,1\n")
    args = ["solve", *R20, "--curve-file", str(curve), "--psi", "0.3"]
    code, _, err = run_in(tmp_path, args, capsys)
    assert code == 2


def test_locus_csv_shape(tmp_path):
    args = ["locus", *R20, "--i", "10", "--psi-grid", "0.50:0.56:0.02"]
    code, _, _ = run_in(tmp_path, args)
    assert code == 0
    lines = (tmp_path / "locus.csv").read_text().splitlines()
    assert lines[0] == "psi,k,re,im,modulus"
    assert len(lines) == 1 + 9 * 4  # inclusive grid: 0.50 0.52 0.54 0.56


def test_psi_grid_endpoint_inclusion(tmp_path):
    # 0.3:0.7:0.05 has 9 points; the stop value itself must be included
    args = ["logn", *R20, "--i", "10", "--psi-grid", "0.3:0.7:0.05"]
    code, _, _ = run_in(tmp_path, args)
    assert code == 0
    lines = (tmp_path / "logn.csv").read_text().splitlines()
    assert lines[0] == "psi,log_N,log_f_inf"
    assert len(lines) == 10
    assert lines[-1].startswith("0.7")


def test_bad_psi_grid_is_a_config_error(tmp_path, capsys):
    for bad in ("0.3:0.7", "0.7:0.3:0.05", "0.3:0.7:-0.1", "a:b:c"):
        code, _, err = run_in(tmp_path, ["logn", *R20, "--i", "10", "--psi-grid", bad], capsys)
        assert code == 2


def test_table_defaults_reproduce_the_grid(tmp_path):
    code, _, _ = run_in(tmp_path, ["table1"])
    assert code == 0
    lines = (tmp_path / "table1.csv").read_text().splitlines()
    assert lines[0] == "r0,t_n,tau,psi_max_percent"
    assert len(lines) == 41
    assert "0.05,5,0.25,41.87" in lines
    assert "0.01,5,0.5,65.10" in lines


def test_table_markdown_option(tmp_path):
    code, _, _ = run_in(tmp_path, ["table1", "--markdown"])
    assert code == 0
    assert "41.87" in (tmp_path / "table1.md").read_text()


def test_integrand_reports_maxima(tmp_path, capsys):
    args = ["integrand", *R20, "--i", "10", "--psi", "0.52"]
    code, out, _ = run_in(tmp_path, args, capsys)
    assert code == 0
    assert "maxima" in out
    lines = (tmp_path / "integrand.csv").read_text().splitlines()
    assert lines[0] == "x,integrand"


def test_reruns_are_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        os.makedirs(out)
        assert run(["solve", *R20, "--psi", "0.3", "--out-dir", str(out)]) == 0
        assert run(["logn", *R20, "--i", "10", "--psi-grid", "0.4:0.6:0.1",
                    "--out-dir", str(out)]) == 0
    for name in ("solution.json", "libors.csv", "logn.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_equivalent_to_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("r0 = 0.05\nn = 20\ntau = 0.25\npsi = 0.3\n# comment\n")
    a = tmp_path / "a"
    b = tmp_path / "b"
    os.makedirs(a)
    os.makedirs(b)
    assert run(["solve", "--config", str(cfg), "--out-dir", str(a)]) == 0
    assert run(["solve", *R20, "--psi", "0.3", "--out-dir", str(b)]) == 0
    assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("r0 = 0.05\nn = 20\ntau = 0.25\npsi = 0.9\n")
    code, out, _ = run_in(tmp_path, ["solve", "--config", str(cfg), "--psi", "0.3"], capsys)
    assert code == 0
    payload = json.loads((tmp_path / "solution.json").read_text())
    assert payload["psi"].startswith("0.3")


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("volatility = 0.3\n")
    code, _, err = run_in(tmp_path, ["solve", "--config", str(cfg)], capsys)
    assert code == 2
    assert "volatility" in err


def test_solve_from_curve_file(tmp_path):
    from lnmarkov import flat_curve, write_curve_csv

    curve_path = tmp_path / "curve.csv"
    write_curve_csv(flat_curve("0.04", 8, "0.5", precision_bits=240), curve_path)
    code = run(["solve", "--curve-file", str(curve_path), "--psi", "0.2",
                "--out-dir", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "solution.json").read_text())
    assert payload["n"] == 8
