import json
import subprocess
import sys

import pytest

from riskdiff.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pvalue_text_report(capsys):
    code, out, err = run_cli(capsys, "pvalue", "--nt", "6", "--nc", "6",
                             "--xt", "6", "--xc", "0", "--margin", "0.05",
                             "--method", "chan")
    assert code == 0 and err == ""
    assert "p-value: 0.000131924" in out
    assert "nuisance argmax: 0.525" in out


def test_pvalue_json_schema(capsys):
    code, out, _ = run_cli(capsys, "pvalue", "--nt", "6", "--nc", "6",
                           "--xt", "6", "--xc", "0", "--margin", "0.05",
                           "--method", "chan", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "riskdiff/1"
    assert doc["method"] == "chan"
    assert doc["p_value"] == pytest.approx(0.000131924, abs=1e-7)
    assert doc["nuisance_argmax"] == pytest.approx(0.525, abs=1e-3)
    assert doc["grid_points"] == 1001
    assert doc["convention"] == "delta"


def test_json_round_trip_is_byte_stable(capsys):
    args = ("ci", "--method", "mee", "--nt", "6", "--nc", "6", "--xt", "5",
            "--xc", "2", "--alpha", "0.05", "--format", "json")
    code, out, _ = run_cli(capsys, *args)
    assert code == 0
    redump = json.dumps(json.loads(out), sort_keys=True, indent=2) + "\n"
    assert redump == out


def test_margin_out_of_range_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "pvalue", "--nt", "6", "--nc", "6",
                           "--xt", "6", "--xc", "0", "--margin", "1.2",
                           "--method", "chan")
    assert code == 1
    assert "margin" in err


def test_zero_margin_allowed_for_the_exact_test(capsys):
    code, out, _ = run_cli(capsys, "pvalue", "--nt", "2", "--nc", "2",
                           "--xt", "2", "--xc", "0", "--margin", "0",
                           "--method", "chan", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert 0.0 < doc["p_value"] < 1.0


def test_bad_counts_are_usage_errors(capsys):
    code, _, err = run_cli(capsys, "pvalue", "--nt", "6", "--nc", "6",
                           "--xt", "7", "--xc", "0", "--margin", "0.05")
    assert code == 1 and "counts" in err
    code, _, err = run_cli(capsys, "stat", "--nt", "0", "--nc", "6",
                           "--xt", "0", "--xc", "0", "--margin", "0.05")
    assert code == 1
    code, _, err = run_cli(capsys, "pvalue", "--nt", "six", "--nc", "6",
                           "--xt", "1", "--xc", "0", "--margin", "0.05")
    assert code == 1


def test_degenerate_calibration_exit_code(capsys):
    code, _, err = run_cli(capsys, "stat", "--method", "ec", "--nt", "6",
                           "--nc", "6", "--xt", "0", "--xc", "6",
                           "--margin", "0.05")
    assert code == 3
    assert "degenerate" in err


def test_ci_convention_flips_sign_exactly(capsys):
    base = ("ci", "--method", "mee", "--nt", "6", "--nc", "6", "--xt", "6",
            "--xc", "0", "--alpha", "0.05", "--format", "json")
    _, out_delta, _ = run_cli(capsys, *base, "--convention", "delta")
    _, out_cap, _ = run_cli(capsys, *base, "--convention", "cap")
    d = json.loads(out_delta)
    c = json.loads(out_cap)
    assert d["hull"][0] == -c["hull"][1]
    assert d["hull"][1] == -c["hull"][0]
    # spec'd endpoint behavior: estimate on the domain boundary keeps
    # the scan-edge value
    assert c["hull"][1] == 1.0 - 1e-9


def test_ci_ec_excludes_the_margin_boundary(capsys):
    code, out, _ = run_cli(capsys, "ci", "--method", "ec", "--nt", "6",
                           "--nc", "6", "--xt", "6", "--xc", "0",
                           "--margin", "0.05", "--alpha", "0.05",
                           "--convention", "delta", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    lo, hi = doc["hull"]
    assert not (lo <= 0.05 <= hi)
    assert doc["reject_noninferiority"] is True


def test_stat_reports_the_boundary_statistic(capsys):
    code, out, _ = run_cli(capsys, "stat", "--method", "ec", "--nt", "6",
                           "--nc", "6", "--xt", "6", "--xc", "0",
                           "--margin", "0.05", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["statistic"] == pytest.approx(3.64843, abs=1e-5)


def test_diagnose_zec_default_window_finds_certificates(capsys):
    code, out, _ = run_cli(capsys, "diagnose", "zec", "--nt", "6", "--nc",
                           "6", "--xt", "6", "--xc", "0", "--margin",
                           "0.05", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] >= 1
    assert all(c["verified"] for c in doc["certificates"])
    dips = [c["witness"]["delta_points"][1] for c in doc["certificates"]]
    assert any(abs(d + 0.9981) < 1e-3 for d in dips)


def test_diagnose_map_csv(capsys):
    code, out, _ = run_cli(capsys, "diagnose", "map", "--nt", "6", "--nc",
                           "6", "--margin", "0.05", "--format", "csv")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "x_t,x_c,p_asy,p_exact,relation"
    assert len([l for l in lines if l]) == 50  # header + 49 outcomes
    assert not out.endswith("\r\n")


def test_diagnose_pexact_finds_the_known_drop(capsys):
    code, out, _ = run_cli(capsys, "diagnose", "pexact", "--nt", "6",
                           "--nc", "4", "--xt", "4", "--xc", "2",
                           "--window", "0.135", "0.145", "--steps", "21",
                           "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] >= 1


def test_compare_without_margin_prints_four_methods(capsys):
    code, out, _ = run_cli(capsys, "compare", "--nt", "4", "--nc", "4",
                           "--xt", "2", "--xc", "2", "--scan-points", "401",
                           "--format", "json")
    assert code == 0
    doc = json.loads(out)
    methods = [e["method"] for e in doc["methods"]]
    assert methods == ["wald", "mee", "mn", "cz_exact"]
    for e in doc["methods"]:
        lo, hi = e["hull"]
        assert lo == pytest.approx(-hi, abs=2e-3), e["method"]


def test_compare_with_margin_appends_ec(capsys):
    code, out, _ = run_cli(capsys, "compare", "--nt", "4", "--nc", "4",
                           "--xt", "4", "--xc", "0", "--margin", "0.1",
                           "--scan-points", "401", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    methods = [e["method"] for e in doc["methods"]]
    assert methods == ["wald", "mee", "mn", "cz_exact", "ec"]
    assert all("p_used" in e for e in doc["methods"])


def test_coverage_summary_and_csv(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "coverage", "--method", "wald", "--nt",
                           "2", "--nc", "2", "--grid-points", "5",
                           "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["n_cells"] == 25
    assert doc["grid_step"] == 0.25
    assert 0.0 <= doc["min_coverage"] <= 1.0
    assert {"p_t", "p_c", "coverage", "expected_width"} <= set(doc["argmin"])

    target = tmp_path / "cells.csv"
    code, out, _ = run_cli(capsys, "coverage", "--method", "wald", "--nt",
                           "2", "--nc", "2", "--grid-points", "5",
                           "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    text = target.read_text(encoding="utf-8")
    lines = [l for l in text.split("\n") if l]
    assert lines[0].startswith("method,alpha,")
    assert len(lines) == 26


def test_coverage_ec_needs_margin(capsys):
    code, _, err = run_cli(capsys, "coverage", "--method", "ec", "--nt",
                           "2", "--nc", "2", "--grid-points", "3")
    assert code == 1
    assert "margin" in err


def test_unknown_method_usage_error(capsys):
    code, _, err = run_cli(capsys, "ci", "--method", "tea-leaves", "--nt",
                           "4", "--nc", "4", "--xt", "2", "--xc", "1")
    assert code == 1


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "riskdiff.cli", "pvalue", "--nt", "2",
         "--nc", "2", "--xt", "2", "--xc", "0", "--margin", "0.1",
         "--method", "chan", "--format", "json"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["schema"] == "riskdiff/1"
