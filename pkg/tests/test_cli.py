"""Command-line interface behavior.

Runs the entry point in-process via main(argv) and inspects stdout,
files, and exit codes.  Determinism matters here: rerunning a command
with the same configuration must give byte-identical output.
"""

import json

import pytest

from hilbert_selberg.cli import RunConfig, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


# ---------------------------------------------------------------- config

def test_config_round_trip():
    cfg = RunConfig(D=8, x_max=12.5, height=7.25, trunc_norm=None,
                    trunc_k=55, beta_grid=(0.2, 0.07), out_format="csv",
                    out_path=None, cache_dir="/tmp/hs", seed=7)
    again = RunConfig.from_text(cfg.to_text())
    assert again == cfg


def test_config_comments_and_unknown_key(tmp_path):
    text = "D = 8  # field choice\n\nx_max = 6.0\n"
    cfg = RunConfig.from_text(text)
    assert cfg.D == 8 and cfg.x_max == 6.0
    with pytest.raises(Exception):
        RunConfig.from_text("no_such_key = 3\n")


def test_config_file_feeds_commands(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("D = 8\n")
    code, out = run_cli(capsys, "field", "--config", str(path))
    assert code == 0
    assert json.loads(out)["D"] == 8
    # explicit flag wins over the file
    code, out = run_cli(capsys, "field", "--config", str(path), "--D", "5")
    assert json.loads(out)["D"] == 5


# ---------------------------------------------------------------- exit codes

def test_exit_codes(capsys):
    assert run_cli(capsys, "nosuchcmd")[0] == 1
    assert run_cli(capsys, "field", "--D", "-3")[0] == 1
    assert run_cli(capsys, "zeta", "--D", "5", "--m", "4", "--s", "abc")[0] == 1
    assert run_cli(capsys, "trace", "--D", "5", "--m", "3",
                   "--test", "gaussian:beta=0.1")[0] == 1
    assert run_cli(capsys, "--help")[0] == 0


# ---------------------------------------------------------------- field

def test_field_json(capsys):
    code, out = run_cli(capsys, "field", "--D", "5")
    assert code == 0
    blob = json.loads(out)
    assert blob["zeta_minus_one"] == "1/30"
    assert blob["euler_char"] == "4/1"
    assert blob["eps"] == [0, 1]
    assert sorted(tuple(r[:2]) for r in blob["elliptic_census"]) == \
        [(2, 1), (3, 1), (3, 2), (5, 2), (5, 3)]


# ---------------------------------------------------------------- geodesics

def test_geodesics_small_window_empty_csv(capsys):
    code, out = run_cli(capsys, "geodesics", "--D", "5", "--x", "1.0",
                        "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("d (w=(1+sqrt(5))/2)")
    assert lines[0].split(",")[1:] == ["norm", "angle", "multiplicity"]


def test_geodesics_byte_identical_rerun(capsys):
    args = ("geodesics", "--D", "5", "--x", "6.0", "--format", "csv")
    _, first = run_cli(capsys, *args)
    _, second = run_cli(capsys, *args)
    assert first == second
    assert len(first.splitlines()) > 1


def test_geodesics_json_sorted(capsys):
    code, out = run_cli(capsys, "geodesics", "--D", "5", "--x", "6.0")
    rows = json.loads(out)["classes"]
    norms = [r["norm"] for r in rows]
    assert norms == sorted(norms)
    assert all(r["multiplicity"] % 2 == 0 for r in rows)


# ---------------------------------------------------------------- pell

def test_pell_csv_schema(capsys):
    code, out = run_cli(capsys, "pell", "--D", "5", "--x", "6.0",
                        "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    header = lines[0].split(",")
    assert header == ["d (w=(1+sqrt(5))/2)", "eps_d", "t0", "u0", "h_K(d)"]
    first = lines[1].split(",")
    assert first[0] == "-7+5*w"
    assert abs(float(first[1]) - 2.1537213755417683) < 1e-12
    assert first[4] == "2"


# ---------------------------------------------------------------- forms

def test_forms_record(capsys):
    code, out = run_cli(capsys, "forms", "--D", "5", "--d=-7+5*w")
    assert code == 0
    blob = json.loads(out)
    assert blob["class_number"] == 2
    assert len(blob["forms"]) == 2
    assert blob["pell"]["t0"] == "1+w"


# ---------------------------------------------------------------- zeta

def test_zeta_json(capsys):
    code, out = run_cli(capsys, "zeta", "--D", "5", "--m", "4",
                        "--s", "2.0+0.5i", "--X", "1e5", "--K", "40")
    assert code == 0
    blob = json.loads(out)
    assert set(blob) >= {"value", "log_value", "tail_bound", "trunc_norm"}
    assert blob["tail_bound"] > 0
    # cutoff clamps to the enumerated window
    assert blob["trunc_norm"] <= 100.0
    value = complex(*blob["value"])
    assert 0.5 < abs(value) < 1.5


def test_zeta_m2_real(capsys):
    _, out = run_cli(capsys, "zeta", "--D", "5", "--m", "2", "--s", "3.0")
    blob = json.loads(out)
    assert blob["value"][1] == 0.0


# ---------------------------------------------------------------- ledger

def test_ledger_json(capsys):
    code, out = run_cli(capsys, "ledger", "--D", "5", "--m", "2")
    assert code == 0
    blob = json.loads(out)
    orders = {e["label"]: e["order"] for e in blob["entries"]}
    assert orders["double pole at s=1 from the squared unit factor"] == -2
    assert blob["leading"]["n0"] == 6
    assert blob["leading"]["stabilizer_product"] == 900


# ---------------------------------------------------------------- trace

def test_trace_breakdown(capsys):
    code, out = run_cli(capsys, "trace", "--D", "5", "--m", "4",
                        "--test", "gaussian:beta=0.05")
    assert code == 0
    blob = json.loads(out)
    assert blob["difference"] == "double"
    total = complex(*blob["total"])
    parts = sum(complex(*blob[k]) for k in
                ("identity_term", "elliptic_term", "hyp_ell_term",
                 "par_sct_term", "hyp2_sct_term"))
    assert abs(total - parts) < 1e-12
    assert abs(total.imag) < 1e-9


def test_trace_rational_and_single(capsys):
    code, out = run_cli(capsys, "trace", "--D", "5", "--m", "4", "--single",
                        "--test", "rational:s=2.5,beta1=2.5,beta2=3.5")
    assert code == 0
    blob = json.loads(out)
    assert blob["difference"] == "single"
    assert abs(complex(*blob["total"]).imag) < 1e-9


def test_trace_heatfit_delegates(capsys):
    args = ("--D", "5", "--betas", "0.2,0.1,0.05,0.025")
    code1, out1 = run_cli(capsys, "trace", "heatfit", *args)
    code2, out2 = run_cli(capsys, "heatfit", *args)
    assert code1 == code2 == 0
    assert out1 == out2
    blob = json.loads(out1)
    assert blob["a_rel_err"] <= 0.02
    assert blob["b_rel_err"] <= 0.05


# ---------------------------------------------------------------- report

def test_report_classavg_csv(capsys):
    code, out = run_cli(capsys, "report", "classavg", "--D", "5",
                        "--x", "8.0", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,psi_sum,pi_sum,psi_main,pi_main,psi_ratio,pi_ratio"
    row = lines[1].split(",")
    assert float(row[0]) == 8.0
    assert float(row[5]) > 0


# ---------------------------------------------------------------- output

def test_out_path_writes_file(tmp_path, capsys):
    target = tmp_path / "field.json"
    code, out = run_cli(capsys, "field", "--D", "5", "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["D"] == 5


# ---------------------------------------------------------------- cache

def test_cache_round_trip(tmp_path, capsys):
    cache = tmp_path / "cache"
    args = ("geodesics", "--D", "5", "--x", "6.0", "--format", "csv",
            "--cache-dir", str(cache))
    _, first = run_cli(capsys, *args)
    entries = list(cache.rglob("*.pkl"))
    assert entries, "expected a cache entry"
    _, second = run_cli(capsys, *args)
    assert first == second
    # different bound -> different key, no stale reuse
    _, third = run_cli(capsys, "geodesics", "--D", "5", "--x", "7.0",
                       "--format", "csv", "--cache-dir", str(cache))
    assert len(list(cache.rglob("*.pkl"))) > len(entries)
    assert third != first


def test_cache_env_var(tmp_path, capsys, monkeypatch):
    cache = tmp_path / "envcache"
    monkeypatch.setenv("HILBERT_SELBERG_CACHE", str(cache))
    run_cli(capsys, "geodesics", "--D", "5", "--x", "6.0")
    assert list(cache.rglob("*.pkl"))
