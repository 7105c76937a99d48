import subprocess
import sys

import pytest

from asl.artifacts import atomic_write_text, read_csv
from asl.cli import main
from asl.config import PRESETS, ConfigError, parse_config


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run_cli(tmp_path, command, text, *extra):
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_command(tmp_path):
    assert main(["frobnicate", "--config", str(write(tmp_path, ""))]) == 2


def test_bad_threads(tmp_path):
    assert main(["conditions", "--config", str(write(tmp_path, "")), "--threads", "0"]) == 2


def test_unknown_key_is_error(tmp_path, capsys):
    rc, _ = run_cli(tmp_path, "conditions", "[symbols]\nid = mg\nbogus = 1\n")
    assert rc == 2
    assert "unknown key 'bogus'" in capsys.readouterr().err


def test_unknown_section_is_error():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[nope]\nx = 1\n", "conditions")


def test_all_problems_listed():
    with pytest.raises(ConfigError) as e:
        parse_config("[spectral]\ns = 0.5\ntau = -1\n[simulator]\ngamma = 2\n", "simulate")
    msgs = "\n".join(e.value.problems)
    assert "spectral: s=0.5" in msgs and "tau=-1" in msgs and "gamma" in msgs


def test_beta_violation_rejected():
    with pytest.raises(ConfigError, match="conditions"):
        parse_config("[conditions]\nbeta1 = 0.5\n", "conditions")


def test_presets_parse():
    for name in PRESETS:
        cmd = "wellposed-radius" if name == "ipm-wellposed" else "conditions"
        cfg = parse_config(f"[experiment]\npreset = {name}\n", cmd)
        assert cfg.hash and len(cfg.hash) == 16


def test_hash_depends_on_values():
    a = parse_config("[experiment]\npreset = mg-alpha0\n", "eigen")
    b = parse_config("[experiment]\npreset = mg-alpha0\n[eigensolver]\nb = 2 1\n", "eigen")
    assert a.hash != b.hash
    assert a.hash == parse_config("[experiment]\npreset = mg-alpha0\n", "eigen").hash


def test_coverage_flag_for_mg_alpha0():
    # threshold (beta3 - beta1)/(beta3 beta2) = 1 for alpha = 0, so s = 1 sits on the boundary
    cfg = parse_config("[experiment]\npreset = mg-alpha0\n", "eigen-sweep")
    assert any("outside theorem coverage" in f for f in cfg.flags)
    cfg1 = parse_config("[experiment]\npreset = mg-alpha1\n", "eigen-sweep")
    assert not cfg1.flags
    cfg2 = parse_config("[experiment]\npreset = mg-alpha0\n[spectral]\ns = 1.5\n", "eigen-sweep")
    assert not cfg2.flags


def test_conditions_command(tmp_path, capsys):
    rc, out = run_cli(tmp_path, "conditions", "[experiment]\npreset = mg-alpha0\n", "--plots")
    assert rc == 0
    header, rows, meta = read_csv(out / "conditions.csv")
    assert header[0] == "condition" and rows
    assert (out / "conditions.png").exists()
    assert "C6=pass" in capsys.readouterr().out


def test_eigen_command(tmp_path):
    rc, out = run_cli(tmp_path, "eigen", "[experiment]\npreset = mg-alpha0\n")
    assert rc == 0
    for name in ("eigen_summary.csv", "eigen_coefficients.csv"):
        _, rows, meta = read_csv(out / name)
        assert "config_hash" in meta and rows


def test_eigen_sweep_reports_failure(tmp_path, capsys):
    text = "[experiment]\npreset = mg-alpha0\n[eigensolver]\nj_max = 3\noracle_N = 64\nP = 64\n"
    rc, out = run_cli(tmp_path, "eigen-sweep", text)
    assert rc == 1
    assert "ASSERTION FAILED" in capsys.readouterr().out
    header, rows, _ = read_csv(out / "sweep.csv")
    assert len(rows) == 3 and "corrected_bound" in header


def test_simulate_linear(tmp_path):
    text = ("[experiment]\npreset = mg-alpha0\n[simulator]\nK = 8\ndt = 0.2\nt_end = 2\n"
            "mode = linear\n")
    rc, out = run_cli(tmp_path, "simulate", text, "--plots")
    assert rc == 0
    header, rows, _ = read_csv(out / "timeseries.csv")
    assert header[:2] == ["t", "l2"] and len(rows) == 11
    assert (out / "timeseries.png").exists()


def test_csv_bit_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv("ASL_SEED", "9")
    text = ("[symbols]\nid = ipm\n[simulator]\nK = 6\ndt = 0.05\nt_end = 0.2\nmode = nonlinear\n"
            "initial = random\n")
    cfg = write(tmp_path, text)
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append((out / "timeseries.csv").read_bytes())
    assert outs[0] == outs[1]
    monkeypatch.setenv("ASL_SEED", "10")
    out = tmp_path / "o3"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "timeseries.csv").read_bytes() != outs[0]


def test_atomic_write_leaves_no_temp(tmp_path):
    p = atomic_write_text(tmp_path / "x.csv", "a\n")
    atomic_write_text(p, "b\n")
    assert p.read_text() == "b\n"
    assert [q.name for q in tmp_path.iterdir()] == ["x.csv"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "asl"], capture_output=True, text=True)
    assert r.returncode == 2
