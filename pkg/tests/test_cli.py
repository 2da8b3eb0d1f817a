import json
import subprocess
import sys

import pytest

from acoustoelastic import cli
from acoustoelastic.cli import ConfigError, content_hash, main, parse_config, run_command


def test_config_defaults_and_overrides():
    cfg = parse_config("asymptotics", "# comment\n\nsector.h = 0.5   # trailing\ns_grid = 10, 20 40\n")
    assert cfg["sector.h"] == 0.5
    assert cfg["s_grid"] == (10.0, 20.0, 40.0)
    assert cfg["alpha"] == 0.0


@pytest.mark.parametrize("text,line,fragment", [
    ("alpha = 0\nbogus = 1\n", 2, "unknown key"),
    ("\n\nsector.h = -1\n", 3, "must be positive"),
    ("laplace.h = 2.8\n", 1, "0 < h < e"),
    ("s_grid =\n", 1, "empty list"),
    ("just words\n", 1, "key = value"),
    ("alpha = x\n", 1, "bad value"),
])
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config("asymptotics", text)
    msg = str(exc.value)
    assert msg.startswith(f"line {line}:") and fragment in msg


def test_unknown_command_and_bad_material():
    with pytest.raises(ConfigError):
        parse_config("nope", "")
    with pytest.raises(ConfigError):
        parse_config("edge3d", "material.mu = 0\n")


def test_forward_scene_keys_pass_through():
    cfg = parse_config("forward", "incident.kind = shear\nrun.n_dir = 16\n")
    assert "incident.kind" in cfg.scene_text and cfg["run.n_dir"] == 16
    with pytest.raises(ConfigError):
        parse_config("forward", "run.n_dir = 4\n")


def test_content_hash_is_git_blob_hash():
    assert content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_asymptotics_default_outputs(tmp_path):
    man = run_command("asymptotics", out=tmp_path)
    assert man.passed
    csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert len(csvs) == 6
    assert (tmp_path / "summary.json").exists()
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["passed"] and data["config_hash"] == content_hash("")
    assert data["config"]["s_grid"] == list(cli.SCHEMAS["asymptotics"]["s_grid"].default)
    assert data["wall_time"] > 0 and data["checks"]
    assert all((tmp_path / name).exists() for name in data["outputs"])


@pytest.mark.parametrize("command", ["identity", "edge3d"])
def test_commands_pass(command, tmp_path):
    assert run_command(command, out=tmp_path).passed


def test_identity_zero_field(tmp_path):
    man = run_command("identity", "field = zero\nrandom_draws = 5\n", out=tmp_path)
    assert man.passed


def test_runs_are_deterministic(tmp_path):
    for d in ("a", "b"):
        run_command("edge3d", out=tmp_path / d, seed=7)
        run_command("asymptotics", out=tmp_path / d / "asy")
    for name in ("reduced_residuals.csv", "asy/laplace_tail.csv", "asy/arc_terms.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("omega = 2.0\n")
    assert main(["edge3d", "--config", str(good), "--out", str(tmp_path / "g")]) == 0
    assert "PASS" in capsys.readouterr().out
    fail = tmp_path / "fail.cfg"
    fail.write_text("residual_tol = 1e-30\n")
    assert main(["edge3d", "--config", str(fail), "--out", str(tmp_path / "f")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("omega = 2.0\nomega_typo = 1\n")
    assert main(["edge3d", "--config", str(bad), "--out", str(tmp_path / "b")]) == 2
    err = capsys.readouterr().err
    assert "bad.cfg" in err and "line 2" in err
    assert main(["edge3d", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "acoustoelastic", "identity", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "identity: all checks passed" in proc.stdout


def test_forward_disk_config(tmp_path):
    text = "incident.kind = shear\nincident.omega = 2.0\ninclusion.type = disk\ninclusion.radius = 1.0\n"
    man = run_command("forward", text, out=tmp_path)
    assert man.passed and man.checks["disk_residual"]
    with pytest.raises(ConfigError):
        run_command("forward", text + "run.oracle = disk\n", out=tmp_path / "x")
