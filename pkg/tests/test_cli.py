import json
import sys

import pytest

import cli
from setup_environment import CertifyEnvironment, missing_modules
from storage import ReportStorage
import run as runner

FAST = {
    "orders": {"inner": 4, "outer": 4},
    "quadrature": {"inner_points": 8, "triangle_order": 4, "refine_levels": 0},
}


def _config(path, **data):
    path.write_text(json.dumps({"schema_version": 1, **data}, indent=2))
    return path


def test_notch_default_sweep(tmp_path, fresh_config, capsys):
    cfg = _config(tmp_path / "notch.json", problem="notch", field="zero", **FAST)
    out = tmp_path / "bounds.csv"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--serial"]) == cli.EXIT_OK
    rows = ReportStorage.read_csv(out)
    assert len(rows) == 9
    assert [int(r["param_index"]) for r in rows] == list(range(9))
    assert all(r["error"] == "" for r in rows)
    assert "Summary" in capsys.readouterr().out


def test_run_with_dashboard_and_workers(tmp_path, fresh_config):
    cfg = _config(tmp_path / "notch.json", problem="notch", field="zero", parameters=[0.1, 0.5, 1.0], **FAST)
    args = ["run", "-c", str(cfg), "-o", str(tmp_path / "b.csv"), "--workers", "2", "--dashboard", "--quiet"]
    assert cli.main(args) == cli.EXIT_OK
    assert len(ReportStorage.read_csv(tmp_path / "b.csv")) == 3


def test_all_rows_failing_exits_with_one(tmp_path, fresh_config):
    (tmp_path / "net.json").write_text(json.dumps({
        "input_dim": 7,
        "layers": [{"W": [[0.1] * 7], "b": [0.0]}],
    }))
    cfg = _config(tmp_path / "bad.json", problem="notch", field={"kind": "mlp", "path": "net.json"},
                  parameters=[0.2], **FAST)
    assert cli.main(["run", "-c", str(cfg), "-q"]) == cli.EXIT_ALL_FAILED


def test_configuration_errors_exit_with_two(tmp_path, fresh_config):
    assert cli.main(["run", "-c", str(tmp_path / "missing.json")]) == cli.EXIT_USAGE
    cfg = _config(tmp_path / "heat.json", problem="heat-square")
    assert cli.main(["run", "-c", str(cfg)]) == cli.EXIT_USAGE
    cfg = _config(tmp_path / "ok.json", problem="notch", **FAST)
    assert cli.main(["run", "-c", str(cfg), "--workers", "0"]) == cli.EXIT_USAGE


def test_usage_errors_exit_with_two(fresh_config):
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
    assert cli.main(["run"]) == cli.EXIT_USAGE


def test_describe(fresh_config, capsys):
    assert cli.main(["describe", "notch"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "notch" in out
    assert "C_B" in out


def test_describe_unknown_prints_catalog(fresh_config, capsys):
    assert cli.main(["describe", "annulus"]) == cli.EXIT_USAGE
    out = capsys.readouterr().out
    assert "sawblade" in out and "transport" in out


def test_list_runs_and_problems(tmp_path, fresh_config, capsys):
    assert cli.main(["list"]) == cli.EXIT_OK
    assert "No runs found" in capsys.readouterr().out
    cfg = _config(tmp_path / "notch.json", problem="notch", field="zero", parameters=[0.3], **FAST)
    cli.main(["run", "-c", str(cfg), "-o", str(tmp_path / "b.csv"), "-q"])
    capsys.readouterr()
    assert cli.main(["list"]) == cli.EXIT_OK
    assert "notch" in capsys.readouterr().out
    assert cli.main(["list", "--problems"]) == cli.EXIT_OK
    assert "heat-square" in capsys.readouterr().out


# ============================================================================
# Runner and environment helpers
# ============================================================================

@pytest.mark.parametrize("name", ["cli", "cli.py", "scripts/cli.py"])
def test_resolve_script(name, tmp_path):
    assert runner.resolve_script(name, tmp_path) == tmp_path / "cli.py"


def test_runner_without_arguments(capsys):
    assert runner.main([]) == 2
    assert "cli.py" in capsys.readouterr().out


def test_runner_unknown_script(capsys):
    assert runner.main(["nope.py"]) == 2
    assert "Script not found" in capsys.readouterr().out


def test_missing_modules():
    assert missing_modules(["numpy", "no_such_module_for_certify"]) == ["no_such_module_for_certify"]


def test_environment_paths(tmp_path):
    env = CertifyEnvironment(root=tmp_path)
    assert env.venv_dir == tmp_path / ".venv"
    assert env.python_executable() == sys.executable
    assert not env.is_active()
    assert ".venv" in env.activate_instructions()
