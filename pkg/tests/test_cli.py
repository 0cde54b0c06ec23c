from specpart import get_version
from specpart.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    EXIT_SOLVER_ERROR,
    main,
    parse_config,
    run_audit,
    run_experiment,
)
from specpart.exceptions import ConfigError, SolverStalledError
from specpart.util.testing import get_data_path

import json
import os

import pandas as pd

import pytest

RUN_FILES = ["manifest.json", "timings.json", "phase_0.txt", "phase_1.txt", "support.ppm",
             "history.csv"]


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    config, domain = parse_config(get_data_path("data/tiny_run.cfg"))
    out_dir = str(tmp_path_factory.mktemp("tiny_run"))
    manifest = run_experiment(config, domain, out_dir)
    return config, domain, out_dir, manifest


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def test_parse_minimal_config():
    config, domain = parse_config(get_data_path("data/minimal.cfg"))
    assert config.k == 2
    assert config.a == 0.1
    assert config.resolution == 64
    assert domain.kind == "square"
    assert domain.params == (1.0,)


def test_parse_schedules():
    config, _ = parse_config(get_data_path("data/tiny_run.cfg"))
    assert config.beta_schedule == (1.0, 10.0)
    assert config.eps_schedule == (1.0, 0.3)
    assert config.seed == 3


def test_parse_duplicate_key():
    with pytest.raises(ConfigError, match=r"line 3: duplicate key 'k' \(first set on line 2\)"):
        parse_config(get_data_path("data/duplicate_key.cfg"))


def test_parse_budget_too_large():
    with pytest.raises(ConfigError, match=r"a must be < \|Omega\|"):
        parse_config(get_data_path("data/budget_too_large.cfg"))


def test_parse_unknown_key():
    with pytest.raises(ConfigError, match="line 4: unknown key 'colour'"):
        parse_config(get_data_path("data/unknown_key.cfg"))


@pytest.mark.parametrize("text, message", [
    ("domain = square 1\nk = 2\n", "missing required keys"),
    ("domain = square 1\nk = two\na = 0.1\n", "line 2: malformed value"),
    ("domain = square 1\nk 2\na = 0.1\n", "line 2: expected 'key = value'"),
    ("domain = hexagon 1\nk = 2\na = 0.1\n", "Unknown domain kind"),
])
def test_parse_rejects(tmp_path, text, message):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        parse_config(str(path))


def test_parse_mask_domain_relative_path():
    config, domain = parse_config(get_data_path("data/mask_domain.cfg"))
    assert domain.kind == "mask"
    assert os.path.isabs(domain.path)
    assert os.path.exists(domain.path)
    assert config.resolution == 16


def test_run_experiment_writes_run_directory(tiny_run):
    _, _, out_dir, manifest = tiny_run
    for name in RUN_FILES:
        assert os.path.exists(os.path.join(out_dir, name)), name
    assert list(manifest) == ["version", "config", "domain", "energy", "partition", "audit",
                              "oracle", "symmetry"]
    assert manifest["version"] == get_version()
    with open(os.path.join(out_dir, "manifest.json")) as f:
        written = json.load(f)
    assert written["config"]["seed"] == 3
    assert written["domain"]["dims"] == [16, 16]
    assert "saturation_ok" in written["audit"]
    assert written["oracle"]["predicted_objective"] > 0
    assert "solve_seconds" not in written
    history = pd.read_csv(os.path.join(out_dir, "history.csv"))
    assert len(history) > 0


def test_run_experiment_is_reproducible(tiny_run, tmp_path):
    config, domain, out_dir, _ = tiny_run
    run_experiment(config, domain, str(tmp_path))
    for name in ["manifest.json", "phase_0.txt", "phase_1.txt", "support.ppm", "history.csv"]:
        assert read_bytes(os.path.join(out_dir, name)) == \
            read_bytes(os.path.join(str(tmp_path), name)), name


def test_run_experiment_with_restarts(tmp_path):
    config, domain = parse_config(get_data_path("data/tiny_run.cfg"))
    manifest = run_experiment(config, domain, str(tmp_path), restarts=2)
    assert manifest["restarts"]["n_runs"] == 2
    assert os.path.exists(str(tmp_path / "restarts.csv"))
    for seed in [3, 4]:
        assert os.path.exists(str(tmp_path / "restarts" / "seed_{}".format(seed) / "phase_0.txt"))


def test_run_audit(tiny_run, tmp_path):
    config, domain, out_dir, manifest = tiny_run
    audit_manifest = run_audit(config, domain, out_dir, str(tmp_path))
    assert audit_manifest["mode"] == "audit-only"
    assert audit_manifest["audit"]["disjoint_ok"]
    assert os.path.exists(str(tmp_path / "manifest.json"))


def test_run_audit_rejects_other_grid(tiny_run, tmp_path):
    config, domain, out_dir, _ = tiny_run
    with pytest.raises(ConfigError):
        run_audit(config.replace(resolution=32), domain, out_dir, str(tmp_path))


def test_main_ok(tmp_path):
    code = main(["--config", get_data_path("data/tiny_run.cfg"), "--out-dir", str(tmp_path),
                 "--seed", "5"])
    assert code == EXIT_OK
    with open(str(tmp_path / "manifest.json")) as f:
        assert json.load(f)["config"]["seed"] == 5


def test_main_audit_only(tiny_run, tmp_path):
    _, _, out_dir, _ = tiny_run
    code = main(["--config", get_data_path("data/tiny_run.cfg"), "--audit-only", out_dir,
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_OK


def test_main_config_error(tmp_path):
    code = main(["--config", get_data_path("data/budget_too_large.cfg"),
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_CONFIG_ERROR
    code = main(["--config", get_data_path("data/tiny_run.cfg"), "--restarts", "0",
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_CONFIG_ERROR


def test_main_io_error(tmp_path):
    assert main(["--config", str(tmp_path / "missing.cfg")]) == EXIT_IO_ERROR
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    code = main(["--config", get_data_path("data/tiny_run.cfg"), "--out-dir", str(blocker)])
    assert code == EXIT_IO_ERROR


def test_main_solver_error(tmp_path, monkeypatch):
    import specpart.cli

    def stalled(grid, config, initial=None):
        raise SolverStalledError("Backtracking exhausted 30 halvings")

    monkeypatch.setattr(specpart.cli, "solve", stalled)
    code = main(["--config", get_data_path("data/tiny_run.cfg"), "--out-dir", str(tmp_path)])
    assert code == EXIT_SOLVER_ERROR


def test_main_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert get_version() in capsys.readouterr().out
