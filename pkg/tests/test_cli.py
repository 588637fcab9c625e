"""End-to-end command line checks: exit codes, artifact layout, byte-level
reproducibility, and manifests that reload as configs."""
import pathlib

import yaml

from iabsim.cli import main

CONFIG_DIR = pathlib.Path(__file__).resolve().parents[1] / "configs"

TINY_LINE = """\
scenario: symmetric-line
seed: 9
trials: 6
area: {radius_m: 300}
sweep:
  grid: [100, 200]
densities:
  blockage_per_km2: 100
  ue_per_km2: [50]
geometry: {n_donors: 1, n_children: 2}
"""


def write_cfg(tmp_path, text=TINY_LINE, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_validate_config_accepts_shipped_configs(capsys):
    for path in sorted(CONFIG_DIR.glob("*.yaml")):
        assert main(["validate-config", "--config", str(path)]) == 0
        assert "OK" in capsys.readouterr().out
    assert len(list(CONFIG_DIR.glob("*.yaml"))) == 5


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("symmetric-line", "symmetric-ring", "rate-cdf",
                 "min-distance-sweep", "forbidden-area-sweep"):
        assert name in out


def test_sweep_writes_csv_and_manifest(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "nested" / "never" / "made"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    msg = capsys.readouterr().out
    assert "wrote 2 rows" in msg

    csv_path = out / "symmetric-line.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "sweep_value,strategy,metric,value,trials,stderr"
    assert len(lines) == 3

    manifest = yaml.safe_load((out / "symmetric-line.manifest.yaml").read_text())
    assert manifest["scenario"] == "symmetric-line"
    assert manifest["seed"] == 9
    assert manifest["package"] == "iabsim"
    assert manifest["artifact_version"]


def test_run_uses_first_grid_point_only(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "single"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "symmetric-line.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("100.0,")


def test_repeated_sweep_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "symmetric-line.csv").read_bytes() == \
        (out2 / "symmetric-line.csv").read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = write_cfg(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(out2), "--seed", "10"]) == 0
    assert (out1 / "symmetric-line.csv").read_bytes() != \
        (out2 / "symmetric-line.csv").read_bytes()


def test_manifest_reruns_to_same_bytes(tmp_path):
    cfg = write_cfg(tmp_path)
    out1 = tmp_path / "a"
    assert main(["sweep", "--config", str(cfg), "--out", str(out1)]) == 0
    manifest_path = out1 / "symmetric-line.manifest.yaml"
    assert main(["validate-config", "--config", str(manifest_path)]) == 0

    out2 = tmp_path / "b"
    assert main(["sweep", "--config", str(manifest_path), "--out", str(out2)]) == 0
    assert (out1 / "symmetric-line.csv").read_bytes() == \
        (out2 / "symmetric-line.csv").read_bytes()


def test_unknown_key_is_a_config_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY_LINE + "radoi: {beta: 0.4}\n")
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert "config error" in capsys.readouterr().err


def test_infeasible_strategies_drop_but_run_survives(tmp_path, caplog):
    text = """\
scenario: forbidden-area-sweep
seed: 3
trials: 4
area: {radius_m: 300}
sweep:
  grid: [400]
densities:
  blockage_per_km2: 50
  ue_per_km2: [100]
geometry: {n_donors: 1, n_children: 2}
optimizer: {n_iterations: 2, mc_trials_per_candidate: 4, max_resample_attempts: 50}
forbidden: {n_disks: 1, ring_radius_fraction: 0.0}
"""
    cfg = write_cfg(tmp_path, text, name="covered.yaml")
    # one keep-out disk of radius 400 centered on the 300 m area swallows
    # it whole: the disk-respecting strategies cannot place and are dropped
    # row by row, while the oblivious random baseline still reports
    with caplog.at_level("WARNING", logger="iabsim.scenarios"):
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    skips = [r.message for r in caplog.records if "skipping" in r.message]
    assert len(skips) == 2
    lines = (tmp_path / "o" / "forbidden-area-sweep.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].split(",")[1] == "random_ue100"
