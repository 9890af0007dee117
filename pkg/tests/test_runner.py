import json

import numpy as np
import pandas as pd
import pytest

from common.enums import ForcingKind, ModelKind, Verdict
from common.errors import InvalidInputError
from loja.certificates import distance_sup_at
from runner.cli import main, parse_grid, verify_report
from runner.config import build_scenario, load_scenario
from runner.presets import list_presets, preset
from runner.scenario import EXIT_ERROR, EXIT_PASS, comparable_manifest, output_files, run_scenario
from runner.sweep import configs_from_grid, declared_parameters, grid_points, is_non_decreasing, observed_orders, sweep
from schema.shrinker_model import ShrinkerModel

CHEAP_CHECKS = "forcing,monotonicity_compact,l2_control,mean_value,evolution_residual"


def cheap_values(output_dir, **extra):
    values = {
        "name": "cheap",
        "model": "circle",
        "resolution": 32,
        "t_start": 0.0,
        "t_end": 2.0,
        "dt": 0.01,
        "record_every": 5,
        "checks": CHEAP_CHECKS,
        "output_dir": str(output_dir),
    }
    values.update(extra)
    return values


def test_flat_keys_are_grouped():
    cfg = build_scenario({
        "NAME": "flat",
        "MODEL": "circle",
        "RESOLUTION": "48",
        "T_END": "1",
        "DT": "0.01",
        "MODES": "2:0.05,3:0.01",
        "FORCING_KIND": "radial",
        "FORCING_C": "0.2",
        "FUNCTIONAL_R0": "0.5",
        "CHECKS": "forcing, mean_value",
    })
    assert cfg.model == ModelKind.CIRCLE
    assert cfg.modes == {2: 0.05, 3: 0.01}
    assert cfg.forcing.kind == ForcingKind.RADIAL and cfg.forcing.K == pytest.approx(0.2)
    assert cfg.functional.r0 == pytest.approx(0.5)
    assert cfg.functional.K == pytest.approx(cfg.forcing.K)
    assert cfg.checks == ["forcing", "mean_value"]


@pytest.mark.parametrize('extra', [
    {"checks": "forcing,no_such_check"},
    {"picture": "unrescaled", "checks": "mean_value"},
    {"t_end": "0.0"},
    {"modes": "2"},
])
def test_bad_scenarios_are_rejected(tmp_path, extra):
    with pytest.raises(InvalidInputError):
        build_scenario(cheap_values(tmp_path, **extra))


def test_load_scenario_from_file(tmp_path):
    path = tmp_path / "scenario.env"
    path.write_text("NAME=from-file\nMODEL=cylinder\nRESOLUTION=81\nWINDOW=4\nT_END=1\nDT=0.01\n")
    cfg = load_scenario(path, dt=0.005)
    assert cfg.model == ModelKind.CYLINDER and cfg.window == pytest.approx(4.0)
    assert cfg.dt == pytest.approx(0.005)
    with pytest.raises(InvalidInputError):
        load_scenario(tmp_path / "missing.env")


def test_presets():
    names = list_presets()
    assert len(names) == 7 and names == sorted(names)
    cfg = preset("circle-shrinker-static", output_dir="elsewhere")
    assert cfg.name == "circle-shrinker-static" and cfg.output_dir == "elsewhere"
    with pytest.raises(InvalidInputError):
        preset("no-such-preset")


def test_preset_record_steps_divide_one():
    for name in list_presets():
        cfg = preset(name)
        assert (1.0 / cfg.record_step) == pytest.approx(round(1.0 / cfg.record_step), rel=1e-9), name


def test_grid_helpers(tmp_path):
    with pytest.raises(InvalidInputError):
        grid_points({})
    assert parse_grid(["DT=0.01,0.005"]) == {"dt": ["0.01", "0.005"]}
    cfgs = configs_from_grid(cheap_values(tmp_path), {"dt": ["0.01", "0.005"]}, "cheap")
    assert [c.name for c in cfgs] == ["cheap/dt=0.01", "cheap/dt=0.005"]
    assert declared_parameters(cfgs) == ["dt"]
    mixed = [cfgs[0], build_scenario(cheap_values(tmp_path, model="cylinder", resolution=81, window=4.0))]
    with pytest.raises(InvalidInputError):
        declared_parameters(mixed)


def test_cheap_scenario_passes_and_is_reproducible(tmp_path):
    cfg = build_scenario(cheap_values(tmp_path))
    result = run_scenario(cfg)
    assert result.exit_code == EXIT_PASS, result.error
    assert all(r.verdict == Verdict.PASS for r in result.reports.values())

    out = cfg.scenario_dir
    assert (out / "timeseries.csv").is_file() and (out / "manifest.json").is_file()
    files = output_files(out)
    assert len(files) == 1 + len(cfg.checks)
    first = {f.name: f.read_bytes() for f in files}
    manifest = comparable_manifest(out / "manifest.json")
    assert manifest["exit_code"] == EXIT_PASS and "timestamp" not in manifest

    rerun = run_scenario(cfg)
    assert rerun.exit_code == EXIT_PASS
    assert {f.name: f.read_bytes() for f in output_files(out)} == first
    assert comparable_manifest(out / "manifest.json") == manifest


def test_verify_report_detects_tampering(tmp_path):
    cfg = build_scenario(cheap_values(tmp_path, checks="l2_control"))
    run_scenario(cfg)
    path = cfg.scenario_dir / "reports" / "l2_control.json"
    assert verify_report(path) == 0
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["verdict"] = "fail"
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(payload), encoding="utf-8")
    assert verify_report(tampered) == 2
    assert main(["verify-report", str(path)]) == 0


def test_unstable_step_is_an_error(tmp_path):
    result = run_scenario(build_scenario(cheap_values(tmp_path, dt=0.1, record_every=1)))
    assert result.exit_code == EXIT_ERROR
    assert "StabilityError" in result.error


def test_sweep_keeps_input_order(tmp_path):
    grid = {"resolution": ["32", "24"]}
    cfgs = configs_from_grid(cheap_values(tmp_path, checks="l2_control"), grid, "res")
    table = sweep(cfgs, max_workers=2, out_path=tmp_path / "sweep.csv", progress=False)
    assert table["scenario"].tolist() == [c.name for c in cfgs]
    assert table["exit_code"].tolist() == [0, 0]
    assert (tmp_path / "sweep.csv").is_file()


def test_convergence_helpers():
    table = pd.DataFrame({"resolution": [64, 16, 32], "error": [0.25, 4.0, 1.0], "value": [3.0, 1.0, 2.0]})
    assert is_non_decreasing(table, "resolution", "value")
    assert not is_non_decreasing(table, "resolution", "error")
    assert observed_orders(table, "resolution", "error") == pytest.approx([2.0, 2.0])


def test_cli_lists_presets(capsys):
    assert main(["list-presets"]) == 0
    assert "cylinder-pinch" in capsys.readouterr().out.split()



def test_unexpected_truncation_is_an_error(tmp_path):
    cfg = preset("cylinder-pinch", output_dir=str(tmp_path), expect_truncation=False)
    result = run_scenario(cfg)
    assert result.exit_code == EXIT_ERROR
    assert "unexpected truncation" in result.error
    assert result.trajectory.truncated
    manifest = comparable_manifest(cfg.scenario_dir / "manifest.json")
    assert manifest["exit_code"] == EXIT_ERROR
    assert "unexpected truncation" in manifest["error"]


@pytest.mark.slow
@pytest.mark.parametrize('name', list_presets())
def test_presets_pass_and_are_reproducible(tmp_path, name):
    cfg = preset(name, output_dir=str(tmp_path))
    result = run_scenario(cfg)
    assert result.exit_code == EXIT_PASS, result.error
    first = {f.name: f.read_bytes() for f in output_files(cfg.scenario_dir)}
    manifest = comparable_manifest(cfg.scenario_dir / "manifest.json")

    rerun = run_scenario(cfg)
    assert rerun.exit_code == EXIT_PASS
    assert {f.name: f.read_bytes() for f in output_files(cfg.scenario_dir)} == first
    assert comparable_manifest(cfg.scenario_dir / "manifest.json") == manifest


@pytest.mark.slow
@pytest.mark.parametrize('name', ["circle-perturbed", "circle-perturbed-forced"])
def test_perturbed_circles_settle(tmp_path, name):
    result = run_scenario(preset(name, output_dir=str(tmp_path)))
    distances = distance_sup_at(result.trajectory, ShrinkerModel.circle(), [2.0, 4.0, 6.0])
    assert np.all(np.diff(distances) < 0)
