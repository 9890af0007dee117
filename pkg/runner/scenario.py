import json
import logging
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import pydantic
import scipy

from common.enums import ModelKind, Picture, Verdict
from common.errors import LabError, StabilityError
from flow.calibration import DEVIATION_LIMIT, CalibrationResult, calibrate_offset, flow_deviation
from flow.impl.forcing import build_forcing
from flow.recorders import standard_recorders, unrescaled_recorders
from flow.stepping import stepper_for
from flow.trajectory import run_trajectory
from gaussian.modified import constants_for, gaussian_constants
from mesh.graphs import make_graph_function, mode_perturbation, model_parameter
from mesh.surfaces import make_model_surface
from runner.anchors import CHECK_ANCHORS, series_header
from runner.checks import ScenarioContext, run_check
from runner.config import ScenarioConfig
from schema.check_report import CheckReport
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2
EXIT_VACUOUS = 3

# manifest fields that differ between otherwise identical runs
VOLATILE_FIELDS = ("timestamp",)


@dataclass
class ScenarioResult:
    name: str
    exit_code: int
    reports: Dict[str, CheckReport] = field(default_factory=dict)
    output_dir: Optional[Path] = None
    error: Optional[str] = None
    constants: Dict[str, float] = field(default_factory=dict)
    trajectory: Optional[FlowTrajectory] = None


def initial_surface(cfg: ScenarioConfig, model: ShrinkerModel, offset: float) -> SurfaceState:
    """
    The configured graph over the model, moved by ``offset``: a dilation by
    1 + offset for the circle, a bump offset * e^{-z^2/l^2} for the cylinder
    (l the envelope, or 2).
    """
    perturbation = None
    if cfg.modes or (offset and model.kind == ModelKind.CYLINDER):
        window = None if model.kind == ModelKind.CIRCLE else cfg.window
        if cfg.modes:
            gf = mode_perturbation(model, cfg.modes, cfg.resolution, window, cfg.envelope)
            parameter, samples = gf.parameter, np.array(gf.samples)
        else:
            parameter = model_parameter(model, cfg.resolution, window)
            samples = np.zeros_like(parameter)
        if model.kind == ModelKind.CYLINDER and offset:
            length = cfg.envelope or 2.0
            samples = samples + offset * np.exp(-(parameter / length) ** 2)
        R = model.radius if model.kind == ModelKind.CIRCLE else cfg.window
        perturbation = make_graph_function(model, parameter, samples, R)

    s = make_model_surface(model, cfg.resolution, perturbation, time=cfg.t_start, window=cfg.window)
    if model.kind == ModelKind.CIRCLE and offset:
        s = s.scaled(1.0 + offset, cfg.t_start)
    return s


def _calibrate(cfg: ScenarioConfig, model: ShrinkerModel) -> CalibrationResult:
    deviation = flow_deviation(
        model,
        build_forcing(cfg.forcing, model.family),
        cfg.t_span,
        cfg.dt,
        cfg.g_rescaling,
        cfg.scheme,
    )
    return calibrate_offset(lambda offset: initial_surface(cfg, model, offset), deviation, limit=DEVIATION_LIMIT)


def overall_exit_code(reports: Dict[str, CheckReport]) -> int:
    verdicts = [r.verdict for r in reports.values()]
    if any(v == Verdict.FAIL for v in verdicts):
        return EXIT_FAIL
    if verdicts and all(v == Verdict.VACUOUS for v in verdicts):
        return EXIT_VACUOUS
    return EXIT_PASS


def _versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_timeseries(traj: FlowTrajectory, path: Path, seed: int) -> None:
    frame = traj.to_frame()
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(series_header(frame.columns) + f" | seed={seed}\n")
        frame.to_csv(f, index=False, float_format="%.12e", lineterminator="\n")


def write_report(report: CheckReport, path: Path, scenario: str, seed: int) -> None:
    payload = report.model_dump(mode="json")
    payload["scenario"] = scenario
    payload["seed"] = seed
    _write_json(path, payload)


def run_scenario(cfg: ScenarioConfig, plots: bool = False) -> ScenarioResult:
    """
    Calibrate (optionally), run the flow, evaluate every configured check and
    write timeseries.csv, reports/<check>.json and manifest.json under
    ``cfg.scenario_dir``. Exit codes: 0 all pass (vacuous allowed), 2 some
    check failed, 3 every check vacuous, 1 configuration or runtime error.
    """
    try:
        return _run(cfg, plots)
    except (LabError, ValueError) as e:
        logger.error(f"[{cfg.name}] {type(e).__name__}: {e}")
        return ScenarioResult(name=cfg.name, exit_code=EXIT_ERROR, error=f"{type(e).__name__}: {e}")


def _run(cfg: ScenarioConfig, plots: bool) -> ScenarioResult:
    model = ShrinkerModel(kind=cfg.model)
    rescaled = cfg.picture == Picture.RESCALED
    logger.info(f"[{cfg.name}] {model.kind.value} / {cfg.picture.value}, N={cfg.resolution}, dt={cfg.dt:g}, "
                f"t in [{cfg.t_start:g}, {cfg.t_end:g}], seed={cfg.seed}, conventions {cfg.conventions()}")
    g_const = gaussian_constants(cfg.functional.K_psi, model.n)
    loc = constants_for(cfg.functional, model.n)
    logger.info(f"[{cfg.name}] c(K_psi, n)={g_const.c:.8g}, C_n={g_const.C_n:.8g}, "
                f"K1={loc.K1:.6g}, K2={loc.K2:.6g}, K3={loc.K3:.6g}")

    # 1. 稳定性
    trial = initial_surface(cfg, model, cfg.offset)
    bound = stepper_for(trial.family, cfg.scheme).stability_bound(trial, rescaled)
    if cfg.dt > bound * (1.0 + 1e-12):
        raise StabilityError(f"dt={cfg.dt:g} exceeds the stability bound {bound:.4g} at resolution {cfg.resolution}")

    # 2. 标定
    calibration = None
    offset = cfg.offset
    if cfg.calibrate:
        calibration = _calibrate(cfg, model)
        offset = calibration.offset
    initial = initial_surface(cfg, model, offset)

    # 3. 演化
    recorders = standard_recorders(model, cfg.functional) if rescaled else unrescaled_recorders()
    traj = run_trajectory(initial, cfg.forcing, cfg.picture, cfg.t_span, cfg.dt, recorders,
                          cfg.record_every, cfg.scheme, progress=cfg.progress)
    error = None
    if traj.truncated and not cfg.expect_truncation:
        error = f"SingularityReached: unexpected truncation at t={traj.truncation.time:.6g}: {traj.truncation.reason}"
        logger.error(f"[{cfg.name}] {error}")

    # 4. 检查
    ctx = ScenarioContext(cfg=cfg, model=model, initial=initial, traj=traj,
                          field=build_forcing(cfg.forcing, model.family))
    reports = {name: run_check(name, ctx) for name in cfg.checks}
    exit_code = EXIT_ERROR if error else overall_exit_code(reports)

    # 5. 输出
    out = cfg.scenario_dir
    (out / "reports").mkdir(parents=True, exist_ok=True)
    write_timeseries(traj, out / "timeseries.csv", cfg.seed)
    for name, report in reports.items():
        write_report(report, out / "reports" / f"{name}.json", cfg.name, cfg.seed)

    constants: Dict[str, float] = {
        "c_K_psi_n": g_const.c,
        "C_n": g_const.C_n,
        "K_psi": float(cfg.functional.K_psi),
        **loc.as_dict(),
        "F_model": model.f_value,
        "offset": offset,
    }
    manifest = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "conventions": cfg.conventions(),
        "constants": constants,
        "calibration": None if calibration is None else {
            "offset": calibration.offset,
            "deviation": calibration.deviation,
            "iterations": calibration.iterations,
            "bracket": list(calibration.bracket),
        },
        "truncation": None if traj.truncation is None else {
            "reason": traj.truncation.reason,
            "time": traj.truncation.time,
            "steps_completed": traj.truncation.steps_completed,
            "expected": cfg.expect_truncation,
        },
        "checks": {name: {"verdict": r.verdict.value, "anchor": CHECK_ANCHORS[name]} for name, r in reports.items()},
        "exit_code": exit_code,
        "error": error,
        "versions": _versions(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(out / "manifest.json", manifest)

    if plots:
        # matplotlib is only needed for the optional figures
        from runner.plots import write_plots
        write_plots(traj, reports, out)

    _log_summary(cfg.name, reports, exit_code)
    return ScenarioResult(name=cfg.name, exit_code=exit_code, reports=reports, output_dir=out, error=error,
                          constants=constants, trajectory=traj)


def _log_summary(name: str, reports: Dict[str, CheckReport], exit_code: int) -> None:
    logger.info("\n" + "=" * 60)
    logger.info(f"{'Check':<26} | {'Verdict':<8} | {'Min slack':<12} | {'Tol':<10}")
    logger.info("-" * 60)
    for check, r in reports.items():
        logger.info(f"{check:<26} | {r.verdict.value:<8} | {r.min_slack:<12.3e} | {r.tolerance:<10.2e}")
    logger.info(f"{name}: exit {exit_code}")
    logger.info("=" * 60 + "\n")


def comparable_manifest(path: Path) -> Dict[str, Any]:
    """Manifest contents without the volatile fields, for reproducibility comparisons."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in VOLATILE_FIELDS:
        data.pop(key, None)
    return data


def output_files(out: Path) -> List[Path]:
    """Every reproducible output under a scenario directory, in a fixed order."""
    out = Path(out)
    files = [out / "timeseries.csv"] + sorted((out / "reports").glob("*.json"))
    return [f for f in files if f.exists()]
