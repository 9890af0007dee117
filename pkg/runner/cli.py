"""
Command-line surface of the lab.

    run            one scenario from a preset or a KEY=value file
    sweep          a parameter grid over one scenario, merged into a table
    list-presets   built-in scenarios
    verify-report  re-check a report file's verdict against its slacks
"""
import argparse
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError

from common.enums import GRescaling, K1Exponent
from common.errors import InvalidInputError, LabError
from runner import config as lab_config
from runner.presets import PRESETS, list_presets
from runner.scenario import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, run_scenario
from runner.sweep import configs_from_grid, sweep
from schema.check_report import CheckReport

logger = logging.getLogger(__name__)

REPORT_CONTEXT_FIELDS = ("scenario", "seed")


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=list_presets(), help="Built-in scenario")
    source.add_argument("--config", type=Path, help="KEY=value scenario file")
    p.add_argument("--output-dir", help="Root output directory (overrides MCFF_LAB_OUTPUT_DIR)")
    p.add_argument("--seed", type=int, help="Seed override")
    p.add_argument("--g-rescaling", choices=[g.value for g in GRescaling],
                   help="Pull-back of the forcing to the rescaled picture")
    p.add_argument("--k1-exponent", choices=[k.value for k in K1Exponent], help="Power of r0 in K1")
    p.add_argument("--plots", action="store_true", help="Also write SVG figures")
    p.add_argument("--progress", action="store_true", help="Show progress bars")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcff-lab", description="Forced mean curvature flow lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario")
    _add_scenario_args(run)

    sw = sub.add_parser("sweep", help="Run a parameter grid over one scenario")
    _add_scenario_args(sw)
    sw.add_argument("--grid", action="append", default=[], metavar="KEY=v1,v2,...",
                    help="Parameter values; repeat for a product grid")
    sw.add_argument("--max-workers", type=int, help="Parallel scenarios (overrides MCFF_LAB_MAX_WORKERS)")
    sw.add_argument("--table", type=Path, help="Output CSV (default <output-dir>/<name>-sweep.csv)")

    sub.add_parser("list-presets", help="List built-in scenarios")

    vr = sub.add_parser("verify-report", help="Re-check a report's verdict against its slacks")
    vr.add_argument("report", type=Path)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out = lab_config.environment_overrides()
    for key in ("output_dir", "seed", "g_rescaling", "k1_exponent"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "progress", False):
        out["progress"] = True
    return out


def _base_values(args: argparse.Namespace):
    """Raw scenario values and the scenario name."""
    if args.preset:
        values = {k: (list(v) if isinstance(v, list) else v) for k, v in PRESETS[args.preset].items()}
        return values, args.preset
    if not args.config.is_file():
        raise InvalidInputError(f"scenario file {args.config} not found")
    values = {k: v for k, v in dotenv_values(args.config).items() if v is not None}
    name = next((v for k, v in values.items() if k.lower() == "name"), args.config.stem)
    return values, name


def parse_grid(items: List[str]) -> Dict[str, List[str]]:
    grid: Dict[str, List[str]] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise InvalidInputError(f"grid entry {item!r} is not KEY=v1,v2,...")
        grid[key.strip().lower()] = [v.strip() for v in raw.split(",") if v.strip()]
    return grid


def _cmd_run(args: argparse.Namespace) -> int:
    values, name = _base_values(args)
    values["name"] = name
    cfg = lab_config.build_scenario(values, **_overrides(args))
    result = run_scenario(cfg, plots=args.plots)
    if result.error:
        logger.error(f"{cfg.name}: {result.error}")
    return result.exit_code


def _cmd_sweep(args: argparse.Namespace) -> int:
    values, name = _base_values(args)
    overrides = _overrides(args)
    cfgs = configs_from_grid(values, parse_grid(args.grid), name, **overrides)
    workers = args.max_workers or lab_config.max_workers()
    table_path = args.table or Path(cfgs[0].output_dir) / f"{name}-sweep.csv"
    table = sweep(cfgs, max_workers=workers, out_path=table_path, plots=args.plots,
                  progress=bool(overrides.get("progress")))
    logger.info(f"sweep table written to {table_path}")
    codes = table["exit_code"].tolist()
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_FAIL if EXIT_FAIL in codes else EXIT_PASS


def verify_report(path: Path) -> int:
    """0 when the stored verdict agrees with the stored slacks and tolerance, 2 otherwise."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in REPORT_CONTEXT_FIELDS:
        payload.pop(key, None)
    try:
        report = CheckReport.model_validate(payload)
    except ValidationError as e:
        logger.error(f"{path}: inconsistent report: {e}")
        return EXIT_FAIL
    logger.info(f"{path}: {report.name} {report.verdict.value} consistent "
                f"(min slack {report.min_slack:.3e}, tol {report.tolerance:.3e})")
    return EXIT_PASS


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(level=lab_config.log_level(),
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in list_presets():
                print(name)
            return EXIT_PASS
        if args.command == "verify-report":
            return verify_report(args.report)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_sweep(args)
    except (LabError, ValueError) as e:
        logger.error(f"Error: {e}")
        return EXIT_ERROR
