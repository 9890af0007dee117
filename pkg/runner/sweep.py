import concurrent.futures
import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from common.enums import Verdict
from common.errors import InvalidInputError
from runner.config import ScenarioConfig, build_scenario
from runner.scenario import EXIT_ERROR, ScenarioResult, run_scenario

logger = logging.getLogger(__name__)

# fields that may not differ between the scenarios of one comparison
FIXED_FIELDS = ("model", "picture", "checks")
# fields that always differ and are not parameters
IGNORED_FIELDS = ("name", "output_dir", "progress")


def grid_points(grid: Mapping[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product of the grid in sorted key order."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise InvalidInputError("sweep grid is empty")
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(list(grid[k]) for k in keys))]


def point_label(point: Mapping[str, Any]) -> str:
    return "__".join(f"{k}={v}" for k, v in sorted(point.items()))


def configs_from_grid(base: Mapping[str, Any], grid: Mapping[str, Sequence[Any]], name: str,
                      **overrides) -> List[ScenarioConfig]:
    """One scenario per grid point; ``base`` holds raw (flat or nested) scenario values."""
    configs = []
    for point in grid_points(grid):
        values = dict(base)
        values.update(point)
        values["name"] = f"{name}/{point_label(point)}"
        configs.append(build_scenario(values, **overrides))
    return configs


def declared_parameters(cfgs: Sequence[ScenarioConfig]) -> List[str]:
    """Flat names of the fields that differ across ``cfgs``; raises if a fixed field differs."""
    if len(cfgs) < 2:
        raise InvalidInputError("a sweep needs at least two scenarios")
    dumps = [_flat(c.model_dump(mode="json")) for c in cfgs]
    keys = sorted(set().union(*dumps))
    differing = [k for k in keys if k not in IGNORED_FIELDS and len({repr(d.get(k)) for d in dumps}) > 1]
    bad = [k for k in differing if k in FIXED_FIELDS]
    if bad:
        raise InvalidInputError(f"incompatible scenarios: {bad} differ")
    if not differing:
        raise InvalidInputError("scenarios do not differ in any parameter")
    return differing


def _flat(d: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and k in ("forcing", "functional"):
            out.update(_flat(v, f"{key}_"))
        else:
            out[key] = v
    return out


def sweep(
    cfgs: Sequence[ScenarioConfig],
    max_workers: int = 4,
    out_path: Optional[Path] = None,
    plots: bool = False,
    progress: bool = True,
) -> pd.DataFrame:
    """
    Run the scenarios in parallel and merge one row per scenario, keyed by the
    declared parameters, in input order.
    """
    params = declared_parameters(cfgs)
    logger.info(f"Sweep over {len(cfgs)} scenarios | parameters {params} | workers={max_workers}")

    results: Dict[int, ScenarioResult] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {executor.submit(run_scenario, cfg, plots): i for i, cfg in enumerate(cfgs)}
        done = tqdm(concurrent.futures.as_completed(future_to_index), total=len(cfgs),
                    desc="sweep", disable=not progress)
        for future in done:
            i = future_to_index[future]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.error(f"scenario {cfgs[i].name} crashed: {e}")
                results[i] = ScenarioResult(name=cfgs[i].name, exit_code=EXIT_ERROR, error=str(e))

    # 合并: input order, never completion order
    rows = [_row(cfgs[i], results[i], params) for i in range(len(cfgs))]
    table = pd.DataFrame(rows)
    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_path, index=False, float_format="%.12e", lineterminator="\n")
    return table


def _row(cfg: ScenarioConfig, result: ScenarioResult, params: List[str]) -> Dict[str, Any]:
    flat = _flat(cfg.model_dump(mode="json"))
    row: Dict[str, Any] = {p: flat.get(p) for p in params}
    row["scenario"] = cfg.name
    row["exit_code"] = result.exit_code
    for name, report in sorted(result.reports.items()):
        row[f"{name}.verdict"] = report.verdict.value
        if report.verdict != Verdict.VACUOUS:
            row[f"{name}.min_slack"] = report.min_slack
            row[f"{name}.tolerance"] = report.tolerance
        for key, const in sorted(report.constants.items()):
            row[f"{name}.{key}"] = const.value
    return row


def is_non_decreasing(table: pd.DataFrame, by: str, column: str, rtol: float = 1e-9) -> bool:
    """Whether ``column`` does not decrease as ``by`` increases."""
    ordered = table.sort_values(by)[column].astype(float).tolist()
    return all(b >= a - rtol * max(1.0, abs(a)) for a, b in zip(ordered[:-1], ordered[1:]))


def observed_orders(table: pd.DataFrame, by: str, column: str) -> List[float]:
    """Observed order log(e_i / e_{i+1}) / log(h_i / h_{i+1}) with h = 1 / ``by`` (a resolution)."""
    ordered = table.sort_values(by)
    n = ordered[by].astype(float).to_numpy()
    e = ordered[column].astype(float).to_numpy()
    return [float(np.log(e[i] / e[i + 1]) / np.log(n[i + 1] / n[i])) for i in range(len(n) - 1)]
