"""
Static SVG figures of a scenario: functionals over time and check slacks.
Figures are built without pyplot so sweeps can write them from worker threads.
"""
import logging
from pathlib import Path
from typing import Dict

from matplotlib.figure import Figure

from common.enums import Verdict
from schema.check_report import CheckReport
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

FUNCTIONAL_SERIES = ("F", "F_tilde", "F_tilde_loc")
LOG_SERIES = ("phi_sq", "graph_l2")

# no creation date, so that the figures are byte-stable
SVG_METADATA = {"Date": None}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata=SVG_METADATA, bbox_inches="tight")


def write_plots(traj: FlowTrajectory, reports: Dict[str, CheckReport], out: Path) -> None:
    out = Path(out) / "plots"
    out.mkdir(parents=True, exist_ok=True)
    t = traj.times

    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for name in FUNCTIONAL_SERIES:
        if traj.has(name):
            ax.plot(t, traj.series_array(name), label=name)
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, out / "functionals.svg")

    present = [n for n in LOG_SERIES if traj.has(n)]
    if present:
        fig = Figure(figsize=(6, 4))
        ax = fig.subplots()
        for name in present:
            values = traj.series_array(name)
            ax.semilogy(t, values.clip(min=1e-300), label=name)
        ax.set_xlabel("t")
        ax.legend()
        _save(fig, out / "decay.svg")

    for name, report in reports.items():
        if report.verdict == Verdict.VACUOUS or not report.slacks:
            continue
        fig = Figure(figsize=(6, 3))
        ax = fig.subplots()
        x = report.sample_times if len(report.sample_times) == len(report.slacks) else range(len(report.slacks))
        ax.plot(list(x), report.slacks, marker=".", linestyle="none")
        ax.axhline(-report.tolerance, color="red", linewidth=0.8)
        ax.set_title(f"{name}: {report.verdict.value}")
        _save(fig, out / f"slacks_{name}.svg")
    logger.info(f"plots written to {out}")
