"""Run comparison: per-task best-score statistics, APR, and learning-curve figures.

A run directory is anything containing a ``progress.csv`` written by the
trainer and a ``resolved.cfg`` snapshot. Runs are grouped by environment;
for each group the canonical statistic is mean +/- population std of the
per-seed maximum evaluation reward. The report is written as a CSV table,
and each task additionally gets a rendered learning-curve figure next to it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np  # noqa: E402

from .config import load_config  # noqa: E402
from .energy import apr  # noqa: E402
from .errors import ConfigError  # noqa: E402


@dataclass
class RunData:
    task: str
    actor: str
    seed: int
    steps: list[int]
    rewards: list[float]

    @property
    def best(self) -> float:
        return max(self.rewards)


def read_run_dir(path: str | Path) -> RunData:
    path = Path(path)
    cfg_path = path / "resolved.cfg"
    csv_path = path / "progress.csv"
    if not csv_path.exists():
        raise ConfigError(f"run directory {path} has no progress.csv")
    if not cfg_path.exists():
        raise ConfigError(f"run directory {path} has no resolved.cfg")
    cfg = load_config(cfg_path)
    steps, rewards = [], []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            steps.append(int(row["step"]))
            rewards.append(float(row["eval_mean_reward"]))
    if not rewards:
        raise ConfigError(f"run directory {path} has an empty progress.csv")
    return RunData(task=cfg.env, actor=cfg.actor, seed=cfg.seeds[0],
                   steps=steps, rewards=rewards)


def format_cell(values: list[float]) -> str:
    """Table cell 'mean+/-std' over per-seed best scores (population std)."""
    mean = float(np.mean(values))
    std = float(np.std(values))
    return f"{_fmt(mean)}±{_fmt(std)}"


def _fmt(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".6g")


def group_by_task(runs: list[RunData]) -> dict[str, list[RunData]]:
    grouped: dict[str, list[RunData]] = {}
    for run in runs:
        grouped.setdefault(run.task, []).append(run)
    return grouped


@dataclass
class ReportResult:
    table_rows: list[dict]
    apr_percent: float | None
    skipped_tasks: list[str]
    csv_path: Path | None = None
    figure_paths: list[Path] | None = None


def build_report(run_dirs: list[str | Path], baseline_dirs: list[str | Path],
                 out_dir: str | Path | None = None,
                 figures: bool = True) -> ReportResult:
    runs = group_by_task([read_run_dir(d) for d in run_dirs])
    baselines = group_by_task([read_run_dir(d) for d in baseline_dirs]) if baseline_dirs else {}

    rows = []
    ratio_inputs: dict[str, tuple[float, float]] = {}
    skipped = []
    for task in sorted(runs):
        best_scores = [run.best for run in runs[task]]
        row = {"task": task, "actor": format_cell(best_scores),
               "baseline": "", "n_seeds": len(best_scores)}
        if task in baselines:
            base_scores = [run.best for run in baselines[task]]
            row["baseline"] = format_cell(base_scores)
            ratio_inputs[task] = (float(np.mean(best_scores)), float(np.mean(base_scores)))
        elif baseline_dirs:
            skipped.append(task)
        rows.append(row)

    apr_percent = apr(ratio_inputs) if ratio_inputs else None
    result = ReportResult(table_rows=rows, apr_percent=apr_percent, skipped_tasks=skipped)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.csv_path = out_dir / "report.csv"
        with open(result.csv_path, "w", encoding="utf-8") as fh:
            fh.write("task,actor,baseline,n_seeds\n")
            for row in rows:
                fh.write(f"{row['task']},{row['actor']},{row['baseline']},{row['n_seeds']}\n")
            if apr_percent is not None:
                fh.write(f"APR,{apr_percent:.2f}%,,\n")
        if figures:
            result.figure_paths = [
                render_learning_curves(task, runs[task], baselines.get(task, []),
                                       out_dir / f"curves_{task.replace('/', '_')}.png")
                for task in sorted(runs)
            ]
    return result


def render_learning_curves(task: str, runs: list[RunData], baselines: list[RunData],
                           path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, group, color in (("actor", runs, "tab:blue"),
                                ("baseline", baselines, "tab:orange")):
        if not group:
            continue
        for run in group:
            ax.plot(run.steps, run.rewards, color=color, alpha=0.35, linewidth=0.9)
        common = min(len(run.rewards) for run in group)
        if common > 0:
            steps = group[0].steps[:common]
            mean = np.mean([run.rewards[:common] for run in group], axis=0)
            ax.plot(steps, mean, color=color, linewidth=2.0, label=f"{label} (mean)")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("evaluation return")
    ax.set_title(task)
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
