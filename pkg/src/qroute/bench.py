"""Multi-run benchmark harness: seeded runs, deviation statistics, CSV output.

Runs a (dataset x config) grid, `runs` independent seeded solves per cell,
and reduces each cell to the boxplot ingredients: best distance plus
mean/min/quartile/median/max deviation from the best known solution (BKS).
Deviations are (found - BKS) / BKS as percentages with two decimals;
datasets without a BKS entry keep their rows but leave deviations blank.

Runs are distributed over a bounded thread pool.  Each run is fully
independent — its seed is base seed + run index — and results are keyed by
run index, so aggregation does not depend on completion order.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clustering import DEFAULT_IMPROVEMENT_ITERATIONS, CoreStopRule
from .instances import InstanceKind, ProblemInstance
from .pipeline import solve_cvrp, solve_tsp
from .solver import SolverConfig

DEFAULT_MAX_WORKERS = 4

RUN_FIELDS = ("dataset", "config", "run", "seed", "distance", "bks",
              "deviation_pct", "seconds")
SUMMARY_FIELDS = ("dataset", "config", "runs", "best", "bks", "mean_dev_pct",
                  "min_dev_pct", "q1_dev_pct", "median_dev_pct", "q3_dev_pct",
                  "max_dev_pct")


@dataclass(frozen=True)
class RunResult:
    dataset: str
    config_label: str
    run_index: int
    seed: int
    distance: int
    seconds: float


@dataclass(frozen=True)
class DatasetSummary:
    dataset: str
    config_label: str
    runs: int
    best: int
    bks: int | None
    mean_dev: float | None
    min_dev: float | None
    q1_dev: float | None
    median_dev: float | None
    q3_dev: float | None
    max_dev: float | None


def deviation_percent(found: int, bks: int) -> float:
    return (found - bks) / bks * 100.0


def format_percent(value: float | None) -> str:
    """Two-decimal percent for tables; blank when there is nothing to report."""
    return "" if value is None else f"{value:.2f}"


def load_bks(path: str | Path) -> dict[str, int]:
    """Dataset name -> best known total distance, from a JSON reference file."""
    with open(path) as handle:
        raw = json.load(handle)
    return {str(name): int(value) for name, value in raw.items()}


def _solve_once(instance: ProblemInstance, config: SolverConfig,
                rule: CoreStopRule,
                improvement_iterations: int) -> int:
    if instance.kind is InstanceKind.CVRP:
        return solve_cvrp(
            instance, rule, config,
            improvement_iterations=improvement_iterations,
        ).total_distance
    return solve_tsp(instance, config).length


def run_cell(
    instance: ProblemInstance,
    config: SolverConfig,
    runs: int,
    config_label: str = "default",
    rule: CoreStopRule = CoreStopRule.MAX_DISTANCE,
    improvement_iterations: int = DEFAULT_IMPROVEMENT_ITERATIONS,
    max_workers: int = DEFAULT_MAX_WORKERS,
) -> list[RunResult]:
    """All seeded runs for one (dataset, config) cell, ordered by run index."""
    if runs < 1:
        raise ValueError("runs must be positive")

    def one(run_index: int) -> RunResult:
        run_config = replace(config, seed=config.seed + run_index)
        started = time.perf_counter()
        distance = _solve_once(instance, run_config, rule, improvement_iterations)
        return RunResult(
            dataset=instance.name,
            config_label=config_label,
            run_index=run_index,
            seed=run_config.seed,
            distance=distance,
            seconds=time.perf_counter() - started,
        )

    workers = max(1, min(max_workers, runs))
    if workers == 1:
        return [one(i) for i in range(runs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, range(runs)))
    return sorted(results, key=lambda r: r.run_index)


def summarize(results: Sequence[RunResult],
              bks: dict[str, int] | None = None) -> DatasetSummary:
    """Reduce one cell's runs to best + deviation statistics."""
    if not results:
        raise ValueError("no results to summarize")
    datasets = {r.dataset for r in results}
    labels = {r.config_label for r in results}
    if len(datasets) != 1 or len(labels) != 1:
        raise ValueError("summarize expects a single (dataset, config) cell")
    dataset = results[0].dataset
    best = min(r.distance for r in results)
    reference = (bks or {}).get(dataset)
    if reference is None:
        stats = dict.fromkeys(
            ("mean_dev", "min_dev", "q1_dev", "median_dev", "q3_dev", "max_dev")
        )
    else:
        devs = np.array([deviation_percent(r.distance, reference) for r in results])
        q1, median, q3 = np.percentile(devs, [25, 50, 75])
        stats = {
            "mean_dev": float(devs.mean()),
            "min_dev": float(devs.min()),
            "q1_dev": float(q1),
            "median_dev": float(median),
            "q3_dev": float(q3),
            "max_dev": float(devs.max()),
        }
    return DatasetSummary(
        dataset=dataset,
        config_label=results[0].config_label,
        runs=len(results),
        best=best,
        bks=reference,
        **stats,
    )


def run_benchmark(
    instances: Sequence[ProblemInstance],
    runs: int,
    configs: Sequence[tuple[str, SolverConfig]] | SolverConfig = SolverConfig(),
    bks: dict[str, int] | None = None,
    rule: CoreStopRule = CoreStopRule.MAX_DISTANCE,
    improvement_iterations: int = DEFAULT_IMPROVEMENT_ITERATIONS,
    max_workers: int = DEFAULT_MAX_WORKERS,
) -> tuple[list[RunResult], list[DatasetSummary]]:
    """Full grid: every instance under every labelled config."""
    if isinstance(configs, SolverConfig):
        configs = [("default", configs)]
    all_runs: list[RunResult] = []
    summaries: list[DatasetSummary] = []
    for instance in instances:
        for label, config in configs:
            cell = run_cell(
                instance, config, runs,
                config_label=label, rule=rule,
                improvement_iterations=improvement_iterations,
                max_workers=max_workers,
            )
            all_runs.extend(cell)
            summaries.append(summarize(cell, bks))
    return all_runs, summaries


def _run_row(result: RunResult, bks: dict[str, int] | None) -> dict[str, str]:
    reference = (bks or {}).get(result.dataset)
    return {
        "dataset": result.dataset,
        "config": result.config_label,
        "run": str(result.run_index),
        "seed": str(result.seed),
        "distance": str(result.distance),
        "bks": "" if reference is None else str(reference),
        "deviation_pct": format_percent(
            None if reference is None
            else deviation_percent(result.distance, reference)
        ),
        "seconds": f"{result.seconds:.3f}",
    }


def _summary_row(summary: DatasetSummary) -> dict[str, str]:
    return {
        "dataset": summary.dataset,
        "config": summary.config_label,
        "runs": str(summary.runs),
        "best": str(summary.best),
        "bks": "" if summary.bks is None else str(summary.bks),
        "mean_dev_pct": format_percent(summary.mean_dev),
        "min_dev_pct": format_percent(summary.min_dev),
        "q1_dev_pct": format_percent(summary.q1_dev),
        "median_dev_pct": format_percent(summary.median_dev),
        "q3_dev_pct": format_percent(summary.q3_dev),
        "max_dev_pct": format_percent(summary.max_dev),
    }


def write_run_csv(path: str | Path, results: Iterable[RunResult],
                  bks: dict[str, int] | None = None) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=RUN_FIELDS)
        writer.writeheader()
        for result in results:
            writer.writerow(_run_row(result, bks))


def write_summary_csv(path: str | Path,
                      summaries: Iterable[DatasetSummary]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        for summary in summaries:
            writer.writerow(_summary_row(summary))
