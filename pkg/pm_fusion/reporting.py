"""
reporting.py

Result tables of an experiment and their export as CSV files.

Every table builder returns (header, rows) with a fixed column order, so
identical experiments produce byte-identical files.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .decision_maker import deployment_label
from .harness import EpisodeRecord, ExperimentResult, summarize
from .metrics import METRIC_NAMES, rmse
from .model import SensorType, vec_of_type
from .utils import write_csv

logger = logging.getLogger(__name__)

Table = Tuple[List[str], List[List[Any]]]

METRICS_HEADER = ["time", "method", "metric", "mean", "stdev"]
DEPLOYMENTS_HEADER = ["object_type", "method", "run", "step", "cumulative_sensors"] + [
    f"cumulative_{s.value}" for s in SensorType
] + ["added"]
SETTLEMENTS_HEADER = [
    "object_type",
    "method",
    "run",
    "agent_id",
    "sensor_type",
    "strategy",
    "reports",
    "rewards_sum",
    "varpi",
    "report_at_truth",
    "score",
    "total",
]
SENSORS_HEADER = ["method", "object_type", "sensor_type", "statistic", "time", "mean", "stdev", "count"]
COMPARISON_HEADER = ["metric", "baseline", "pm_mean", "baseline_mean", "improvement_pct"]
EPISODES_HEADER = [
    "method",
    "object_type",
    "object_id",
    "run",
    "seed",
    "steps",
    "sensors_deployed",
    "classified_type",
    "correct",
    "final_confidence",
    "final_rmse",
    "final_nmse_db",
    "final_kl",
]
SWEEP_HEADER = ["w_bel", "time", "method", "mean_rmse", "stdev"]

REFERENCE_METHOD = "pm"


def _object_types(result: ExperimentResult) -> List[str]:
    seen: List[str] = []
    for e in result.episodes:
        if e.object_type not in seen:
            seen.append(e.object_type)
    return seen


def metrics_table(result: ExperimentResult) -> Table:
    rows = [list(row) for row in result.summary()]
    return list(METRICS_HEADER), rows


def deployments_table(result: ExperimentResult) -> Table:
    """Cumulative perceiving sensors per step, with the family breakdown."""
    rows: List[List[Any]] = []
    for e in result.episodes:
        cumulative = {s: 0 for s in SensorType}
        for step in e.steps:
            for sensor, count in step.joined.items():
                cumulative[sensor] += count
            rows.append(
                [e.object_type, e.method, e.run_index, step.time, sum(cumulative.values())]
                + [cumulative[s] for s in SensorType]
                + [deployment_label(step.joined)]
            )
    return list(DEPLOYMENTS_HEADER), rows


def settlements_table(result: ExperimentResult) -> Table:
    rows: List[List[Any]] = []
    for e in result.episodes:
        for record in e.settlement.values():
            rows.append(
                [
                    e.object_type,
                    e.method,
                    e.run_index,
                    record.agent_id,
                    record.sensor_type,
                    record.strategy,
                    record.reports,
                    record.rewards_sum,
                    record.varpi,
                    record.report_at_truth,
                    record.score,
                    record.total,
                ]
            )
    return list(SETTLEMENTS_HEADER), rows


def agent_utility(episode: EpisodeRecord, agent_id: str) -> float:
    """Settled payment when the market settled, otherwise the rewards earned."""
    settled = episode.settlement.get(agent_id)
    if settled is not None:
        return settled.total
    return episode.agents[agent_id].cumulative_reward


def _stats(values: Sequence[float]) -> Tuple[float, float, int]:
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std()), len(array)


def sensors_table(result: ExperimentResult) -> Table:
    """
    Per sensor family: agent utility, report cost per agent, and the RMSE of
    individual reports at every step.
    """
    costs = {s: spec.report_cost for s, spec in result.config.sensors.items()}
    rows: List[List[Any]] = []
    for method in result.methods:
        for object_type in _object_types(result):
            episodes = result.select(method, object_type)
            for sensor in SensorType:
                agents = [
                    (e, a)
                    for e in episodes
                    for a in e.agents.values()
                    if a.sensor_type is sensor and a.reports_made > 0
                ]
                if agents:
                    rows.append(
                        [method, object_type, sensor.value, "utility", ""]
                        + list(_stats([agent_utility(e, a.id) for e, a in agents]))
                    )
                    rows.append(
                        [method, object_type, sensor.value, "report_cost", ""]
                        + list(_stats([a.reports_made * costs[sensor] for _, a in agents]))
                    )
                by_time: Dict[int, List[float]] = {}
                for e in episodes:
                    truth = vec_of_type(e.true_type, result.config.m)
                    for step in e.steps:
                        for report in step.reports:
                            if e.agents[report.agent_id].sensor_type is sensor:
                                by_time.setdefault(step.time, []).append(rmse(report.values, truth))
                for t in sorted(by_time):
                    rows.append([method, object_type, sensor.value, "report_rmse", t] + list(_stats(by_time[t])))
    return list(SENSORS_HEADER), rows


def improvement_pct(metric: str, reference: float, baseline: float) -> float:
    """
    Percentage by which the reference improves on a baseline (positive is better).

    NMSE is in dB, so its improvement is the relative reduction of the
    underlying linear NMSE.
    """
    if metric == "nmse_db":
        return 100.0 * (1.0 - 10.0 ** ((reference - baseline) / 10.0))
    if baseline == 0.0:
        return 0.0
    return 100.0 * (baseline - reference) / baseline


def comparison_table(result: ExperimentResult) -> Table:
    rows: List[List[Any]] = []
    if REFERENCE_METHOD in result.methods and result.select(REFERENCE_METHOD):
        for metric in METRIC_NAMES:
            reference = result.mean_final(REFERENCE_METHOD, metric)
            for baseline in result.methods:
                if baseline == REFERENCE_METHOD or not result.select(baseline):
                    continue
                value = result.mean_final(baseline, metric)
                rows.append([metric, baseline, reference, value, improvement_pct(metric, reference, value)])
    return list(COMPARISON_HEADER), rows


def episodes_table(result: ExperimentResult) -> Table:
    layout = result.config.layout
    rows: List[List[Any]] = []
    for e in result.episodes:
        final = e.final_metrics
        rows.append(
            [
                e.method,
                e.object_type,
                e.object_id,
                e.run_index,
                e.seed,
                e.steps_used,
                len(e.agents),
                layout.type_name(e.classified_type),
                e.correct,
                e.final_belief.max(),
                final.rmse,
                final.nmse_db,
                final.kl,
            ]
        )
    return list(EPISODES_HEADER), rows


def sweep_table(sweep: Mapping[float, ExperimentResult]) -> Table:
    rows: List[List[Any]] = []
    for w_bel in sorted(sweep):
        result = sweep[w_bel]
        for row in summarize(result.episodes, result.methods, result.config.window):
            if row.metric == "rmse":
                rows.append([w_bel, row.time, row.method, row.mean, row.stdev])
    return list(SWEEP_HEADER), rows


def _prepare(out_dir: Union[str, Path]) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"Cannot create output directory {out}: {exc.strerror or exc}") from exc
    return out


def emit_results(result: ExperimentResult, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write every result table of an experiment into a directory.

    Args:
        result: Finished experiment; an experiment without episodes gives
            header-only files.
        out_dir: Output directory, created when missing.

    Returns:
        Paths of the written files.

    Raises:
        OSError: If the directory or a file cannot be written.
    """
    out = _prepare(out_dir)
    tables = {
        "metrics.csv": metrics_table(result),
        "deployments.csv": deployments_table(result),
        "settlements.csv": settlements_table(result),
        "sensors.csv": sensors_table(result),
        "comparison.csv": comparison_table(result),
        "episodes.csv": episodes_table(result),
    }
    written = [write_csv(out / name, header, rows) for name, (header, rows) in tables.items()]
    logger.info(f"Wrote {len(written)} result files to {out}")
    return written


def emit_sweep(sweep: Mapping[float, ExperimentResult], out_dir: Union[str, Path]) -> Path:
    out = _prepare(out_dir)
    header, rows = sweep_table(sweep)
    path = write_csv(out / "wbel_sweep.csv", header, rows)
    logger.info(f"Wrote {path}")
    return path
