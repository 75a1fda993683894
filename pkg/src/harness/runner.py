"""Run an experiment: trials, calibration, verification and reports."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple

from harness.calibration import CalibrationStore
from harness.config import ExperimentConfig
from harness.experiments import EXPERIMENTS, TrialResult
from harness.reports import detail_path, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3


@dataclass
class RunOutcome:
    exit_code: int
    rows: List[Dict[str, Any]]
    metrics: Dict[str, float]
    violations: List[str] = field(default_factory=list)
    constants: Dict[str, float] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    paths: Tuple[str, ...] = ()


def _run_trial(job: Tuple[ExperimentConfig, int]) -> TrialResult:
    cfg, trial = job
    logger.debug("%s trial %d", cfg.experiment.value, trial)
    return EXPERIMENTS[cfg.experiment].trial(cfg, trial)


def _collect(cfg: ExperimentConfig) -> List[TrialResult]:
    """Trial results in trial order, whatever the worker count."""
    jobs = [(cfg, trial) for trial in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.trials)) as pool:
            return list(pool.map(_run_trial, jobs))
    return [_run_trial(job) for job in jobs]


def _merge_metrics(results: List[TrialResult]) -> Dict[str, float]:
    metrics: Dict[str, float] = {}
    for result in results:
        for metric, value in result.metrics.items():
            metrics[metric] = max(metrics.get(metric, 0.0), value)
    return metrics


def run_experiment(cfg: ExperimentConfig) -> RunOutcome:
    """Run every trial of cfg, then calibrate or verify the measured metrics.

    Raises CalibrationMissing in verify mode when a measured metric has no
    stored constant. The exit code is 1 when an exact assertion fails or a
    metric exceeds its constant, 0 otherwise.
    """
    cfg.validate()
    definition = EXPERIMENTS[cfg.experiment]
    logger.info("running %s on %s: %d trials, seed %d", cfg.experiment.value, cfg.grid, cfg.trials, cfg.seed)

    results = _collect(cfg)
    rows = [row for result in results for row in result.rows]
    metrics = _merge_metrics(results)
    violations = [v for result in results for v in result.violations]
    summary: Dict[str, Any] = {}
    if definition.finalize is not None:
        extra, more = definition.finalize(cfg, rows)
        summary.update(extra)
        violations.extend(more)

    store = CalibrationStore.load(cfg.calib_path)
    constants: Dict[str, float] = {}
    if cfg.calibrate:
        for metric, measured in sorted(metrics.items()):
            entry = store.record(cfg.metric_key(metric), measured, cfg.headroom,
                                 cfg.grid_j, cfg.grid_k, cfg.seed, cfg.trials)
            constants[metric] = entry.constant
        if metrics:
            store.save()
    else:
        for metric, measured in sorted(metrics.items()):
            entry = store.get(cfg.metric_key(metric))
            constants[metric] = entry.constant
            if measured > entry.constant:
                violations.append(
                    f"{cfg.metric_key(metric)}: measured {measured:.6g} exceeds calibrated {entry.constant:.6g}"
                )

    paths: Tuple[str, ...] = ()
    if cfg.out_path:
        json_path = detail_path(cfg.out_path)
        write_csv(cfg.out_path, definition.columns, rows)
        write_json(json_path, {
            "config": {**asdict(cfg), "experiment": cfg.experiment.value},
            "metrics": metrics,
            "constants": constants,
            "summary": summary,
            "violations": violations,
            "rows": rows,
        })
        paths = (cfg.out_path, json_path)

    for violation in violations:
        logger.error(violation)
    exit_code = EXIT_VIOLATION if violations else EXIT_OK
    return RunOutcome(exit_code, rows, metrics, violations, constants, summary, paths)
