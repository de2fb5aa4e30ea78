"""Experiment harness: system generation, baselines, oracle, metrics, sweeps."""

from .baselines import schedule_binpack, schedule_fifo
from .generate import defect_plan, generate_system, generate_tiny, uunifast
from .metrics import MetricsReport, compute_metrics
from .oracle import InstanceTooLarge, oracle_schedule
from .sweep import ALGORITHMS, VARIANTS, ExperimentConfig, make_grid, read_grid, run_sweep, to_csv

__all__ = [
    "ALGORITHMS", "VARIANTS", "ExperimentConfig", "InstanceTooLarge", "MetricsReport", "compute_metrics", "defect_plan",
    "generate_system", "generate_tiny", "make_grid", "oracle_schedule", "read_grid", "run_sweep",
    "schedule_binpack", "schedule_fifo", "to_csv", "uunifast",
]
