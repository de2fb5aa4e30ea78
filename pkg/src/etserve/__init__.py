"""Execution-time-server scheduling for timing-accurate real-time I/O."""

from .ets import EtsProgram, finalize
from .model import (JobInstance, Shape, TaskSet, TaskSpec, TimingAccuracyModel,
                    expand_hyperperiod, quality, validate_taskset)
from .schedule import ScheduleSolution, allocate_and_schedule, schedule_proposed

__version__ = "0.1.0"

__all__ = [
    "EtsProgram", "JobInstance", "ScheduleSolution", "Shape", "TaskSet", "TaskSpec",
    "TimingAccuracyModel", "allocate_and_schedule", "expand_hyperperiod", "finalize",
    "quality", "schedule_proposed", "validate_taskset",
]
