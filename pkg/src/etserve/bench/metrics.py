from __future__ import annotations

from dataclasses import dataclass

from ..model import TaskSet
from ..schedule import ScheduleSolution
from ..sim import SimTrace


@dataclass(frozen=True)
class MetricsReport:
    schedulable: bool
    acceptance: float
    exact_fraction: float
    norm_quality: float

    @property
    def all_met(self) -> bool:
        return self.acceptance == 1.0


def compute_metrics(trace: SimTrace, tasks: TaskSet, sol: ScheduleSolution) -> MetricsReport:
    """Job-level ratios of one simulated run.

    Quality is normalised by the sum of every job's maximum quality.
    """
    records = trace.records
    total = len(records)
    if not total:
        return MetricsReport(sol.feasible, 1.0, 0.0, 0.0)
    met = sum(r.met for r in records)
    exact = sum(r.dispatch is not None and r.dispatch == r.ideal for r in records)
    achieved = sum(r.quality for r in records)
    ceiling = sum(tasks[r.task].v_max for r in records)
    return MetricsReport(
        schedulable=sol.feasible,
        acceptance=met / total,
        exact_fraction=exact / total,
        norm_quality=achieved / ceiling if ceiling else 0.0,
    )
