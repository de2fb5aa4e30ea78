"""Exhaustive non-preemptive search for tiny instances.

Explores every job order and every integer start on the tick grid (via
memoised recursion over "which jobs are done" x "current tick"), so it
shares no logic with the heuristics it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from ..model import JobInstance, TaskSet

MAX_JOBS = 6
MAX_HYPERPERIOD = 64


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    best_quality: float
    starts: dict[tuple[int, int], int]


def oracle_schedule(jobs: Sequence[JobInstance], tasks: TaskSet) -> OracleResult:
    hp = max(j.deadline for j in jobs)
    if len(jobs) > MAX_JOBS or hp > MAX_HYPERPERIOD:
        raise InstanceTooLarge(f"{len(jobs)} jobs, horizon {hp}")
    jobs = list(jobs)
    full = (1 << len(jobs)) - 1
    neg = float("-inf")

    def value(i: int, t: int) -> float:
        job = jobs[i]
        task = tasks[job.task]
        return task.quality(t - job.release)

    @lru_cache(maxsize=None)
    def best(mask: int, t: int) -> tuple[float, tuple[tuple[int, int], ...]]:
        if mask == full:
            return 0.0, ()
        if t >= hp:
            return neg, ()
        top, plan = best(mask, t + 1)  # stay idle for one tick
        for i, job in enumerate(jobs):
            if mask >> i & 1 or t < job.release or t + job.wcet > job.deadline:
                continue
            rest, tail = best(mask | 1 << i, t + job.wcet)
            if rest == neg:
                continue
            cand = value(i, t) + rest
            if cand > top:
                top, plan = cand, ((i, t),) + tail
        return top, plan

    total, plan = best(0, 0)
    if total == neg:
        return OracleResult(False, 0.0, {})
    return OracleResult(True, total, {jobs[i].key: t for i, t in plan})
