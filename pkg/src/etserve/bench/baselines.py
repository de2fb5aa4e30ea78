"""Reference list schedulers the proposed method is compared against.

Both use one wall-clock bin spanning the hyperperiod and never reserve
slack for overruns.
"""

from __future__ import annotations

from typing import Sequence

from ..model import JobInstance
from ..schedule import QUALITY, Placement, ScheduleSolution, ServerDraft, free_intervals


def _hyperperiod(jobs: Sequence[JobInstance]) -> int:
    # the last job of every task ends exactly at the hyperperiod
    return max(j.deadline for j in jobs)


def schedule_fifo(jobs: Sequence[JobInstance], arrival: str = "ideal") -> ScheduleSolution:
    """Single FIFO queue served back to back.

    With ``arrival="ideal"`` each job is triggered at its ideal start and
    waits behind whatever arrived earlier, the way a timestamped I/O
    controller behaves.  ``arrival="release"`` enqueues jobs at release and
    starts them as soon as possible instead.
    """
    if arrival not in ("ideal", "release"):
        raise ValueError(f"unknown arrival {arrival!r}")
    at = (lambda j: j.ideal) if arrival == "ideal" else (lambda j: j.release)
    name = "fifo" if arrival == "ideal" else "fifo-release"
    hp = _hyperperiod(jobs)
    server = ServerDraft(QUALITY, 0, hp)
    clock = 0
    for job in sorted(jobs, key=lambda j: (at(j), j.task, j.j)):
        theta = max(at(job), clock)
        if theta + job.wcet > job.deadline:
            return ScheduleSolution([server], hp, feasible=False, unplaced=job, algorithm=name)
        server.placements.append(Placement(job, theta))
        clock = theta + job.wcet
    return ScheduleSolution([server], hp, algorithm=name)


def _first_fit(busy: list[tuple[int, int]], job: JobInstance, hp: int) -> int | None:
    """Earliest free start at or after the ideal offset, else the latest one before it."""
    gaps = free_intervals(busy, hp)
    last = job.deadline - job.wcet
    for a, b in gaps:
        t = max(a, job.ideal)
        if t <= last and t + job.wcet <= b:
            return t
    for a, b in reversed(gaps):
        t = min(b - job.wcet, job.ideal - 1, last)
        if t >= max(a, job.release):
            return t
    return None


def schedule_binpack(jobs: Sequence[JobInstance]) -> ScheduleSolution:
    """Pack jobs by ideal offset, ignoring how tight their deadlines are."""
    hp = _hyperperiod(jobs)
    busy: list[tuple[int, int]] = []
    placed = []
    for job in sorted(jobs, key=lambda j: (j.ideal, j.task, j.j)):
        theta = _first_fit(busy, job, hp)
        if theta is None:
            server = ServerDraft(QUALITY, 0, hp, sorted(placed, key=lambda p: p.theta))
            return ScheduleSolution([server], hp, feasible=False, unplaced=job, algorithm="binpack")
        placed.append(Placement(job, theta))
        busy.append((theta, theta + job.wcet))
    server = ServerDraft(QUALITY, 0, hp, sorted(placed, key=lambda p: p.theta))
    return ScheduleSolution([server], hp, algorithm="binpack")
