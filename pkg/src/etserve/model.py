"""Task, job and timing-accuracy model.

All times are integer ticks (1 tick == 1 ms by convention).  Quality values
are dimensionless floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterable, Sequence

#: Largest representable tick value; matches the 19-bit start/budget fields.
TICK_LIMIT = 1 << 19
MAX_TASK_ID = 127


class Shape(str, Enum):
    SYMMETRIC = "symmetric-linear"
    SPIKE = "spike"
    RIGHT_SIDED = "right-sided-linear"
    ASYMMETRIC = "asymmetric-linear"


class HyperperiodOverflow(ValueError):
    pass


@dataclass(frozen=True)
class TimingAccuracyModel:
    """Single-peak quality curve centred on a task's ideal start offset.

    ``w`` is the half-width of the symmetric shape; ``w_l``/``w_r`` are the
    left/right widths of the asymmetric shape (``w_r`` alone is used by the
    right-sided shape).  The spike shape ignores widths.
    """

    shape: Shape
    v_max: float
    v_min: float = 0.0
    w: int = 1
    w_l: int = 1
    w_r: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", Shape(self.shape))

    def problems(self) -> list[str]:
        out = []
        if not 0 <= self.v_min <= self.v_max:
            out.append("need 0 <= v_min <= v_max")
        if min(self.w, self.w_l, self.w_r) < 1:
            out.append("widths must be >= 1")
        return out

    def curve(self, offset: int) -> float:
        """Quality at ``offset`` ticks away from the ideal start (negative = early)."""
        span = self.v_max - self.v_min
        if self.shape is Shape.SPIKE:
            return float(self.v_max if offset == 0 else self.v_min)
        if self.shape is Shape.SYMMETRIC:
            width = self.w
        elif self.shape is Shape.RIGHT_SIDED:
            if offset < 0:
                return float(self.v_min)
            width = self.w_r
        else:
            width = self.w_l if offset < 0 else self.w_r
        return float(max(self.v_min, self.v_max - span * abs(offset) / width))


def quality(model: TimingAccuracyModel, t: int, wcet: int, deadline: int, ideal: int) -> float:
    """V(Phi, t) for a job starting ``t`` ticks after its release.

    A start that cannot finish by the relative deadline yields 0.
    """
    if t < 0:
        raise ValueError("start time before release")
    if t + wcet > deadline:
        return 0.0
    return model.curve(t - ideal)


@dataclass(frozen=True)
class TaskSpec:
    id: int
    wcet: int
    period: int
    ideal_offset: int
    model: TimingAccuracyModel
    deadline: int | None = None

    def __post_init__(self) -> None:
        if self.deadline is None:
            object.__setattr__(self, "deadline", self.period)

    @property
    def v_max(self) -> float:
        return self.model.v_max

    def quality(self, t: int, wcet: int | None = None) -> float:
        return quality(self.model, t, self.wcet if wcet is None else wcet,
                       self.deadline, self.ideal_offset)


@dataclass(frozen=True)
class JobInstance:
    """The ``j``-th job (1-based) of a task inside one hyperperiod."""

    task: int
    j: int
    release: int
    deadline: int
    ideal: int
    wcet: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.task, self.j)

    def __str__(self) -> str:
        return f"tau{self.task}^{self.j}"


@dataclass(frozen=True)
class Violation:
    task: int
    field: str
    message: str

    def __str__(self) -> str:
        return f"task {self.task}: {self.field}: {self.message}"


class TaskSet:
    """An ordered, immutable collection of tasks indexed by id."""

    def __init__(self, tasks: Iterable[TaskSpec]):
        self.tasks = tuple(tasks)
        self.by_id = {t.id: t for t in self.tasks}

    def __repr__(self) -> str:
        return f"TaskSet({list(self.tasks)!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TaskSet) and self.tasks == other.tasks

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)

    def __getitem__(self, task_id: int) -> TaskSpec:
        return self.by_id[task_id]

    @property
    def hyperperiod(self) -> int:
        return reduce(math.lcm, (t.period for t in self.tasks), 1)

    @property
    def utilization(self) -> float:
        return sum(t.wcet / t.period for t in self.tasks)


def validate_taskset(ts: TaskSet) -> list[Violation]:
    """Every invariant violation in ``ts``; an empty list means valid."""
    out: list[Violation] = []
    seen: set[int] = set()
    for t in ts.tasks:
        if t.id in seen:
            out.append(Violation(t.id, "id", "duplicate id"))
        seen.add(t.id)
        if not 0 <= t.id <= MAX_TASK_ID:
            out.append(Violation(t.id, "id", "id does not fit in 7 bits"))
        if t.period <= 0:
            out.append(Violation(t.id, "period", "period must be positive"))
        if t.deadline != t.period:
            out.append(Violation(t.id, "deadline", "deadline must equal period"))
        if not 0 < t.wcet <= t.deadline:
            out.append(Violation(t.id, "wcet", "need 0 < C <= D"))
        if t.ideal_offset < 0:
            out.append(Violation(t.id, "ideal_offset", "δ < 0"))
        elif t.ideal_offset > t.deadline - t.wcet:
            out.append(Violation(t.id, "ideal_offset", "δ > D−C"))
        out.extend(Violation(t.id, "model", p) for p in t.model.problems())
    return out


def expand_hyperperiod(ts: TaskSet) -> list[JobInstance]:
    """All jobs released in ``[0, T^H)``, ordered by ideal start then task id."""
    hp = ts.hyperperiod
    if hp > TICK_LIMIT:
        raise HyperperiodOverflow(f"hyperperiod {hp} exceeds tick range {TICK_LIMIT}")
    jobs = []
    for t in ts.tasks:
        for j in range(1, hp // t.period + 1):
            r = t.period * (j - 1)
            jobs.append(JobInstance(t.id, j, r, r + t.deadline, r + t.ideal_offset, t.wcet))
    jobs.sort(key=lambda x: (x.ideal, x.task, x.j))
    return jobs


def total_vmax(ts: TaskSet, jobs: Sequence[JobInstance]) -> float:
    return sum(ts[job.task].v_max for job in jobs)
